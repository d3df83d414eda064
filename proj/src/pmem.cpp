#include "rflock/pmem.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>

namespace rflock {

Memory::Memory() { queues_.resize(8); }

Memory::Cell& Memory::cell(Address a) {
  return chunks_[a.id >> kChunkBits][a.id & (kChunk - 1)];
}

const Memory::Cell& Memory::cell(Address a) const {
  return chunks_[a.id >> kChunkBits][a.id & (kChunk - 1)];
}

void Memory::ensure_capacity(uint32_t id) {
  size_t chunk = id >> kChunkBits;
  if (chunk >= kMaxChunks) throw ScenarioError("memory: cell capacity exceeded");
  if (!chunks_[chunk]) chunks_[chunk] = std::make_unique<Cell[]>(kChunk);
}

void Memory::check_known(Address a) const {
  if (!a.valid() || a.id >= next_id_.load(std::memory_order_relaxed))
    throw ScenarioError("memory: access to unknown address " +
                        std::to_string(a.id));
}

std::vector<FlushOp>& Memory::q(int tid) {
  if (tid < 0) throw ScenarioError("memory: bad thread id");
  if (static_cast<size_t>(tid) >= queues_.size()) queues_.resize(tid + 1);
  return queues_[tid];
}

Address Memory::allocate(std::span<const Word> init, Storage storage,
                         AllocKind kind) {
  std::lock_guard<std::mutex> g(alloc_mu_);
  uint32_t n = static_cast<uint32_t>(init.size());
  if (n == 0) throw ScenarioError("memory: zero-size allocation");
  uint32_t base = next_id_.fetch_add(n);
  ensure_capacity(base + n - 1);
  for (uint32_t i = 0; i < n; ++i) {
    Cell& c = cell(Address{base + i});
    c.vol.store(init[i].bits(), std::memory_order_relaxed);
    // Allocation initializes the persisted image as well; see Memory's
    // contract about the simulated persistent allocator.
    c.pers.store(storage == Storage::persistent ? init[i].bits() : 0,
                 std::memory_order_relaxed);
    c.alloc = static_cast<uint32_t>(allocs_.size());
  }
  allocs_.push_back({base, n, storage, AllocState::live, kind, epoch_});
  return Address{base};
}

Address Memory::allocate_n(uint32_t n, Word fill, Storage storage,
                           AllocKind kind) {
  std::vector<Word> init(n, fill);
  return allocate(init, storage, kind);
}

const AllocationRecord* Memory::find_allocation(Address a) const {
  if (!a.valid() || a.id >= next_id_.load(std::memory_order_relaxed))
    return nullptr;
  return &allocs_[cell(a).alloc];
}

void Memory::free_block(Address base) {
  std::lock_guard<std::mutex> g(alloc_mu_);
  check_known(base);
  AllocationRecord& r = allocs_[cell(base).alloc];
  if (r.base != base.id || r.state != AllocState::live) {
    ++alloc_violations_;
    return;
  }
  r.state = AllocState::freed;
}

void Memory::reclaim_block(Address base) {
  std::lock_guard<std::mutex> g(alloc_mu_);
  check_known(base);
  AllocationRecord& r = allocs_[cell(base).alloc];
  if (r.base != base.id || r.state != AllocState::live) {
    ++alloc_violations_;  // double reclamation or reclaim of a freed block
    return;
  }
  r.state = AllocState::reclaimed;
}

void Memory::step(int tid, const char* op, Address a, Word v) {
  if (yield_) yield_(StepInfo{tid, op, a, v});
  ++steps_;
  if (trace_) {
    *trace_ << "step=" << steps_ << " t=" << tid << " op=" << op
            << " addr=" << a.id << " val=" << v.render() << "\n";
  }
}

Word Memory::read(int tid, Address a) {
  check_known(a);
  step(tid, "read", a, Word::bottom());
  if (!live(a))
    throw ScenarioError("memory: read of crash-dropped volatile cell " +
                        std::to_string(a.id));
  return Word::from_bits(cell(a).vol.load());
}

void Memory::write(int tid, Address a, Word v) {
  check_known(a);
  step(tid, "write", a, v);
  Cell& c = cell(a);
  c.vol.store(v.bits());
  ++c.wseq;
  if (record_history_) {
    if (histories_.size() <= a.id) histories_.resize(a.id + 1);
    histories_[a.id].push_back(v);
  }
}

bool Memory::cas(int tid, Address a, Word expect, Word desired) {
  check_known(a);
  step(tid, "cas", a, desired);
  Cell& c = cell(a);
  uint64_t e = expect.bits();
  bool ok = c.vol.compare_exchange_strong(e, desired.bits());
  if (ok) {
    ++c.wseq;
    if (record_history_) {
      if (histories_.size() <= a.id) histories_.resize(a.id + 1);
      histories_[a.id].push_back(desired);
    }
  }
  return ok;
}

void Memory::pwb(int tid, Address a) {
  check_known(a);
  step(tid, "pwb", a, Word::bottom());
  ++counters_.pwb;
  Cell& c = cell(a);
  q(tid).push_back(FlushOp{false, a, Word::from_bits(c.vol.load()), c.wseq});
}

void Memory::pfence(int tid) {
  step(tid, "pfence", Address{}, Word::bottom());
  ++counters_.pfence;
  q(tid).push_back(FlushOp{true, Address{}, Word::bottom(), 0});
}

void Memory::psync(int tid) {
  step(tid, "psync", Address{}, Word::bottom());
  ++counters_.psync;
  auto& qq = q(tid);
  for (const FlushOp& f : qq) apply_flush(f);
  qq.clear();
}

void Memory::apply_flush(const FlushOp& f) {
  if (f.barrier) return;
  Cell& c = cell(f.addr);
  // Per-location write-backs preserve program order: a stale snapshot never
  // overwrites a newer persisted value.
  if (f.wseq < c.pers_seq) return;
  c.pers.store(f.snapshot.bits(), std::memory_order_relaxed);
  c.pers_seq = f.wseq;
}

void Memory::evict(Address a) {
  check_known(a);
  const AllocationRecord* r = find_allocation(a);
  if (!r || r->storage != Storage::persistent)
    throw ScenarioError("memory: evict of non-persistent cell");
  Cell& c = cell(a);
  c.pers.store(c.vol.load(), std::memory_order_relaxed);
  c.pers_seq = c.wseq;
}

void Memory::drain(int tid, size_t upto) {
  auto& qq = q(tid);
  upto = std::min(upto, qq.size());
  for (size_t i = 0; i < upto; ++i) apply_flush(qq[i]);
  qq.erase(qq.begin(), qq.begin() + upto);
}

void Memory::drain_downset(int tid, const std::vector<char>& take) {
  auto& qq = q(tid);
  for (size_t i = 0; i < qq.size() && i < take.size(); ++i)
    if (take[i]) apply_flush(qq[i]);
}

size_t Memory::queue_size(int tid) const {
  if (static_cast<size_t>(tid) >= queues_.size()) return 0;
  return queues_[tid].size();
}

const std::vector<FlushOp>& Memory::queue(int tid) const {
  static const std::vector<FlushOp> empty;
  if (static_cast<size_t>(tid) >= queues_.size()) return empty;
  return queues_[tid];
}

void Memory::crash() {
  ++epoch_;
  for (auto& qq : queues_) qq.clear();
  uint32_t hi = next_id_.load(std::memory_order_relaxed);
  for (uint32_t id = 1; id < hi; ++id) {
    Cell& c = cell(Address{id});
    const AllocationRecord& r = allocs_[c.alloc];
    if (r.storage == Storage::persistent)
      c.vol.store(c.pers.load(std::memory_order_relaxed),
                  std::memory_order_relaxed);
    // volatile allocations are dropped; live() reports them dead via epoch
  }
}

Word Memory::peek(Address a) const {
  check_known(a);
  return Word::from_bits(cell(a).vol.load());
}

Word Memory::persisted(Address a) const {
  check_known(a);
  return Word::from_bits(cell(a).pers.load(std::memory_order_relaxed));
}

void Memory::poke(Address a, Word v) {
  check_known(a);
  cell(a).vol.store(v.bits());
  ++cell(a).wseq;
}

void Memory::poke_init(Address a, Word v) {
  check_known(a);
  Cell& c = cell(a);
  c.vol.store(v.bits());
  c.pers.store(v.bits(), std::memory_order_relaxed);
}

bool Memory::exists(Address a) const {
  return a.valid() && a.id < next_id_.load(std::memory_order_relaxed);
}

bool Memory::live(Address a) const {
  if (!exists(a)) return false;
  const AllocationRecord& r = allocs_[cell(a).alloc];
  return r.storage == Storage::persistent || r.epoch == epoch_;
}

bool Memory::live_persistent(Address a) const {
  if (!exists(a)) return false;
  return allocs_[cell(a).alloc].storage == Storage::persistent;
}

uint64_t Memory::write_seq(Address a) const {
  check_known(a);
  return cell(a).wseq;
}

const std::vector<Word>& Memory::volatile_history(Address a) const {
  static const std::vector<Word> empty;
  if (histories_.size() <= a.id) return empty;
  return histories_[a.id];
}

std::vector<uint32_t> Memory::mark_reachable(std::span<const Address> roots) const {
  std::vector<char> marked(allocs_.size(), 0);
  std::vector<uint32_t> stack;
  auto mark_addr = [&](Address a) {
    if (!exists(a)) return;
    uint32_t ai = cell(a).alloc;
    if (!marked[ai]) {
      marked[ai] = 1;
      stack.push_back(ai);
    }
  };
  for (Address r : roots) mark_addr(r);
  while (!stack.empty()) {
    uint32_t ai = stack.back();
    stack.pop_back();
    const AllocationRecord& r = allocs_[ai];
    if (r.storage == Storage::volatile_ && r.epoch != epoch_) continue;
    for (uint32_t i = 0; i < r.count; ++i) {
      Word w = Word::from_bits(cell(Address{r.base + i}).vol.load());
      if (w.tag() == Tag::handle && w.as_handle().valid()) mark_addr(w.as_handle());
      if (w.tag() == Tag::lockdescr && w.ld_descr().valid()) mark_addr(w.ld_descr());
    }
  }
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < marked.size(); ++i)
    if (marked[i]) out.push_back(i);
  return out;
}

size_t Memory::sweep_unreachable(std::span<const Address> roots) {
  auto reached = mark_reachable(roots);
  std::vector<char> r(allocs_.size(), 0);
  for (uint32_t i : reached) r[i] = 1;
  size_t n = 0;
  for (uint32_t i = 0; i < allocs_.size(); ++i) {
    AllocationRecord& a = allocs_[i];
    if (a.state != AllocState::live) continue;
    if (a.storage == Storage::volatile_ && a.epoch != epoch_) {
      a.state = AllocState::freed;  // dropped wholesale by the crash
      continue;
    }
    if (!r[i]) {
      a.state = AllocState::reclaimed;
      ++n;
    }
  }
  return n;
}

bool Memory::allocation_balance_ok(std::span<const Address> roots,
                                   std::string* diag) const {
  if (alloc_violations_ != 0) {
    if (diag) *diag = "allocator violations: " + std::to_string(alloc_violations_);
    return false;
  }
  auto reached = mark_reachable(roots);
  std::vector<char> r(allocs_.size(), 0);
  for (uint32_t i : reached) r[i] = 1;
  for (uint32_t i = 0; i < allocs_.size(); ++i) {
    const AllocationRecord& a = allocs_[i];
    if (a.state != AllocState::live) continue;
    if (a.kind == AllocKind::scratch) continue;
    if (a.storage == Storage::volatile_ && a.epoch != epoch_) continue;
    if (!r[i]) {
      if (diag)
        *diag = "leak: live unreachable block base=" + std::to_string(a.base) +
                " count=" + std::to_string(a.count);
      return false;
    }
  }
  return true;
}

MemorySnapshot Memory::snapshot() const {
  MemorySnapshot s;
  uint32_t hi = next_id_.load(std::memory_order_relaxed);
  s.cells.reserve(hi);
  s.cells.push_back({});
  for (uint32_t id = 1; id < hi; ++id) {
    const Cell& c = cell(Address{id});
    s.cells.push_back({c.vol.load(), c.pers.load(std::memory_order_relaxed),
                       c.wseq, c.pers_seq});
  }
  s.allocations = allocs_;
  s.queues = queues_;
  s.epoch = epoch_;
  s.counters = counters_;
  s.alloc_violations = alloc_violations_;
  return s;
}

void Memory::restore(const MemorySnapshot& s) {
  uint32_t hi = next_id_.load(std::memory_order_relaxed);
  if (s.cells.size() > hi)
    throw ScenarioError("memory: snapshot does not match this memory");
  // Cells allocated after the snapshot stay allocated (ids are never reused);
  // their allocation records are truncated away, so they become unknown.
  for (uint32_t id = 1; id < s.cells.size(); ++id) {
    Cell& c = cell(Address{id});
    c.vol.store(s.cells[id].vol);
    c.pers.store(s.cells[id].pers, std::memory_order_relaxed);
    c.wseq = s.cells[id].wseq;
    c.pers_seq = s.cells[id].pers_seq;
  }
  next_id_.store(static_cast<uint32_t>(s.cells.size()),
                 std::memory_order_relaxed);
  allocs_ = s.allocations;
  queues_ = s.queues;
  epoch_ = s.epoch;
  counters_ = s.counters;
  alloc_violations_ = s.alloc_violations;
  for (uint32_t id = 1; id < s.cells.size(); ++id)
    cell(Address{id}).alloc = 0;
  // Rebuild cell→allocation indices.
  for (uint32_t i = 0; i < allocs_.size(); ++i)
    for (uint32_t k = 0; k < allocs_[i].count; ++k)
      cell(Address{allocs_[i].base + k}).alloc = i;
}

}  // namespace rflock
