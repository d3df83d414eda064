#include "rflock/runtime.hpp"

#include <cstdlib>
#include <iostream>

namespace rflock {

Runtime::Runtime(RuntimeConfig c) : cfg(c) {
  if (const char* tr = std::getenv("RFLOCK_TRACE"); tr && tr[0] == '1')
    mem.set_trace(&std::cerr);
  ctxs_.resize(cfg.threads);
  for (int i = 0; i < cfg.threads; ++i) ctxs_[i].reset(i);
  rd_base_ = mem.allocate_n(cfg.threads, Word::bottom(), Storage::persistent);
  topd_base_ = mem.allocate_n(cfg.threads, Word::null_handle(), Storage::volatile_);
  topl_base_ = mem.allocate_n(cfg.threads, Word::null_handle(), Storage::volatile_);
  roots_.push_back(rd_base_);
  for (int i = 1; i < cfg.threads; ++i) roots_.push_back(rd_base_.plus(i));
}

int Runtime::register_thunk(Thunk f) {
  std::lock_guard<std::mutex> g(mu_);
  thunks_.push_back(std::move(f));
  return static_cast<int>(thunks_.size());
}

bool Runtime::run_thunk(int id, ThreadContext& c) {
  Thunk f;
  {
    std::lock_guard<std::mutex> g(mu_);
    if (id <= 0 || id > static_cast<int>(thunks_.size()))
      throw ScenarioError("runtime: unknown thunk id " + std::to_string(id));
    f = thunks_[id - 1];
  }
  return f(*this, c);
}

void Runtime::reset_after_crash() {
  std::lock_guard<std::mutex> g(mu_);
  for (int i = 0; i < cfg.threads; ++i) ctxs_[i].reset(i);
  thunks_.clear();
  descr_lock_.clear();
  topd_base_ = mem.allocate_n(cfg.threads, Word::null_handle(), Storage::volatile_);
  topl_base_ = mem.allocate_n(cfg.threads, Word::null_handle(), Storage::volatile_);
}

void Runtime::reclaim_retired(Address base) {
  const AllocationRecord* rec = mem.find_allocation(base);
  if (rec && rec->kind == AllocKind::log && rec->base == base.id) {
    for (uint32_t i = 0; i < rec->count; ++i) {
      Word slot = mem.peek(base.plus(i));
      if (slot.is_bottom()) break;
      if (slot.tag() != Tag::handle) continue;
      const AllocationRecord* e = mem.find_allocation(slot.as_handle());
      if (e && e->kind == AllocKind::log_entry && e->state == AllocState::live)
        mem.reclaim_block(slot.as_handle());
    }
  }
  mem.reclaim_block(base);
}

void Runtime::drain_retire_sets() {
  for (auto& c : ctxs_) {
    for (Address a : c.retire_set) reclaim_retired(a);
    c.retire_set.clear();
  }
}

}  // namespace rflock
