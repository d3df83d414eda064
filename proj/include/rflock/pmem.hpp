#pragma once

#include <atomic>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rflock/word.hpp"

namespace rflock {

// Scenario-level error: a misconfigured or out-of-budget run (log overflow,
// access to an unknown address, ...). The harness turns these into failures.
struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

enum class Storage : uint8_t { persistent, volatile_ };

enum class AllocState : uint8_t { live, freed, reclaimed };

// log_entry blocks are owned by the log slot that references them and are
// reclaimed together with their log. scratch blocks are harness plumbing
// (per-invocation result cells) outside the create/retire lifecycle and are
// exempt from the allocation-balance check.
enum class AllocKind : uint8_t { generic, log, log_entry, scratch };

struct AllocationRecord {
  uint32_t base = 0;
  uint32_t count = 0;
  Storage storage = Storage::persistent;
  AllocState state = AllocState::live;
  AllocKind kind = AllocKind::generic;
  uint32_t epoch = 0;  // volatile_heap_epoch at allocation time
};

struct StepInfo {
  int tid = 0;
  const char* op = "";
  Address addr{};
  Word val{};
};

struct PersistCounters {
  uint64_t pwb = 0;
  uint64_t pfence = 0;
  uint64_t psync = 0;
  friend PersistCounters operator-(PersistCounters a, PersistCounters b) {
    return {a.pwb - b.pwb, a.pfence - b.pfence, a.psync - b.psync};
  }
  friend bool operator==(const PersistCounters&, const PersistCounters&) = default;
};

// One entry of a per-thread flush queue: a (cell, snapshot) pair queued by
// pwb, or a barrier queued by pfence.
struct FlushOp {
  bool barrier = false;
  Address addr{};
  Word snapshot{};
  uint32_t wseq = 0;  // per-location order tag of the snapshot
};

struct CellImage {
  uint64_t vol = 0;
  uint64_t pers = 0;
  uint32_t wseq = 0;
  uint32_t pers_seq = 0;
};

struct MemorySnapshot {
  std::vector<CellImage> cells;
  std::vector<AllocationRecord> allocations;
  std::vector<std::vector<FlushOp>> queues;
  uint32_t epoch = 0;
  PersistCounters counters;
  uint64_t alloc_violations = 0;
};

// Simulated explicit-epoch persistent memory. Every shared word has a
// volatile view and a persisted view; pwb/pfence/psync move snapshots from
// the volatile side to the persisted side through per-thread ordered queues.
// Whole-system crashes reset the volatile side.
//
// All operations that touch mutable shared state announce themselves through
// the yield hook first; under the cooperative scheduler that is the one and
// only preemption point per primitive. peek()/poke_* bypass the hook and are
// reserved for reads of immutable state and for setup/inspection.
class Memory {
 public:
  Memory();

  using YieldFn = std::function<void(const StepInfo&)>;
  void set_yield_hook(YieldFn fn) { yield_ = std::move(fn); }
  void set_trace(std::ostream* os) { trace_ = os; }

  Address allocate(std::span<const Word> init, Storage storage,
                   AllocKind kind = AllocKind::generic);
  Address allocate_n(uint32_t n, Word fill, Storage storage,
                     AllocKind kind = AllocKind::generic);
  void free_block(Address base);     // loser deallocation (Create race)
  void reclaim_block(Address base);  // sysRetire

  Word read(int tid, Address a);
  void write(int tid, Address a, Word v);
  bool cas(int tid, Address a, Word expect, Word desired);
  void pwb(int tid, Address a);
  void pfence(int tid);
  void psync(int tid);

  // Harness-side knobs.
  void evict(Address a);                        // persisted := volatile
  void drain(int tid, size_t upto);             // complete first `upto` queue items
  void drain_downset(int tid, const std::vector<char>& take);
  void crash();                                 // wipe all volatile state
  size_t queue_size(int tid) const;
  const std::vector<FlushOp>& queue(int tid) const;

  // Unscheduled accessors for immutable state / inspection.
  Word peek(Address a) const;
  Word persisted(Address a) const;
  void poke(Address a, Word v);               // volatile view only
  void poke_init(Address a, Word v);          // both views (initialization)

  bool exists(Address a) const;
  bool live(Address a) const;  // allocated and not wiped by a crash
  bool live_persistent(Address a) const;
  uint32_t epoch() const { return epoch_; }

  const PersistCounters& counters() const { return counters_; }
  uint64_t write_seq(Address a) const;

  // Allocation bookkeeping + reachability sweep (the simulated persistent
  // allocator's leak check).
  const std::vector<AllocationRecord>& allocations() const { return allocs_; }
  const AllocationRecord* find_allocation(Address a) const;
  uint64_t alloc_violations() const { return alloc_violations_; }
  std::vector<uint32_t> mark_reachable(std::span<const Address> roots) const;
  // Reclaims live-but-unreachable persistent blocks; returns how many.
  size_t sweep_unreachable(std::span<const Address> roots);
  // True iff every block is freed, reclaimed, or reachable from the roots.
  bool allocation_balance_ok(std::span<const Address> roots,
                             std::string* diag = nullptr) const;

  void record_history(bool on) { record_history_ = on; }
  const std::vector<Word>& volatile_history(Address a) const;

  MemorySnapshot snapshot() const;
  void restore(const MemorySnapshot& s);

  uint64_t steps() const { return steps_; }

 private:
  struct Cell {
    std::atomic<uint64_t> vol{0};
    std::atomic<uint64_t> pers{0};
    uint32_t alloc = 0;     // index into allocs_
    uint32_t wseq = 0;
    uint32_t pers_seq = 0;  // wseq of the last applied write-back
  };

  static constexpr size_t kChunkBits = 13;
  static constexpr size_t kChunk = size_t{1} << kChunkBits;
  static constexpr size_t kMaxChunks = 1 << 12;

  Cell& cell(Address a);
  const Cell& cell(Address a) const;
  void ensure_capacity(uint32_t id);
  void check_known(Address a) const;
  void step(int tid, const char* op, Address a, Word v);
  void apply_flush(const FlushOp& f);
  std::vector<FlushOp>& q(int tid);

  std::array<std::unique_ptr<Cell[]>, kMaxChunks> chunks_;
  std::atomic<uint32_t> next_id_{1};
  std::vector<AllocationRecord> allocs_;
  std::vector<std::vector<FlushOp>> queues_;
  PersistCounters counters_;
  uint32_t epoch_ = 0;
  uint64_t steps_ = 0;
  uint64_t alloc_violations_ = 0;
  bool record_history_ = false;
  std::vector<std::vector<Word>> histories_;  // indexed by cell id when recording
  YieldFn yield_;
  std::ostream* trace_ = nullptr;
  mutable std::mutex alloc_mu_;  // native-backend allocation safety
};

}  // namespace rflock
