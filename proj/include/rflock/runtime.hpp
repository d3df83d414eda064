#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "rflock/pmem.hpp"
#include "rflock/word.hpp"

namespace rflock {

class Runtime;
struct ThreadContext;

// A critical section body: argument-free apart from the execution
// environment, returns whether the attempt succeeded. All shared accesses go
// through load/store/cam/create/retire and nested try_lock.
using Thunk = std::function<bool(Runtime&, ThreadContext&)>;

enum LogKind { kRead = 0, kUpdate = 1, kLock = 2 };

struct ThreadContext {
  int tid = 0;
  Address log[3] = {};  // current log pointers; invalid() when outside a CS
  int pos[3] = {0, 0, 0};
  std::vector<Address> retire_set;
  int wth = 0;  // currently executing (helped) thread; own tid when not helping
  std::vector<int> thunk_frames;  // validator bookkeeping

  void reset(int id) {
    tid = id;
    log[0] = log[1] = log[2] = Address{};
    pos[0] = pos[1] = pos[2] = 0;
    retire_set.clear();
    wth = id;
    thunk_frames.clear();
  }
};

enum class FaultInject {
  none,
  skip_recover_cas,     // recovery skips the first replayed CAS of each log
  skip_rd_pwb,          // run_descr omits the pwb of the RD slot
  apply_before_persist  // updates applied before the log and RD are persisted
};

struct RuntimeConfig {
  int threads = 2;
  int log_size = 64;
  FaultInject fault = FaultInject::none;
  bool record_accesses = false;  // thunk-discipline validator input
};

// One logged shared access inside a thunk, as seen by the validator.
struct AccessRecord {
  int thunk_id = 0;
  Address lock{};       // lock protecting the thunk's critical section
  bool is_store = false;
  Address cell{};
  bool from_update_log = false;  // load served by FetchValue from own store
};

// wth switches observed by run_descr when a thread starts helping.
struct HelpEvent {
  int tid = 0;
  int new_wth = 0;
  Address entered{};   // descriptor passed to run_descr
  Address executed{};  // descriptor whose thunk actually ran
};

class Runtime {
 public:
  explicit Runtime(RuntimeConfig cfg);

  Memory mem;
  RuntimeConfig cfg;

  ThreadContext& ctx(int tid) { return ctxs_[tid]; }
  int threads() const { return cfg.threads; }

  // Shared directories.
  Address rd_slot(int tid) const { return rd_base_.plus(tid); }
  Address topd_slot(int tid) const { return topd_base_.plus(tid); }
  Address topl_slot(int tid) const { return topl_base_.plus(tid); }

  int register_thunk(Thunk f);
  bool run_thunk(int id, ThreadContext& c);

  // Scenario roots for reachability. RD and the topD/topL directories are
  // always included (the latter track the post-crash reallocation).
  void add_root(Address a) { roots_.push_back(a); }
  std::vector<Address> roots() const {
    std::vector<Address> r = roots_;
    for (int i = 0; i < cfg.threads; ++i) {
      r.push_back(topd_slot(i));
      r.push_back(topl_slot(i));
    }
    return r;
  }

  // Crash recovery plumbing: wipes runtime-side volatile state after
  // Memory::crash(). Lock words are re-initialized by the harness.
  void reset_after_crash();

  void note_lock_of_descr(Address descr, Address lock) {
    std::lock_guard<std::mutex> g(mu_);
    descr_lock_[descr.id] = lock;
  }
  Address lock_of_descr(Address descr) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = descr_lock_.find(descr.id);
    return it == descr_lock_.end() ? Address{} : it->second;
  }
  void note_thunk_lock(int thunk_id, Address lock) {
    std::lock_guard<std::mutex> g(mu_);
    thunk_lock_[thunk_id] = lock;
  }
  std::map<int, Address> thunk_locks() const {
    std::lock_guard<std::mutex> g(mu_);
    return thunk_lock_;
  }
  void note_help(HelpEvent e) {
    std::lock_guard<std::mutex> g(mu_);
    help_events.push_back(e);
  }
  void note_access(AccessRecord r) {
    std::lock_guard<std::mutex> g(mu_);
    accesses.push_back(r);
  }

  std::vector<AccessRecord> accesses;
  std::vector<HelpEvent> help_events;

  // Reclaims a retired block; a log takes its committed entry records with
  // it (the records are the out-of-line halves of the log's slots).
  void reclaim_retired(Address base);

  // Drains every thread's pending retire set (scenario quiescence only).
  void drain_retire_sets();

 private:
  std::vector<ThreadContext> ctxs_;
  Address rd_base_;
  Address topd_base_;
  Address topl_base_;
  std::vector<Thunk> thunks_;
  std::vector<Address> roots_;
  std::map<uint32_t, Address> descr_lock_;
  std::map<int, Address> thunk_lock_;
  mutable std::mutex mu_;
};

}  // namespace rflock
