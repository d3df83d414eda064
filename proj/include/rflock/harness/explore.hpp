#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "rflock/harness/history.hpp"
#include "rflock/harness/scheduler.hpp"
#include "rflock/runtime.hpp"

namespace rflock::harness {

struct Env {
  Runtime& rt;
  ThreadContext& ctx;
  History& hist;
  int tid;
};

// Everything the per-terminal check can see.
struct Terminal {
  Runtime& rt;
  History& hist;
  bool crashed = false;
  const MemorySnapshot* pre_recovery = nullptr;  // set iff crashed
  const std::vector<Address>* locks = nullptr;
  std::string schedule;
  std::function<void(const std::string&)> fail;
};

// One fresh, fully wired execution of the program under test. The factory is
// invoked once per explored schedule; bodies capture the instance's
// structures.
struct ScenarioInstance {
  std::unique_ptr<Runtime> rt;
  std::vector<std::function<void(Env&)>> bodies;
  std::vector<Address> locks;  // re-initialized to released at recovery
  std::function<void(Terminal&)> check;
};

using ScenarioFactory = std::function<ScenarioInstance()>;

struct ExploreBounds {
  int preemption_bound = 2;
  uint64_t max_steps = 20000;  // per schedule; exceeding it is a stuck state
  int crash_budget = 0;
  uint64_t max_schedules = 4000000;
  double random_crash_prob = 0.01;
  double random_evict_prob = 0.0;
  // Stop exploring once this many failures are recorded (0 = never); fault
  // demonstrations only need the first catch.
  uint64_t stop_after_failures = 0;
  // When the exhaustive budget is exceeded, fall back to this many random
  // schedules instead (reported with a warning).
  uint64_t sampling_fallback = 2000;
};

struct ExploreReport {
  std::string name;
  uint64_t schedules = 0;
  uint64_t crash_terminals = 0;
  uint64_t failure_count = 0;
  std::vector<std::string> failures;  // first few, with schedule strings
  PersistCounters counters;
  bool truncated = false;  // exhaustive budget exhausted, fell back to a cap
  bool random_mode = false;
  uint64_t seed = 0;

  bool ok() const { return failure_count == 0 && !truncated; }
  std::string summary() const;
};

ExploreReport explore_exhaustive(const std::string& name,
                                 const ScenarioFactory& make,
                                 const ExploreBounds& bounds);

ExploreReport explore_random(const std::string& name,
                             const ScenarioFactory& make,
                             const ExploreBounds& bounds, uint64_t seed,
                             uint64_t schedules);

// All barrier-respecting down-sets of a flush queue (what a crash may have
// completed): full fence groups before g plus any subset of group g keeping
// same-cell write-backs in order.
std::vector<std::vector<char>> flush_downsets(const std::vector<FlushOp>& q);

// Round-robin recovery pass: every thread calls recover, then the locks are
// re-initialized to released and unreachable persistent blocks are swept.
void run_recovery(Runtime& rt, const std::vector<Address>& locks);

}  // namespace rflock::harness
