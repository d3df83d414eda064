#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rflock/harness/explore.hpp"
#include "rflock/runtime.hpp"

namespace rflock::harness {

struct ScenarioOptions {
  uint64_t seed = 0x5eed5eedULL;
  uint64_t random_schedules = 1000;
  FaultInject fault = FaultInject::none;
  bool random_mode = false;  // crash-sweep style scenarios: sample instead
  std::optional<int> threads;
  std::optional<uint64_t> steps;
  std::optional<int> crashes;
};

struct ScenarioResult {
  std::string name;
  bool pass = false;
  std::string detail;  // human-readable lines
  std::vector<ExploreReport> reports;
  PersistCounters counters;

  std::string machine_block() const;
};

// Built-in scenario suite. Each maps to one slice of the verification story:
//   queue-smoke          sequential queue ops + exact persistence-cost formula
//   queue-idempotence    2 (and 3) helpers replaying enqueue/dequeue thunks
//   queue-trylock        exhaustive 2-thread try_lock contention, no crashes
//   queue-crash-sweep    exhaustive crash placement + flush resolutions, plus
//                        recovery run-twice/ordering equivalence
//   queue-crash-random   seeded random schedules, 3 threads / 6 ops / 1 crash
//   bank-nested          nested locks: conservation, redirection, mass release
//   bank-crash           nested locks under a crash budget
//   livelock-bound       one thread paused anywhere; the other must finish
//   recovery-interleave  exhaustive interleavings of two recover() calls
//   thunk-discipline     access validator: queue clean, cross-lock A/B flagged
//   memory-hygiene       allocation balance at quiescence and after recovery
//   negative-controls    seeded faults must be caught by the checkers
//   native-smoke         same programs on real threads (no checking oracle)
ScenarioResult scenario_queue_smoke(const ScenarioOptions& opt = {});
ScenarioResult scenario_queue_idempotence(const ScenarioOptions& opt = {});
ScenarioResult scenario_queue_trylock(const ScenarioOptions& opt = {});
ScenarioResult scenario_queue_crash_sweep(const ScenarioOptions& opt = {});
ScenarioResult scenario_queue_crash_random(const ScenarioOptions& opt = {});
ScenarioResult scenario_bank_nested(const ScenarioOptions& opt = {});
ScenarioResult scenario_bank_crash(const ScenarioOptions& opt = {});
ScenarioResult scenario_livelock_bound(const ScenarioOptions& opt = {});
ScenarioResult scenario_recovery_interleave(const ScenarioOptions& opt = {});
ScenarioResult scenario_thunk_discipline(const ScenarioOptions& opt = {});
ScenarioResult scenario_memory_hygiene(const ScenarioOptions& opt = {});
ScenarioResult scenario_negative_controls(const ScenarioOptions& opt = {});
ScenarioResult scenario_native_smoke(const ScenarioOptions& opt = {});

std::vector<std::string> scenario_names();
ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& opt);

// key=value scenario spec parsing (threads, steps, crashes, mode, seed,
// scenario). Unknown keys are rejected.
struct ScenarioSpec {
  std::string scenario;
  ScenarioOptions opt;
};
ScenarioSpec parse_scenario_spec(const std::string& text);

}  // namespace rflock::harness
