#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rflock/pmem.hpp"

namespace rflock::harness {

// Thrown into a fiber to unwind it when the harness injects a crash. Not a
// std::exception on purpose: application code never catches it.
struct CrashUnwind {};

// Cooperative virtual threads over ucontext fibers. Exactly one fiber runs
// at a time; every memory primitive yields back to the controller before its
// effect, so one step() executes at most one primitive.
class Scheduler {
 public:
  using Body = std::function<void()>;

  explicit Scheduler(Memory& mem);
  ~Scheduler();

  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  void spawn(std::vector<Body> bodies);

  int threads() const { return static_cast<int>(fibers_.size()); }
  bool runnable(int t) const;
  bool all_finished() const;

  // Advances thread t past its pending primitive up to the next one (or to
  // completion). Rethrows any error the fiber died with.
  void step(int t);

  // Unwinds every live fiber (crash injection).
  void kill_all();

  bool has_pending(int t) const;
  const StepInfo& pending(int t) const;

 private:
  struct Fiber;
  void yield(const StepInfo& info);
  void resume(int t);
  static void trampoline();

  Memory& mem_;
  std::vector<std::unique_ptr<Fiber>> fibers_;
  int current_ = -1;
};

}  // namespace rflock::harness
