#include "rflock/harness/scheduler.hpp"

#include <setjmp.h>
#include <ucontext.h>

#include <cstring>
#include <stdexcept>

namespace rflock::harness {

namespace {
constexpr size_t kStackSize = 128 * 1024;
thread_local Scheduler* g_active = nullptr;
// ucontext is used only to enter a fresh fiber stack; all later switches go
// through setjmp/longjmp, which skips the per-switch sigprocmask syscall.
thread_local jmp_buf* g_ctrl = nullptr;
ucontext_t g_controller;
int g_target = -1;
}  // namespace

struct Scheduler::Fiber {
  ucontext_t ctx;
  jmp_buf jb;
  std::unique_ptr<char[]> stack;
  Body body;
  enum State { fresh, parked, finished } state = fresh;
  StepInfo pending;
  bool has_pending = false;
  bool crash_flag = false;
  std::exception_ptr error;
};

Scheduler::Scheduler(Memory& mem) : mem_(mem) {
  mem_.set_yield_hook([this](const StepInfo& s) { yield(s); });
}

Scheduler::~Scheduler() {
  if (!all_finished()) kill_all();
  mem_.set_yield_hook(nullptr);
}

void Scheduler::spawn(std::vector<Body> bodies) {
  fibers_.clear();
  for (auto& b : bodies) {
    auto f = std::make_unique<Fiber>();
    f->body = std::move(b);
    f->stack = std::make_unique_for_overwrite<char[]>(kStackSize);
    fibers_.push_back(std::move(f));
  }
}

bool Scheduler::runnable(int t) const {
  return t >= 0 && t < threads() && fibers_[t]->state != Fiber::finished;
}

bool Scheduler::all_finished() const {
  for (auto& f : fibers_)
    if (f->state != Fiber::finished) return false;
  return true;
}

bool Scheduler::has_pending(int t) const { return fibers_[t]->has_pending; }

const StepInfo& Scheduler::pending(int t) const { return fibers_[t]->pending; }

void Scheduler::trampoline() {
  Scheduler* s = g_active;
  Fiber& f = *s->fibers_[g_target];
  try {
    f.body();
  } catch (const CrashUnwind&) {
    // injected crash: the fiber simply dies
  } catch (...) {
    f.error = std::current_exception();
  }
  f.state = Fiber::finished;
  longjmp(*g_ctrl, 1);  // the trampoline never returns
}

void Scheduler::resume(int t) {
  Fiber& f = *fibers_[t];
  Scheduler* prev_active = g_active;
  int prev_current = current_;
  jmp_buf* prev_ctrl = g_ctrl;
  jmp_buf here;
  g_active = this;
  current_ = t;
  g_ctrl = &here;
  if (setjmp(here) == 0) {
    if (f.state == Fiber::fresh) {
      getcontext(&f.ctx);
      f.ctx.uc_stack.ss_sp = f.stack.get();
      f.ctx.uc_stack.ss_size = kStackSize;
      f.ctx.uc_link = &g_controller;
      g_target = t;
      makecontext(&f.ctx, reinterpret_cast<void (*)()>(&Scheduler::trampoline),
                  0);
      f.state = Fiber::parked;
      swapcontext(&g_controller, &f.ctx);
    } else {
      g_target = t;
      longjmp(f.jb, 1);
    }
  }
  current_ = prev_current;
  g_active = prev_active;
  g_ctrl = prev_ctrl;
  if (fibers_[t]->error) {
    auto e = fibers_[t]->error;
    fibers_[t]->error = nullptr;
    std::rethrow_exception(e);
  }
}

void Scheduler::step(int t) {
  if (!runnable(t)) throw std::logic_error("scheduler: step on finished thread");
  resume(t);
}

void Scheduler::yield(const StepInfo& info) {
  if (current_ < 0 || g_active != this) return;  // controller-side operation
  Fiber& f = *fibers_[current_];
  f.pending = info;
  f.has_pending = true;
  f.state = Fiber::parked;
  if (setjmp(f.jb) == 0) longjmp(*g_ctrl, 1);
  if (f.crash_flag) throw CrashUnwind{};
}

void Scheduler::kill_all() {
  for (int t = 0; t < threads(); ++t) {
    Fiber& f = *fibers_[t];
    if (f.state == Fiber::finished) continue;
    if (f.state == Fiber::fresh) {
      f.state = Fiber::finished;
      continue;
    }
    f.crash_flag = true;
    resume(t);  // unwinds via CrashUnwind
  }
}

}  // namespace rflock::harness
