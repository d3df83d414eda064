#include <array>

#include "doctest.h"
#include "rflock/harness/explore.hpp"
#include "rflock/harness/history.hpp"
#include "rflock/harness/scenarios.hpp"
#include "rflock/harness/scheduler.hpp"
#include "rflock/harness/state.hpp"
#include "rflock/harness/validator.hpp"
#include "rflock/queue.hpp"

using namespace rflock;
using namespace rflock::harness;

namespace {

// Two threads, two raw writes each: 3 scheduler steps per thread (prologue,
// two effects), so full interleaving enumeration yields C(6,3) schedules.
ScenarioFactory tiny_factory() {
  return []() {
    RuntimeConfig cfg;
    cfg.threads = 2;
    auto rt = std::make_unique<Runtime>(cfg);
    Address a = rt->mem.allocate(std::array<Word, 1>{Word::bottom()},
                                 Storage::persistent);
    Address b = rt->mem.allocate(std::array<Word, 1>{Word::bottom()},
                                 Storage::persistent);
    ScenarioInstance inst;
    inst.bodies.push_back([a, b](Env& e) {
      e.rt.mem.write(e.tid, a, Word::of_int(1));
      e.rt.mem.write(e.tid, b, Word::of_int(2));
    });
    inst.bodies.push_back([a, b](Env& e) {
      e.rt.mem.write(e.tid, b, Word::of_int(3));
      e.rt.mem.write(e.tid, a, Word::of_int(4));
    });
    inst.check = [](Terminal&) {};
    inst.rt = std::move(rt);
    return inst;
  };
}

}  // namespace

TEST_CASE("exhaustive exploration visits each schedule exactly once") {
  ExploreBounds b;
  b.preemption_bound = 100;
  auto rep = explore_exhaustive("tiny", tiny_factory(), b);
  CHECK(rep.schedules == 20);  // C(6,3)
  CHECK(rep.failure_count == 0);
}

TEST_CASE("one-thread programs have exactly one schedule") {
  auto factory = []() {
    RuntimeConfig cfg;
    cfg.threads = 1;
    auto rt = std::make_unique<Runtime>(cfg);
    Address a = rt->mem.allocate(std::array<Word, 1>{Word::bottom()},
                                 Storage::persistent);
    ScenarioInstance inst;
    inst.bodies.push_back([a](Env& e) {
      e.rt.mem.write(e.tid, a, Word::of_int(1));
    });
    inst.check = [](Terminal&) {};
    inst.rt = std::move(rt);
    return inst;
  };
  ExploreBounds b;
  auto rep = explore_exhaustive("solo", factory, b);
  CHECK(rep.schedules == 1);
}

TEST_CASE("random exploration is replayable from its seed") {
  ExploreBounds b;
  b.preemption_bound = 100;
  auto r1 = explore_random("rand", tiny_factory(), b, 777, 20);
  auto r2 = explore_random("rand", tiny_factory(), b, 777, 20);
  CHECK(r1.counters.pwb == r2.counters.pwb);
  CHECK(r1.failure_count == r2.failure_count);
  CHECK(r1.schedules == r2.schedules);
  CHECK(r1.seed == 777);
}

TEST_CASE("budget exhaustion falls back to sampling with a warning") {
  ExploreBounds b;
  b.preemption_bound = 100;
  b.max_schedules = 3;
  b.sampling_fallback = 10;
  auto rep = explore_exhaustive("tiny-truncated", tiny_factory(), b);
  CHECK(rep.truncated);
  CHECK(rep.schedules == 13);  // 3 exhaustive + 10 sampled
  REQUIRE(!rep.failures.empty());
  CHECK(rep.failures[0].find("warning") != std::string::npos);
  CHECK_FALSE(rep.ok());
}

TEST_CASE("the step budget flags runaway programs") {
  auto factory = []() {
    RuntimeConfig cfg;
    cfg.threads = 1;
    auto rt = std::make_unique<Runtime>(cfg);
    Address a = rt->mem.allocate(std::array<Word, 1>{Word::bottom()},
                                 Storage::persistent);
    ScenarioInstance inst;
    inst.bodies.push_back([a](Env& e) {
      for (;;) e.rt.mem.write(e.tid, a, Word::of_int(1));
    });
    inst.check = [](Terminal&) {};
    inst.rt = std::move(rt);
    return inst;
  };
  ExploreBounds b;
  b.max_steps = 100;
  auto rep = explore_exhaustive("runaway", factory, b);
  CHECK(rep.failure_count == 1);
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures[0].find("stuck") != std::string::npos);
}

TEST_CASE("scenario errors inside bodies surface as failures") {
  auto factory = []() {
    RuntimeConfig cfg;
    cfg.threads = 1;
    auto rt = std::make_unique<Runtime>(cfg);
    ScenarioInstance inst;
    inst.bodies.push_back([](Env& e) {
      e.rt.mem.read(e.tid, Address{424242});
    });
    inst.check = [](Terminal&) {};
    inst.rt = std::move(rt);
    return inst;
  };
  auto rep = explore_exhaustive("faulty", factory, ExploreBounds{});
  CHECK(rep.failure_count == 1);
}

TEST_CASE("kill_all unwinds fiber stacks through RAII") {
  RuntimeConfig cfg;
  cfg.threads = 1;
  Runtime rt(cfg);
  Address a = rt.mem.allocate(std::array<Word, 1>{Word::bottom()},
                              Storage::persistent);
  bool unwound = false;
  struct Sentinel {
    bool* flag;
    ~Sentinel() { *flag = true; }
  };
  {
    Scheduler sched(rt.mem);
    std::vector<Scheduler::Body> bodies;
    Runtime& r = rt;
    bodies.push_back([&r, a, &unwound] {
      Sentinel s{&unwound};
      for (int i = 0; i < 100; ++i) r.mem.write(0, a, Word::of_int(i));
    });
    sched.spawn(std::move(bodies));
    sched.step(0);
    sched.step(0);
    CHECK_FALSE(unwound);
    sched.kill_all();
  }
  CHECK(unwound);
}

TEST_CASE("a no-op thunk is trivially idempotent under helpers") {
  auto fp = std::make_shared<std::vector<uint64_t>>();
  auto factory = [fp]() {
    RuntimeConfig cfg;
    cfg.threads = 3;
    auto rt = std::make_unique<Runtime>(cfg);
    Address lock = create_lock(*rt);
    rt->add_root(lock);
    int th = rt->register_thunk([](Runtime&, ThreadContext&) { return true; });
    auto cd = create_descr(*rt, rt->ctx(0), th, lock);
    cam(*rt, rt->ctx(0), lock, Word::lock_descr(Address{}, false),
        Word::lock_descr(cd.descr, true));
    Address d = cd.descr;
    ScenarioInstance inst;
    inst.locks = {lock};
    inst.bodies.push_back([](Env&) {});
    for (int h = 1; h <= 2; ++h)
      inst.bodies.push_back([d, lock](Env& e) {
        run_descr(e.rt, e.ctx, d);
        unlock(e.rt, e.ctx, lock, Word::lock_descr(d, true));
      });
    inst.check = [fp, d](Terminal& t) {
      if (!t.rt.mem.peek(rflock::descr::done_cell(d)).as_bool())
        t.fail("not done");
      auto x = canonical_fingerprint(t.rt, t.rt.roots());
      if (fp->empty())
        *fp = x;
      else if (x != *fp)
        t.fail("state differs across interleavings");
    };
    inst.rt = std::move(rt);
    return inst;
  };
  ExploreBounds b;
  b.preemption_bound = 2;
  auto rep = explore_exhaustive("noop-idempotence", factory, b);
  CHECK(rep.failure_count == 0);
  CHECK(rep.schedules > 10);
}

TEST_CASE("durable-linearizability checker accepts and rejects the basics") {
  QueueOracle oracle;
  SUBCASE("completed enqueue must be present") {
    History h;
    int id = h.invoke(0, {OpKind::enqueue, 1});
    h.respond(id, Word::of_bool(true));
    h.crash_marker();
    CHECK(check_durable_linearizability(h, oracle, {1}).ok);
    CHECK_FALSE(check_durable_linearizability(h, oracle, {}).ok);
  }
  SUBCASE("pending enqueue is all-or-nothing") {
    History h;
    int id = h.invoke(0, {OpKind::enqueue, 1});
    h.respond(id, Word::of_bool(true));
    h.invoke(1, {OpKind::enqueue, 2});  // never responds
    h.crash_marker();
    CHECK(check_durable_linearizability(h, oracle, {1}).ok);
    CHECK(check_durable_linearizability(h, oracle, {1, 2}).ok);
    CHECK_FALSE(check_durable_linearizability(h, oracle, {2}).ok);
    CHECK_FALSE(check_durable_linearizability(h, oracle, {1, 2, 2}).ok);
  }
  SUBCASE("real-time order is respected") {
    History h;
    int e1 = h.invoke(0, {OpKind::enqueue, 1});
    h.respond(e1, Word::of_bool(true));
    int e2 = h.invoke(0, {OpKind::enqueue, 2});
    h.respond(e2, Word::of_bool(true));
    CHECK(check_durable_linearizability(h, oracle, {1, 2}).ok);
    CHECK_FALSE(check_durable_linearizability(h, oracle, {2, 1}).ok);
  }
  SUBCASE("completed dequeue results constrain the order") {
    History h;
    int e1 = h.invoke(0, {OpKind::enqueue, 1});
    h.respond(e1, Word::of_bool(true));
    int d = h.invoke(1, {OpKind::dequeue});
    h.respond(d, Word::of_int(1));
    CHECK(check_durable_linearizability(h, oracle, {}).ok);
    CHECK_FALSE(check_durable_linearizability(h, oracle, {1}).ok);
  }
  SUBCASE("oversized histories are rejected as a configuration error") {
    History h;
    for (int i = 0; i < 9; ++i) h.invoke(0, {OpKind::enqueue, i});
    CHECK_THROWS_AS(check_durable_linearizability(h, oracle, {}),
                    ScenarioError);
  }
}

TEST_CASE("flush down-sets respect barriers and same-cell order") {
  Memory mem;
  Address a = mem.allocate(std::array<Word, 1>{Word::bottom()},
                           Storage::persistent);
  Address b = mem.allocate(std::array<Word, 1>{Word::bottom()},
                           Storage::persistent);
  mem.write(0, a, Word::of_int(1));
  mem.pwb(0, a);
  mem.write(0, a, Word::of_int(2));
  mem.pwb(0, a);
  mem.pwb(0, b);
  auto ds = flush_downsets(mem.queue(0));
  for (const auto& take : ds) {
    if (take[1]) CHECK(take[0]);  // second pwb of `a` implies the first
  }
  // {}, {a1}, {b}, {a1,a2}, {a1,b}, {a1,a2,b} ... exactly the order-valid ones
  CHECK(ds.size() == 6);
}

TEST_CASE("the machine-readable block carries the counters") {
  ScenarioResult r;
  r.name = "x";
  ExploreReport rep;
  rep.schedules = 3;
  rep.failure_count = 1;
  rep.counters = {10, 4, 4};
  r.reports.push_back(rep);
  CHECK(r.machine_block() == "scenarios=3 failures=1 pwb=10 pfence=4 psync=4");
}

TEST_CASE("scenario spec parsing accepts known keys and rejects others") {
  auto spec = parse_scenario_spec(
      "scenario=queue-crash-random\nthreads=3\nseed=9\nmode=random\ncrashes=1\n");
  CHECK(spec.scenario == "queue-crash-random");
  CHECK(spec.opt.threads.value() == 3);
  CHECK(spec.opt.seed == 9);
  CHECK(spec.opt.random_mode);
  CHECK(spec.opt.crashes.value() == 1);
  CHECK_THROWS_AS(parse_scenario_spec("scenario=x\nbogus=1\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario_spec("threads=2\n"), ScenarioError);
}
