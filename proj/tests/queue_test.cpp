#include <algorithm>
#include <array>

#include "doctest.h"
#include "rflock/bank.hpp"
#include "rflock/harness/explore.hpp"
#include "rflock/harness/history.hpp"
#include "rflock/harness/scheduler.hpp"
#include "rflock/queue.hpp"

using namespace rflock;
using namespace rflock::harness;

TEST_CASE("solo FIFO order") {
  RuntimeConfig cfg;
  cfg.threads = 1;
  Runtime rt(cfg);
  RQueue q = make_queue(rt);
  ThreadContext& c = rt.ctx(0);
  for (int64_t k : {1, 2, 3}) enqueue(rt, c, q, k);
  std::vector<int64_t> keys;
  REQUIRE(drain_keys(rt, q, &keys));
  CHECK(keys == std::vector<int64_t>{1, 2, 3});
  CHECK(dequeue_value(rt, c, q) == 1);
  CHECK(dequeue_value(rt, c, q) == 2);
  CHECK(dequeue_value(rt, c, q) == 3);
  CHECK(dequeue_value(rt, c, q) == kEmptyQueue);
}

TEST_CASE("enqueue then dequeue round-trip") {
  RuntimeConfig cfg;
  cfg.threads = 1;
  Runtime rt(cfg);
  RQueue q = make_queue(rt);
  ThreadContext& c = rt.ctx(0);
  enqueue(rt, c, q, 5);
  CHECK(dequeue_value(rt, c, q) == 5);
  CHECK(dequeue_value(rt, c, q) == kEmptyQueue);
}

TEST_CASE("two concurrent enqueuers leave a well-formed list with both keys") {
  auto factory = []() {
    RuntimeConfig cfg;
    cfg.threads = 2;
    auto rt = std::make_unique<Runtime>(cfg);
    RQueue q = make_queue(*rt);
    std::vector<Address> roots;
    queue_roots(q, roots);
    for (Address a : roots) rt->add_root(a);
    ScenarioInstance inst;
    inst.locks = {q.head_lock, q.tail_lock};
    inst.bodies.push_back([q](Env& e) { enqueue(e.rt, e.ctx, q, 1); });
    inst.bodies.push_back([q](Env& e) { enqueue(e.rt, e.ctx, q, 2); });
    inst.check = [q](Terminal& t) {
      std::vector<int64_t> keys;
      std::string diag;
      if (!drain_keys(t.rt, q, &keys) || !queue_well_formed(t.rt, q, &diag)) {
        t.fail("malformed: " + diag);
        return;
      }
      std::sort(keys.begin(), keys.end());
      if (keys != std::vector<int64_t>{1, 2}) t.fail("keys lost or duplicated");
      if (!t.rt.mem.allocation_balance_ok(t.rt.roots(), &diag))
        t.fail("memory: " + diag);
    };
    inst.rt = std::move(rt);
    return inst;
  };
  ExploreBounds b;
  b.preemption_bound = 2;
  auto rep = explore_exhaustive("two-enqueuers", factory, b);
  CHECK(rep.failure_count == 0);
  CHECK(rep.schedules > 1);
}

TEST_CASE("crash at a sampled step with full drain recovers to a valid state") {
  for (int cut : {5, 20, 45, 70, 95, 120}) {
    RuntimeConfig cfg;
    cfg.threads = 2;
    Runtime rt(cfg);
    RQueue q = make_queue(rt);
    std::vector<Address> roots;
    queue_roots(q, roots);
    for (Address a : roots) rt.add_root(a);
    History hist;
    {
      Scheduler sched(rt.mem);
      Runtime& r = rt;
      std::vector<Scheduler::Body> bodies;
      bodies.push_back([&r, &hist, q] {
        int id = hist.invoke(0, {OpKind::enqueue, 1});
        enqueue(r, r.ctx(0), q, 1);
        hist.respond(id, Word::of_bool(true));
      });
      bodies.push_back([&r, &hist, q] {
        int id = hist.invoke(1, {OpKind::enqueue, 2});
        enqueue(r, r.ctx(1), q, 2);
        hist.respond(id, Word::of_bool(true));
      });
      sched.spawn(std::move(bodies));
      int done = 0;
      while (done < cut && !sched.all_finished())
        for (int t = 0; t < 2 && done < cut; ++t)
          if (sched.runnable(t)) {
            sched.step(t);
            ++done;
          }
      sched.kill_all();
    }
    for (int t = 0; t < 2; ++t) rt.mem.drain(t, rt.mem.queue_size(t));
    rt.mem.crash();
    hist.crash_marker();
    rt.reset_after_crash();
    run_recovery(rt, {q.head_lock, q.tail_lock});
    std::vector<int64_t> keys;
    std::string diag;
    REQUIRE(drain_keys(rt, q, &keys));
    REQUIRE(queue_well_formed(rt, q, &diag));
    QueueOracle oracle;
    auto v = check_durable_linearizability(hist, oracle, keys);
    CHECK_MESSAGE(v.ok, v.why);
  }
}

TEST_CASE("solo transfer moves the money once") {
  RuntimeConfig cfg;
  cfg.threads = 1;
  Runtime rt(cfg);
  NestedBank bank = make_bank(rt, {100, 100});
  transfer(rt, rt.ctx(0), bank, 0, 1, 10);
  CHECK(bank_balances(rt, bank) == std::vector<int32_t>{90, 110});
  CHECK(bank_total(rt, bank) == 200);
  transfer(rt, rt.ctx(0), bank, 1, 0, 40);
  CHECK(bank_balances(rt, bank) == std::vector<int32_t>{130, 70});
}

TEST_CASE("transfers under contention conserve the total") {
  auto factory = []() {
    RuntimeConfig cfg;
    cfg.threads = 2;
    auto rt = std::make_unique<Runtime>(cfg);
    NestedBank bank = make_bank(*rt, {100, 100});
    std::vector<Address> roots;
    bank_roots(bank, roots);
    for (Address a : roots) rt->add_root(a);
    ScenarioInstance inst;
    inst.locks = bank.locks;
    inst.bodies.push_back([bank](Env& e) { transfer(e.rt, e.ctx, bank, 0, 1, 10); });
    inst.bodies.push_back([bank](Env& e) { transfer(e.rt, e.ctx, bank, 1, 0, 3); });
    inst.check = [bank](Terminal& t) {
      if (bank_total(t.rt, bank) != 200) t.fail("total not conserved");
      if (bank_balances(t.rt, bank) != std::vector<int32_t>{93, 107})
        t.fail("unexpected balances");
    };
    inst.rt = std::move(rt);
    return inst;
  };
  ExploreBounds b;
  b.preemption_bound = 1;
  auto rep = explore_exhaustive("transfer-conservation", factory, b);
  CHECK(rep.failure_count == 0);
}
