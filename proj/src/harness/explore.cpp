#include "rflock/harness/explore.hpp"

#include <algorithm>
#include <sstream>

#include "rflock/lock.hpp"

namespace rflock::harness {

std::string ExploreReport::summary() const {
  std::ostringstream os;
  os << name << ": schedules=" << schedules << " crash_terminals="
     << crash_terminals << " failures=" << failure_count;
  if (random_mode) os << " seed=" << seed;
  if (truncated) os << " TRUNCATED";
  return os.str();
}

namespace {

// A schedule is a sequence of small integers: at each decision point the
// driver builds the deterministic list of enabled choices and the source
// picks an index into it.
struct ChoiceSource {
  virtual ~ChoiceSource() = default;
  virtual int pick(int enabled) = 0;
  // options: >=0 run thread, -1 crash, -2 end. crash_prob is only a hint for
  // randomized sources.
  virtual int pick_toplevel(const std::vector<int>& options, double crash_prob) {
    (void)crash_prob;
    return pick(static_cast<int>(options.size()));
  }
  virtual bool random() const { return false; }
  virtual std::mt19937_64* rng() { return nullptr; }
};

struct PathSource : ChoiceSource {
  explicit PathSource(const std::vector<int>& p) : path(p) {}
  const std::vector<int>& path;
  std::vector<int> taken;
  std::vector<int> enabled_counts;
  int pick(int enabled) override {
    size_t d = taken.size();
    int c = d < path.size() ? path[d] : 0;
    if (c >= enabled) c = 0;
    taken.push_back(c);
    enabled_counts.push_back(enabled);
    return c;
  }
};

struct RandomSource : ChoiceSource {
  explicit RandomSource(uint64_t seed) : gen(seed) {}
  std::mt19937_64 gen;
  int pick(int enabled) override {
    return static_cast<int>(gen() % static_cast<uint64_t>(enabled));
  }
  int pick_toplevel(const std::vector<int>& options, double crash_prob) override {
    int crash_idx = -1;
    for (size_t i = 0; i < options.size(); ++i)
      if (options[i] == -1) crash_idx = static_cast<int>(i);
    if (crash_idx >= 0 &&
        std::uniform_real_distribution<double>(0, 1)(gen) < crash_prob)
      return crash_idx;
    int n = static_cast<int>(options.size()) - (crash_idx >= 0 ? 1 : 0);
    if (n <= 0) return crash_idx;
    int k = static_cast<int>(gen() % static_cast<uint64_t>(n));
    for (size_t i = 0; i < options.size(); ++i) {
      if (static_cast<int>(i) == crash_idx) continue;
      if (k-- == 0) return static_cast<int>(i);
    }
    return 0;
  }
  bool random() const override { return true; }
  std::mt19937_64* rng() override { return &gen; }
};

// Barrier-respecting down-sets of one flush queue: all complete fence groups
// before g, plus a subset of group g that keeps same-cell pwbs in order.
std::vector<std::vector<char>> downsets(const std::vector<FlushOp>& q) {
  return flush_downsets(q);
}

}  // namespace

std::vector<std::vector<char>> flush_downsets(const std::vector<FlushOp>& q) {
  std::vector<std::vector<size_t>> groups;
  groups.emplace_back();
  for (size_t i = 0; i < q.size(); ++i) {
    if (q[i].barrier)
      groups.emplace_back();
    else
      groups.back().push_back(i);
  }
  std::vector<std::vector<char>> out;
  std::vector<char> prefix(q.size(), 0);
  for (const auto& g : groups) {
    size_t n = g.size();
    if (n > 10) {
      for (size_t k = 0; k < n; ++k) {
        std::vector<char> m = prefix;
        for (size_t j = 0; j < k; ++j) m[g[j]] = 1;
        out.push_back(std::move(m));
      }
    } else if (n > 0) {
      for (size_t mask = 0; mask + 1 < (size_t{1} << n); ++mask) {
        std::vector<char> m = prefix;
        bool ok = true;
        for (size_t j = 0; j < n && ok; ++j) {
          if (!(mask & (size_t{1} << j))) continue;
          m[g[j]] = 1;
          for (size_t i2 = 0; i2 < j; ++i2)
            if (q[g[i2]].addr == q[g[j]].addr && !(mask & (size_t{1} << i2)))
              ok = false;
        }
        if (ok) out.push_back(std::move(m));
      }
    }
    for (size_t j : g) prefix[j] = 1;
  }
  out.push_back(std::move(prefix));  // everything drained
  return out;
}

namespace {

struct ExecOutcome {
  bool crashed = false;
  bool aborted = false;  // scenario error or stuck; check skipped
  std::string abort_msg;
  std::vector<int> taken;
  std::vector<int> enabled_counts;
  std::string repr;
};

ExecOutcome execute(const ScenarioFactory& make, ChoiceSource& src,
                    const ExploreBounds& bounds, ExploreReport& rep) {
  ScenarioInstance inst = make();
  Runtime& rt = *inst.rt;
  History hist;
  ExecOutcome out;
  std::ostringstream repr;
  MemorySnapshot pre_recovery;

  {
    Scheduler sched(rt.mem);
    std::vector<Scheduler::Body> bodies;
    for (size_t t = 0; t < inst.bodies.size(); ++t) {
      bodies.push_back([&, t] {
        Env e{rt, rt.ctx(static_cast<int>(t)), hist, static_cast<int>(t)};
        inst.bodies[t](e);
      });
    }
    sched.spawn(std::move(bodies));

    int last = -1;
    int preemptions = 0;
    int crash_budget = bounds.crash_budget;
    uint64_t steps = 0;
    int n = sched.threads();

    while (true) {
      if (src.random() && bounds.random_evict_prob > 0) {
        auto* g = src.rng();
        if (std::uniform_real_distribution<double>(0, 1)(*g) <
            bounds.random_evict_prob) {
          const auto& allocs = rt.mem.allocations();
          if (!allocs.empty()) {
            const auto& a = allocs[(*g)() % allocs.size()];
            // Never evict the recovery directory; see the model notes.
            bool is_rd = a.base == rt.rd_slot(0).id;
            if (a.storage == Storage::persistent && !is_rd &&
                a.state == AllocState::live) {
              Address c{a.base + static_cast<uint32_t>((*g)() % a.count)};
              rt.mem.evict(c);
              repr << "e" << c.id << " ";
            }
          }
        }
      }

      std::vector<int> options;  // >=0 run t; -1 crash; -2 end
      {
        std::vector<int> runnable;
        for (int t = 0; t < n; ++t)
          if (sched.runnable(t)) runnable.push_back(t);
        if (runnable.empty()) {
          if (crash_budget > 0)
            options = {-2, -1};
          else
            break;
        } else {
          for (int t : runnable) {
            bool preempt = last != -1 && t != last && sched.runnable(last);
            if (preempt && preemptions >= bounds.preemption_bound) continue;
            options.push_back(t);
          }
          if (options.empty()) options.push_back(last);
          if (crash_budget > 0) options.push_back(-1);
        }
      }

      int choice = options[src.pick_toplevel(options, bounds.random_crash_prob)];
      if (choice == -2) break;
      if (choice >= 0) {
        bool preempt = last != -1 && choice != last && sched.runnable(last);
        if (preempt) ++preemptions;
        repr << "t" << choice << " ";
        try {
          sched.step(choice);
        } catch (const ScenarioError& e) {
          out.aborted = true;
          out.abort_msg = std::string("scenario error: ") + e.what();
          break;
        }
        last = choice;
        if (++steps > bounds.max_steps) {
          out.aborted = true;
          out.abort_msg = "stuck: step budget exceeded (possible livelock)";
          break;
        }
        continue;
      }

      // Crash: resolve flush queues, wipe volatiles, recover.
      --crash_budget;
      repr << "C ";
      for (int t = 0; t < n; ++t) {
        if (rt.mem.queue_size(t) == 0) continue;
        auto ds = downsets(rt.mem.queue(t));
        int idx = src.pick(static_cast<int>(ds.size()));
        repr << "r" << t << "." << idx << " ";
        rt.mem.drain_downset(t, ds[idx]);
      }
      sched.kill_all();
      rt.mem.crash();
      hist.crash_marker();
      pre_recovery = rt.mem.snapshot();
      rt.reset_after_crash();
      try {
        run_recovery(rt, inst.locks);
      } catch (const ScenarioError& e) {
        out.aborted = true;
        out.abort_msg = std::string("recovery error: ") + e.what();
      }
      out.crashed = true;
      break;
    }
  }  // scheduler torn down before checks run

  if (auto* ps = dynamic_cast<PathSource*>(&src)) {
    out.taken = ps->taken;
    out.enabled_counts = ps->enabled_counts;
  }
  out.repr = repr.str();

  auto fail = [&](const std::string& msg) {
    ++rep.failure_count;
    if (rep.failures.size() < 10)
      rep.failures.push_back(msg + "  [schedule " + out.repr + "]");
  };

  if (out.aborted) {
    fail(out.abort_msg);
    return out;
  }
  if (out.crashed)
    ++rep.crash_terminals;
  else
    rt.drain_retire_sets();
  if (inst.check) {
    Terminal term{rt,
                  hist,
                  out.crashed,
                  out.crashed ? &pre_recovery : nullptr,
                  &inst.locks,
                  out.repr,
                  fail};
    try {
      inst.check(term);
    } catch (const ScenarioError& e) {
      fail(std::string("check error: ") + e.what());
    }
  }
  rep.counters.pwb += rt.mem.counters().pwb;
  rep.counters.pfence += rt.mem.counters().pfence;
  rep.counters.psync += rt.mem.counters().psync;
  return out;
}

}  // namespace

void run_recovery(Runtime& rt, const std::vector<Address>& locks) {
  {
    Scheduler sched(rt.mem);
    std::vector<Scheduler::Body> bodies;
    for (int t = 0; t < rt.threads(); ++t)
      bodies.push_back([&rt, t] { recover(rt, rt.ctx(t)); });
    sched.spawn(std::move(bodies));
    while (!sched.all_finished())
      for (int t = 0; t < rt.threads(); ++t)
        if (sched.runnable(t)) sched.step(t);
  }
  for (Address l : locks)
    rt.mem.poke_init(l, Word::lock_descr(Address{}, false));
  rt.mem.sweep_unreachable(rt.roots());
}

ExploreReport explore_exhaustive(const std::string& name,
                                 const ScenarioFactory& make,
                                 const ExploreBounds& bounds) {
  ExploreReport rep;
  rep.name = name;
  std::vector<std::vector<int>> work;
  work.push_back({});
  while (!work.empty()) {
    if (bounds.stop_after_failures &&
        rep.failure_count >= bounds.stop_after_failures)
      return rep;
    if (rep.schedules >= bounds.max_schedules) {
      rep.truncated = true;
      break;
    }
    std::vector<int> path = std::move(work.back());
    work.pop_back();
    PathSource src(path);
    ExecOutcome out = execute(make, src, bounds, rep);
    ++rep.schedules;
    for (size_t d = path.size(); d < out.taken.size(); ++d) {
      for (int c = out.enabled_counts[d] - 1; c >= 1; --c) {
        std::vector<int> ext(out.taken.begin(), out.taken.begin() + d);
        ext.push_back(c);
        work.push_back(std::move(ext));
      }
    }
  }
  if (rep.truncated && bounds.sampling_fallback > 0) {
    // Budget exceeded: switch to seeded sampling so the run still reports
    // something meaningful.
    rep.failures.insert(rep.failures.begin(),
                        "warning: schedule budget exceeded; sampled " +
                            std::to_string(bounds.sampling_fallback) +
                            " random schedules instead");
    std::mt19937_64 seeder(0xfa11bacc);
    for (uint64_t i = 0; i < bounds.sampling_fallback; ++i) {
      RandomSource src(seeder());
      execute(make, src, bounds, rep);
      ++rep.schedules;
    }
  }
  return rep;
}

ExploreReport explore_random(const std::string& name,
                             const ScenarioFactory& make,
                             const ExploreBounds& bounds, uint64_t seed,
                             uint64_t schedules) {
  ExploreReport rep;
  rep.name = name;
  rep.random_mode = true;
  rep.seed = seed;
  std::mt19937_64 seeder(seed);
  for (uint64_t i = 0; i < schedules; ++i) {
    if (bounds.stop_after_failures &&
        rep.failure_count >= bounds.stop_after_failures)
      break;
    RandomSource src(seeder());
    execute(make, src, bounds, rep);
    ++rep.schedules;
  }
  return rep;
}

}  // namespace rflock::harness
