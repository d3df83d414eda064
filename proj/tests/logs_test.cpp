#include <array>

#include "doctest.h"
#include "rflock/logs.hpp"
#include "rflock/mutable_cell.hpp"

using namespace rflock;

namespace {

struct Fixture {
  Fixture() : rt(RuntimeConfig{.threads = 3, .log_size = 8}) {}
  Runtime rt;
  Address data(Word init) {
    return rt.mem.allocate(std::array<Word, 1>{init}, Storage::persistent);
  }
  void open_session(ThreadContext& c) {
    c.log[kRead] = create_log(rt, rt.cfg.log_size, Storage::volatile_);
    c.log[kUpdate] = create_log(rt, rt.cfg.log_size, Storage::persistent);
    c.log[kLock] = create_log(rt, rt.cfg.log_size, Storage::persistent);
  }
  // Point another context at the same logs with a fresh cursor.
  void join_session(const ThreadContext& from, ThreadContext& to) {
    for (int k = 0; k < 3; ++k) {
      to.log[k] = from.log[k];
      to.pos[k] = 0;
    }
  }
};

}  // namespace

TEST_CASE("commit_value without a log touches nothing") {
  Fixture f;
  ThreadContext& c = f.rt.ctx(0);
  auto r = commit_value(f.rt, c, PendingEntry::read(Word::of_int(42)));
  CHECK(r.value == Word::of_int(42));
  CHECK(r.is_first);
  auto u = commit_value(f.rt, c,
                        PendingEntry::update(f.data(Word::bottom()),
                                             Word::bottom(), Word::of_int(1)));
  CHECK(u.value.is_bottom());
  CHECK(u.is_first);
  CHECK(c.pos[kRead] == 0);
}

TEST_CASE("solo commit lands in the slot and advances the cursor") {
  Fixture f;
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  auto r = commit_value(f.rt, c, PendingEntry::read(Word::of_int(7)));
  CHECK(r.is_first);
  CHECK(r.value == Word::of_int(7));
  CHECK(c.pos[kRead] == 1);
  CHECK(f.rt.mem.peek(c.log[kRead]) == Word::of_int(7));
}

TEST_CASE("two helpers committing at one position agree on the winner") {
  for (int first : {1, 2}) {
    Fixture f;
    ThreadContext& a = f.rt.ctx(1);
    ThreadContext& b = f.rt.ctx(2);
    f.open_session(a);
    f.join_session(a, b);
    ThreadContext* order[2] = {first == 1 ? &a : &b, first == 1 ? &b : &a};
    Word vals[2] = {Word::of_int(7), Word::of_int(9)};
    CommitResult res[2];
    res[0] = commit_value(f.rt, *order[0], PendingEntry::read(vals[0]));
    res[1] = commit_value(f.rt, *order[1], PendingEntry::read(vals[1]));
    CHECK(res[0].is_first);
    CHECK_FALSE(res[1].is_first);
    CHECK(res[0].value == vals[0]);
    CHECK(res[1].value == vals[0]);  // loser adopts the winner's value
    CHECK(a.pos[kRead] == 1);
    CHECK(b.pos[kRead] == 1);
  }
}

TEST_CASE("log overflow aborts the scenario") {
  Fixture f;
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  for (int i = 0; i < f.rt.cfg.log_size; ++i)
    commit_value(f.rt, c, PendingEntry::read(Word::of_int(i + 1)));
  CHECK_THROWS_AS(commit_value(f.rt, c, PendingEntry::read(Word::of_int(1))),
                  ScenarioError);
}

TEST_CASE("committing the empty-slot sentinel is rejected") {
  Fixture f;
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  CHECK_THROWS_AS(commit_value(f.rt, c, PendingEntry::read(Word::bottom())),
                  ScenarioError);
}

TEST_CASE("fetch_value without an update log reads shared memory") {
  Fixture f;
  Address o = f.data(Word::of_int(11));
  ThreadContext& c = f.rt.ctx(0);
  CHECK(fetch_value(f.rt, c, o) == Word::of_int(11));
}

TEST_CASE("fetch_value returns the last update strictly below the cursor") {
  Fixture f;
  Address o = f.data(Word::of_int(0));
  Address other = f.data(Word::of_int(0));
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  commit_value(f.rt, c, PendingEntry::update(other, Word::of_int(0), Word::of_int(1)));
  commit_value(f.rt, c, PendingEntry::update(o, Word::of_int(0), Word::of_int(5)));
  commit_value(f.rt, c, PendingEntry::update(other, Word::of_int(1), Word::of_int(2)));
  commit_value(f.rt, c, PendingEntry::update(o, Word::of_int(5), Word::of_int(8)));
  CHECK(c.pos[kUpdate] == 4);
  CHECK(fetch_value(f.rt, c, o) == Word::of_int(8));
  c.pos[kUpdate] = 3;  // the cursor excludes the last entry
  CHECK(fetch_value(f.rt, c, o) == Word::of_int(5));
  c.pos[kUpdate] = 1;
  CHECK(fetch_value(f.rt, c, o) == Word::of_int(0));  // direct read
}

TEST_CASE("slots are write-once and replays commit nothing new") {
  Fixture f;
  ThreadContext& a = f.rt.ctx(1);
  ThreadContext& b = f.rt.ctx(2);
  f.open_session(a);
  for (int i = 0; i < 5; ++i)
    commit_value(f.rt, a, PendingEntry::read(Word::of_int(100 + i)));
  std::vector<uint64_t> before;
  for (int i = 0; i < 5; ++i)
    before.push_back(f.rt.mem.write_seq(a.log[kRead].plus(i)));
  f.join_session(a, b);
  for (int i = 0; i < 5; ++i) {
    auto r = commit_value(f.rt, b, PendingEntry::read(Word::of_int(55)));
    CHECK_FALSE(r.is_first);
    CHECK(r.value == Word::of_int(100 + i));
  }
  for (int i = 0; i < 5; ++i)
    CHECK(f.rt.mem.write_seq(a.log[kRead].plus(i)) == before[i]);
}

TEST_CASE("update and lock entries round-trip through their records") {
  Fixture f;
  Address o = f.data(Word::of_int(1));
  Address l = f.data(Word::of_int(2));
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  commit_value(f.rt, c, PendingEntry::update(o, Word::of_int(1), Word::of_int(2)));
  commit_value(f.rt, c, PendingEntry::lock(l, o));
  UpdateTriple t = read_update_entry(f.rt, f.rt.mem.peek(c.log[kUpdate]));
  CHECK(t.target == o);
  CHECK(t.oldv == Word::of_int(1));
  CHECK(t.newv == Word::of_int(2));
  LockPair p = read_lock_entry(f.rt, f.rt.mem.peek(c.log[kLock]));
  CHECK(p.lock == l);
  CHECK(p.descr == o);
  CHECK(committed_prefix(f.rt, c.log[kUpdate], f.rt.cfg.log_size) == 1);
}

TEST_CASE("dump_log renders committed slots") {
  Fixture f;
  ThreadContext& c = f.rt.ctx(0);
  f.open_session(c);
  commit_value(f.rt, c, PendingEntry::read(Word::of_int(3)));
  std::string s = dump_log(f.rt, c.log[kRead], f.rt.cfg.log_size, kRead);
  CHECK(s == "log kind=READ pos=0 entry=i3\n");
}
