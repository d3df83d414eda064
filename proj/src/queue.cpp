#include "rflock/queue.hpp"

#include <array>
#include <set>

namespace rflock {

static constexpr uint32_t kKey = 0;
static constexpr uint32_t kNext = 1;

static Address alloc_node(Runtime& rt, int64_t key) {
  std::array<Word, 2> init = {Word::of_int(key), Word::null_handle()};
  return rt.mem.allocate(init, Storage::persistent);
}

RQueue make_queue(Runtime& rt) {
  Address dummy = alloc_node(rt, 0);
  RQueue q;
  q.head = rt.mem.allocate(std::array<Word, 1>{Word::handle(dummy)},
                           Storage::persistent);
  q.tail = rt.mem.allocate(std::array<Word, 1>{Word::handle(dummy)},
                           Storage::persistent);
  q.head_lock = create_lock(rt);
  q.tail_lock = create_lock(rt);
  return q;
}

int register_enqueue_thunk(Runtime& rt, const RQueue& q, int64_t key) {
  return rt.register_thunk([q, key](Runtime& r, ThreadContext& c) {
    std::array<Word, 2> init = {Word::of_int(key), Word::null_handle()};
    Address nd = create_object(r, c, init, Storage::persistent);
    Address tail = mutable_load(r, c, q.tail).as_handle();
    mutable_store(r, c, tail.plus(kNext), Word::handle(nd));
    mutable_store(r, c, q.tail, Word::handle(nd));
    return true;
  });
}

int register_dequeue_thunk(Runtime& rt, const RQueue& q, Address result_cell) {
  return rt.register_thunk([q, result_cell](Runtime& r, ThreadContext& c) {
    Address head = mutable_load(r, c, q.head).as_handle();
    Address head_next = mutable_load(r, c, head.plus(kNext)).as_handle();
    if (!head_next.valid()) {
      mutable_store(r, c, result_cell, Word::of_int(kEmptyQueue));
    } else {
      int64_t key = r.mem.peek(head_next.plus(kKey)).as_int();  // immutable
      mutable_store(r, c, result_cell, Word::of_int(key));
      mutable_store(r, c, q.head, Word::handle(head_next));
      retire_object(r, c, head);
    }
    return true;
  });
}

void enqueue(Runtime& rt, ThreadContext& ctx, const RQueue& q, int64_t key) {
  int thunk = register_enqueue_thunk(rt, q, key);
  while (!try_lock(rt, ctx, q.tail_lock, thunk)) {
  }
}

void dequeue(Runtime& rt, ThreadContext& ctx, const RQueue& q,
             Address result_cell) {
  int thunk = register_dequeue_thunk(rt, q, result_cell);
  while (!try_lock(rt, ctx, q.head_lock, thunk)) {
  }
}

int64_t dequeue_value(Runtime& rt, ThreadContext& ctx, const RQueue& q) {
  Address cell = rt.mem.allocate(std::array<Word, 1>{Word::bottom()},
                                 Storage::volatile_, AllocKind::scratch);
  dequeue(rt, ctx, q, cell);
  return rt.mem.read(ctx.tid, cell).as_int();
}

bool drain_keys(const Runtime& rt, const RQueue& q, std::vector<int64_t>* out) {
  Address cur = rt.mem.peek(q.head).as_handle();
  std::set<uint32_t> seen;
  while (cur.valid()) {
    if (!rt.mem.exists(cur) || !seen.insert(cur.id).second) return false;
    Address next = rt.mem.peek(cur.plus(kNext)).as_handle();
    if (next.valid() && out) out->push_back(rt.mem.peek(next.plus(kKey)).as_int());
    cur = next;
  }
  return true;
}

bool queue_well_formed(const Runtime& rt, const RQueue& q, std::string* diag) {
  Address head = rt.mem.peek(q.head).as_handle();
  Address tail = rt.mem.peek(q.tail).as_handle();
  if (!head.valid() || !tail.valid()) {
    if (diag) *diag = "queue: null head or tail";
    return false;
  }
  std::set<uint32_t> seen;
  Address cur = head;
  Address last = head;
  bool tail_on_list = false;
  while (cur.valid()) {
    if (!rt.mem.exists(cur)) {
      if (diag) *diag = "queue: dangling node handle";
      return false;
    }
    if (!seen.insert(cur.id).second) {
      if (diag) *diag = "queue: cycle in list";
      return false;
    }
    if (cur == tail) tail_on_list = true;
    last = cur;
    cur = rt.mem.peek(cur.plus(kNext)).as_handle();
  }
  if (!tail_on_list) {
    if (diag) *diag = "queue: tail not reachable from head";
    return false;
  }
  // Tail may lag by pending enqueues but must reach the last node.
  if (tail != last) {
    Address t = tail;
    while (t.valid() && t != last) t = rt.mem.peek(t.plus(kNext)).as_handle();
    if (t != last) {
      if (diag) *diag = "queue: tail does not reach the last node";
      return false;
    }
  }
  return true;
}

}  // namespace rflock
