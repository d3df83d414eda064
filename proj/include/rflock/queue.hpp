#pragma once

#include "rflock/lock.hpp"

namespace rflock {

// Two-lock FIFO queue on the recoverable try-lock interface. The list hangs
// off a dummy node; Head/Tail and node next fields are mutable cells, keys
// are immutable. Node layout: [key, next].

constexpr int64_t kEmptyQueue = -1;

struct RQueue {
  Address head;       // mutable cell: handle of the dummy node
  Address tail;       // mutable cell: handle of the last node
  Address head_lock;
  Address tail_lock;
};

RQueue make_queue(Runtime& rt);

// Registers queue roots and lock cells with a scenario (for sweeps/reinit).
inline void queue_roots(const RQueue& q, std::vector<Address>& roots) {
  roots.push_back(q.head);
  roots.push_back(q.tail);
  roots.push_back(q.head_lock);
  roots.push_back(q.tail_lock);
}

// The raw critical-section bodies, for harness scenarios that drive
// run_descr directly.
int register_enqueue_thunk(Runtime& rt, const RQueue& q, int64_t key);
int register_dequeue_thunk(Runtime& rt, const RQueue& q, Address result_cell);

// Retries try_lock until the attempt succeeds.
void enqueue(Runtime& rt, ThreadContext& ctx, const RQueue& q, int64_t key);

// result_cell: caller-provided per-invocation volatile cell the thunk stores
// the response into (kEmptyQueue on an empty queue).
void dequeue(Runtime& rt, ThreadContext& ctx, const RQueue& q,
             Address result_cell);

// Convenience wrapper: allocates the result cell, runs dequeue, reads it.
int64_t dequeue_value(Runtime& rt, ThreadContext& ctx, const RQueue& q);

// Structural walk (no operations executed). Returns false on a malformed
// list (cycle or dangling handle).
bool drain_keys(const Runtime& rt, const RQueue& q, std::vector<int64_t>* out);

// The structure's own invariants: dummy-headed ⊥-terminated list, Tail
// reachable from Head and reaching the last node.
bool queue_well_formed(const Runtime& rt, const RQueue& q, std::string* diag);

}  // namespace rflock
