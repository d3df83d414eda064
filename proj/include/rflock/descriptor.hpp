#pragma once

#include "rflock/mutable_cell.hpp"

namespace rflock {

// Per-critical-section descriptor: log handles, thunk handle, done flag,
// owner, and the nesting linkage (topdescr/toplock).
//
// Record layout (persistent cells):
//   [0..2] log handles (READ, UPDATE, LOCK)
//   [3]    thunk id
//   [4]    done (the CAS-able flag cell)
//   [5]    owner thread id
//   [6]    topdescr handle (null when outermost)
//   [7]    toplock handle
namespace descr {
constexpr uint32_t kLog0 = 0;
constexpr uint32_t kThunk = 3;
constexpr uint32_t kDone = 4;
constexpr uint32_t kOwner = 5;
constexpr uint32_t kTopDescr = 6;
constexpr uint32_t kTopLock = 7;
constexpr uint32_t kCells = 8;

inline Address log_of(const Runtime& rt, Address d, int kind) {
  return rt.mem.peek(d.plus(kLog0 + kind)).as_handle();
}
inline int thunk_of(const Runtime& rt, Address d) {
  return static_cast<int>(rt.mem.peek(d.plus(kThunk)).as_int());
}
inline Address done_cell(Address d) { return d.plus(kDone); }
inline int owner_of(const Runtime& rt, Address d) {
  return static_cast<int>(rt.mem.peek(d.plus(kOwner)).as_int());
}
inline Address topdescr_of(const Runtime& rt, Address d) {
  return rt.mem.peek(d.plus(kTopDescr)).as_handle();
}
inline Address toplock_of(const Runtime& rt, Address d) {
  return rt.mem.peek(d.plus(kTopLock)).as_handle();
}
}  // namespace descr

struct CreateDescrResult {
  Address descr;
  bool outermost;  // this call opened the caller's own outermost section
};

CreateDescrResult create_descr(Runtime& rt, ThreadContext& ctx, int thunk_id,
                               Address lock);

// Executes the descriptor's thunk (redirected to the outermost section when
// helping), then — for the outermost descriptor — persists the update log,
// publishes it in RD, applies the updates, sets done, and drains retires.
bool run_descr(Runtime& rt, ThreadContext& ctx, Address d);

void retire_descr(Runtime& rt, ThreadContext& ctx, Address d);

struct LogBackup {
  Address log[3] = {};
  int pos[3] = {0, 0, 0};
  std::vector<Address> retire_set;
};

LogBackup save_logs(const ThreadContext& ctx);
void restore_logs(ThreadContext& ctx, LogBackup b);

}  // namespace rflock
