#pragma once

#include "rflock/descriptor.hpp"

namespace rflock {

// A lock is a mutable cell holding a packed (descriptor, isLocked) word,
// updated only through CAM. lock_descr(null, false) is the released state.

Address create_lock(Runtime& rt);

// Attempts to acquire the lock and run the thunk; on contention helps the
// holder finish its critical section and returns false.
bool try_lock(Runtime& rt, ThreadContext& ctx, Address lock, int thunk_id);

// Releases the critical section once its outermost descriptor is done: mass-
// releases every lock recorded in the LOCK log, then releases the lock (or
// the outermost lock when called on a nested lockDescr). When the outermost
// thunk is still running, records the lock for the later mass-release.
void unlock(Runtime& rt, ThreadContext& ctx, Address lock, Word lock_descr);

// Post-crash recovery: replays every thread's published update log, then
// clears and persists the caller's own RD slot. Idempotent and safe to run
// concurrently from every recovered thread.
void recover(Runtime& rt, ThreadContext& ctx);

}  // namespace rflock
