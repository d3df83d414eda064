#pragma once

#include <optional>
#include <string>
#include <utility>

#include "rflock/runtime.hpp"

namespace rflock {

// A log is a fixed-capacity array of CAS-committed slots. A slot holds
// bottom until exactly one committer wins it; READ slots hold the value
// itself, UPDATE and LOCK slots hold a handle to an immutable entry record.
//
// Update records: [target, oldV, newV]; lock records: [lock, descriptor].

Address create_log(Runtime& rt, int log_size, Storage storage);

// A value waiting to be committed. For UPDATE/LOCK the record is only
// allocated if the committing thread actually owns a log (Alg. 3's null-log
// calls commit nothing).
struct PendingEntry {
  static PendingEntry read(Word v) { return {kRead, v, {}, {}, {}, {}}; }
  static PendingEntry update(Address target, Word oldv, Word newv) {
    return {kUpdate, {}, target, oldv, newv, {}};
  }
  static PendingEntry lock(Address l, Address descr) {
    return {kLock, {}, l, {}, {}, descr};
  }
  int kind;
  Word value;     // READ
  Address target; // UPDATE target / LOCK lock
  Word oldv, newv;
  Address descr;  // LOCK
};

struct CommitResult {
  Word value;     // the committed (winner) value, or the null-log fast value
  bool is_first;  // whether our own CAS installed it
};

CommitResult commit_value(Runtime& rt, ThreadContext& ctx, const PendingEntry& e);

// Current value of `target` as seen by this thunk: the newV of the last
// update entry for it strictly below the cursor, else the shared word itself.
Word fetch_value(Runtime& rt, ThreadContext& ctx, Address target);

// Number of committed slots (logs fill as a contiguous prefix).
int committed_prefix(const Runtime& rt, Address log_base, int log_size);

struct UpdateTriple {
  Address target;
  Word oldv, newv;
};
UpdateTriple read_update_entry(const Runtime& rt, Word slot);

struct LockPair {
  Address lock;
  Address descr;
};
LockPair read_lock_entry(const Runtime& rt, Word slot);

// Debugging: one `log kind=<k> pos=<i> entry=<...>` line per committed slot.
std::string dump_log(const Runtime& rt, Address log_base, int log_size, int kind);

}  // namespace rflock
