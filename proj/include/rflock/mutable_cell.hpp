#pragma once

#include "rflock/logs.hpp"
#include "rflock/runtime.hpp"

namespace rflock {

// The mutable<V> object: a CAS-able shared word whose reads are committed to
// the read log and whose writes are deferred update-log entries. Load, store
// and cam are the object interface; create/retire/direct_write are the
// allocation companions.

Word mutable_load(Runtime& rt, ThreadContext& ctx, Address cell);

void mutable_store(Runtime& rt, ThreadContext& ctx, Address cell, Word newv);

// Load-checked CAS with no result ("successful" when the CAS lands).
void cam(Runtime& rt, ThreadContext& ctx, Address cell, Word oldv, Word newv);

// Release-side CAM: direct read + CAS, never logged. Used by unlock paths,
// which each thread executes independently of the replayed thunk.
void cam_unlogged(Runtime& rt, ThreadContext& ctx, Address cell, Word oldv,
                  Word newv);

// Allocates a block and commits its handle to the read log; losers free
// their allocation and adopt the winner's.
Address create_object(Runtime& rt, ThreadContext& ctx,
                      std::span<const Word> init, Storage storage);

// Commits the retire marker; the first committer owns deferred reclamation.
void retire_object(Runtime& rt, ThreadContext& ctx, Address obj);

// Initialization escape hatch: writes the shared word in place, outside the
// logged interface.
void direct_write(Runtime& rt, ThreadContext& ctx, Address cell, Word v);

}  // namespace rflock
