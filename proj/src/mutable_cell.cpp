#include "rflock/mutable_cell.hpp"

namespace rflock {

static void record_access(Runtime& rt, ThreadContext& ctx, bool is_store,
                          Address cell) {
  if (rt.cfg.record_accesses && !ctx.thunk_frames.empty())
    rt.note_access({ctx.thunk_frames.back(), Address{}, is_store, cell, false});
}

Word mutable_load(Runtime& rt, ThreadContext& ctx, Address cell) {
  Word v = fetch_value(rt, ctx, cell);
  return commit_value(rt, ctx, PendingEntry::read(v)).value;
}

void mutable_store(Runtime& rt, ThreadContext& ctx, Address cell, Word newv) {
  record_access(rt, ctx, true, cell);
  Word oldv = fetch_value(rt, ctx, cell);
  commit_value(rt, ctx, PendingEntry::update(cell, oldv, newv));
}

void cam(Runtime& rt, ThreadContext& ctx, Address cell, Word oldv, Word newv) {
  Word check = mutable_load(rt, ctx, cell);
  if (check != oldv) return;
  rt.mem.cas(ctx.tid, cell, oldv, newv);
}

void cam_unlogged(Runtime& rt, ThreadContext& ctx, Address cell, Word oldv,
                  Word newv) {
  Word check = rt.mem.read(ctx.tid, cell);
  if (check != oldv) return;
  rt.mem.cas(ctx.tid, cell, oldv, newv);
}

Address create_object(Runtime& rt, ThreadContext& ctx,
                      std::span<const Word> init, Storage storage) {
  Address fresh = rt.mem.allocate(init, storage);
  CommitResult r = commit_value(rt, ctx, PendingEntry::read(Word::handle(fresh)));
  if (!r.is_first) {
    rt.mem.free_block(fresh);
    return r.value.as_handle();
  }
  return fresh;
}

void retire_object(Runtime& rt, ThreadContext& ctx, Address obj) {
  CommitResult r = commit_value(rt, ctx, PendingEntry::read(Word::of_int(1)));
  if (r.is_first) ctx.retire_set.push_back(obj);
}

void direct_write(Runtime& rt, ThreadContext& ctx, Address cell, Word v) {
  rt.mem.write(ctx.tid, cell, v);
}

}  // namespace rflock
