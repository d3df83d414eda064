#include "rflock/lock.hpp"

#include <array>

namespace rflock {

Address create_lock(Runtime& rt) {
  std::array<Word, 1> init = {Word::lock_descr(Address{}, false)};
  return rt.mem.allocate(init, Storage::persistent);
}

static void end_own_session(ThreadContext& ctx) {
  for (int k = 0; k < 3; ++k) {
    ctx.log[k] = Address{};
    ctx.pos[k] = 0;
  }
}

bool try_lock(Runtime& rt, ThreadContext& ctx, Address lock, int thunk_id) {
  Word cl = mutable_load(rt, ctx, lock);
  bool reentrant = cl.ld_locked() && cl.ld_descr().valid() &&
                   descr::owner_of(rt, cl.ld_descr()) == ctx.wth;
  if (!cl.ld_locked() || reentrant) {
    CreateDescrResult cd = create_descr(rt, ctx, thunk_id, lock);
    Word nl = Word::lock_descr(cd.descr, true);
    cam(rt, ctx, lock, cl, nl);
    Word cl2 = mutable_load(rt, ctx, lock);
    bool own_done =
        mutable_load(rt, ctx, descr::done_cell(cd.descr)).as_bool();
    if (own_done || cl2 == nl) {
      bool result = run_descr(rt, ctx, cd.descr);
      unlock(rt, ctx, lock, nl);
      retire_descr(rt, ctx, cd.descr);
      if (cd.outermost) end_own_session(ctx);
      return result;
    }
    retire_descr(rt, ctx, cd.descr);
    if (cd.outermost) {
      // Acquisition lost: roll back the outermost bookkeeping this call set
      // up (the session never ran, so the log pointers were never switched).
      rt.mem.write(ctx.tid, rt.topd_slot(ctx.tid), Word::null_handle());
      rt.mem.write(ctx.tid, rt.topl_slot(ctx.tid), Word::null_handle());
    }
    cl = cl2;
  }
  if (cl.ld_descr().valid()) {
    run_descr(rt, ctx, cl.ld_descr());
    unlock(rt, ctx, lock, cl);
  }
  return false;
}

void unlock(Runtime& rt, ThreadContext& ctx, Address lock, Word lock_descr) {
  Address d = lock_descr.ld_descr();
  if (!d.valid()) return;
  Address root = descr::topdescr_of(rt, d);
  if (!root.valid()) root = d;
  if (rt.mem.read(ctx.tid, descr::done_cell(root)).as_bool()) {
    Address llog = descr::log_of(rt, root, kLock);
    int n = committed_prefix(rt, llog, rt.cfg.log_size);
    for (int i = 0; i < n; ++i) {
      LockPair p = read_lock_entry(rt, rt.mem.peek(llog.plus(i)));
      cam_unlogged(rt, ctx, p.lock, Word::lock_descr(p.descr, true),
                   Word::lock_descr(p.descr, false));
    }
    if (!descr::topdescr_of(rt, d).valid()) {
      cam_unlogged(rt, ctx, lock, lock_descr, Word::lock_descr(d, false));
      if (descr::owner_of(rt, d) == ctx.tid) {
        rt.mem.write(ctx.tid, rt.topd_slot(ctx.tid), Word::null_handle());
        rt.mem.write(ctx.tid, rt.topl_slot(ctx.tid), Word::null_handle());
      }
    } else {
      // Unlocking a nested lockDescr after the session completed: release
      // the outermost lock it hangs off.
      Address toplock = descr::toplock_of(rt, d);
      if (toplock.valid())
        cam_unlogged(rt, ctx, toplock, Word::lock_descr(root, true),
                     Word::lock_descr(root, false));
    }
  } else {
    // Still inside the outer thunk: two-phase locking defers the release to
    // the outermost section's end.
    commit_value(rt, ctx, PendingEntry::lock(lock, d));
  }
}

void recover(Runtime& rt, ThreadContext& ctx) {
  for (int p = 0; p < rt.threads(); ++p) {
    Word slot = rt.mem.read(ctx.tid, rt.rd_slot(p));
    if (slot.is_bottom() || !slot.as_handle().valid()) continue;
    Address ulog = slot.as_handle();
    int u = committed_prefix(rt, ulog, rt.cfg.log_size);
    for (int i = 0; i < u; ++i) {
      UpdateTriple t = read_update_entry(rt, rt.mem.peek(ulog.plus(i)));
      if (!rt.mem.live_persistent(t.target)) continue;  // crash-wiped target
      if (!(rt.cfg.fault == FaultInject::skip_recover_cas && i == 0))
        rt.mem.cas(ctx.tid, t.target, t.oldv, t.newv);
      rt.mem.pwb(ctx.tid, t.target);
    }
    rt.mem.psync(ctx.tid);
  }
  rt.mem.write(ctx.tid, rt.rd_slot(ctx.tid), Word::bottom());
  rt.mem.pwb(ctx.tid, rt.rd_slot(ctx.tid));
  rt.mem.psync(ctx.tid);
}

}  // namespace rflock
