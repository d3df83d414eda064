#include "rflock/descriptor.hpp"

#include <array>

namespace rflock {

CreateDescrResult create_descr(Runtime& rt, ThreadContext& ctx, int thunk_id,
                               Address lock) {
  Address logs[3];
  Word topd = rt.mem.read(ctx.tid, rt.topd_slot(ctx.wth));
  Word topl = rt.mem.read(ctx.tid, rt.topl_slot(ctx.wth));
  bool outermost = (ctx.wth == ctx.tid) && !topd.as_handle().valid();
  if (outermost) {
    logs[kRead] = create_log(rt, rt.cfg.log_size, Storage::volatile_);
    logs[kUpdate] = create_log(rt, rt.cfg.log_size, Storage::persistent);
    logs[kLock] = create_log(rt, rt.cfg.log_size, Storage::persistent);
  } else if (topd.as_handle().valid()) {
    for (int k = 0; k < 3; ++k)
      logs[k] = descr::log_of(rt, topd.as_handle(), k);
  } else {
    // Replay of a session whose owner has moved on: topD[wth] is gone. The
    // descriptor built here never escapes (its read-log slot is already
    // committed), so the session's own log pointers serve as field values.
    for (int k = 0; k < 3; ++k) logs[k] = ctx.log[k];
  }
  std::array<Word, descr::kCells> fields = {
      Word::handle(logs[kRead]),  Word::handle(logs[kUpdate]),
      Word::handle(logs[kLock]),  Word::of_int(thunk_id),
      Word::of_bool(false),       Word::of_int(ctx.wth),
      topd,                        topl};
  Address d = create_object(rt, ctx, fields, Storage::persistent);
  if (outermost) {
    rt.mem.write(ctx.tid, rt.topd_slot(ctx.tid), Word::handle(d));
    rt.mem.write(ctx.tid, rt.topl_slot(ctx.tid), Word::handle(lock));
  }
  rt.note_lock_of_descr(d, lock);
  rt.note_thunk_lock(thunk_id, lock);
  return {d, outermost};
}

LogBackup save_logs(const ThreadContext& ctx) {
  LogBackup b;
  for (int k = 0; k < 3; ++k) {
    b.log[k] = ctx.log[k];
    b.pos[k] = ctx.pos[k];
  }
  b.retire_set = ctx.retire_set;
  return b;
}

void restore_logs(ThreadContext& ctx, LogBackup b) {
  for (int k = 0; k < 3; ++k) {
    ctx.log[k] = b.log[k];
    ctx.pos[k] = b.pos[k];
  }
  ctx.retire_set = std::move(b.retire_set);
}

static void persist_and_apply(Runtime& rt, ThreadContext& ctx, Address target) {
  Address ulog = ctx.log[kUpdate];
  int u = committed_prefix(rt, ulog, rt.cfg.log_size);
  for (int i = 0; i < u; ++i) rt.mem.pwb(ctx.tid, ulog.plus(i));
  rt.mem.pfence(ctx.tid);
  rt.mem.write(ctx.tid, rt.rd_slot(ctx.tid), Word::handle(ulog));
  if (rt.cfg.fault != FaultInject::skip_rd_pwb)
    rt.mem.pwb(ctx.tid, rt.rd_slot(ctx.tid));
  rt.mem.psync(ctx.tid);
  for (int i = 0; i < u; ++i) {
    if (rt.mem.read(ctx.tid, descr::done_cell(target)).as_bool()) break;
    UpdateTriple t = read_update_entry(rt, rt.mem.peek(ulog.plus(i)));
    rt.mem.cas(ctx.tid, t.target, t.oldv, t.newv);
    rt.mem.pwb(ctx.tid, t.target);
  }
  rt.mem.psync(ctx.tid);
}

// Seeded bug for the negative controls: apply updates in place before the
// log or RD is persisted, then go through the motions.
static void apply_then_persist(Runtime& rt, ThreadContext& ctx, Address target) {
  Address ulog = ctx.log[kUpdate];
  int u = committed_prefix(rt, ulog, rt.cfg.log_size);
  for (int i = 0; i < u; ++i) {
    if (rt.mem.read(ctx.tid, descr::done_cell(target)).as_bool()) break;
    UpdateTriple t = read_update_entry(rt, rt.mem.peek(ulog.plus(i)));
    rt.mem.cas(ctx.tid, t.target, t.oldv, t.newv);
    rt.mem.pwb(ctx.tid, t.target);
  }
  for (int i = 0; i < u; ++i) rt.mem.pwb(ctx.tid, ulog.plus(i));
  rt.mem.pfence(ctx.tid);
  rt.mem.write(ctx.tid, rt.rd_slot(ctx.tid), Word::handle(ulog));
  rt.mem.pwb(ctx.tid, rt.rd_slot(ctx.tid));
  rt.mem.psync(ctx.tid);
  rt.mem.psync(ctx.tid);
}

bool run_descr(Runtime& rt, ThreadContext& ctx, Address d) {
  int owner = descr::owner_of(rt, d);
  bool helping = owner != ctx.wth;
  bool own_first_run = !helping && !ctx.log[kRead].valid();
  LogBackup backup;
  int prev_wth = -1;
  Address target = d;
  if (helping) {
    prev_wth = ctx.wth;
    ctx.wth = owner;
    backup = save_logs(ctx);
    for (int k = 0; k < 3; ++k) {
      ctx.log[k] = descr::log_of(rt, d, k);
      ctx.pos[k] = 0;
    }
    ctx.retire_set.clear();
    Address top = descr::topdescr_of(rt, d);
    if (top.valid()) target = top;  // help the outermost section
    rt.note_help({ctx.tid, ctx.wth, d, target});
  } else if (own_first_run) {
    for (int k = 0; k < 3; ++k) {
      ctx.log[k] = descr::log_of(rt, d, k);
      ctx.pos[k] = 0;
    }
  }

  ctx.thunk_frames.push_back(descr::thunk_of(rt, target));
  bool return_val = rt.run_thunk(descr::thunk_of(rt, target), ctx);
  ctx.thunk_frames.pop_back();

  if (!descr::topdescr_of(rt, target).valid()) {
    if (return_val) {
      if (rt.cfg.fault == FaultInject::apply_before_persist)
        apply_then_persist(rt, ctx, target);
      else
        persist_and_apply(rt, ctx, target);
    }
    rt.mem.cas(ctx.tid, descr::done_cell(target), Word::of_bool(false),
               Word::of_bool(true));
    for (Address obj : ctx.retire_set) rt.reclaim_retired(obj);
    ctx.retire_set.clear();
    if (return_val) {
      rt.mem.write(ctx.tid, rt.rd_slot(ctx.tid), Word::bottom());
      rt.mem.pwb(ctx.tid, rt.rd_slot(ctx.tid));
      rt.mem.pfence(ctx.tid);
    }
  }

  if (helping) {
    restore_logs(ctx, std::move(backup));
    ctx.wth = prev_wth;
  }
  return return_val;
}

void retire_descr(Runtime& rt, ThreadContext& ctx, Address d) {
  // A nested descriptor shares the outermost section's logs; those are
  // retired once, by the outermost RetireDescr.
  if (!descr::topdescr_of(rt, d).valid()) {
    retire_object(rt, ctx, descr::log_of(rt, d, kRead));
    retire_object(rt, ctx, descr::log_of(rt, d, kUpdate));
    retire_object(rt, ctx, descr::log_of(rt, d, kLock));
  }
  retire_object(rt, ctx, d);
}

}  // namespace rflock
