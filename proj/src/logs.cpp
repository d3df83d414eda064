#include "rflock/logs.hpp"

#include <array>
#include <sstream>

namespace rflock {

Address create_log(Runtime& rt, int log_size, Storage storage) {
  return rt.mem.allocate_n(static_cast<uint32_t>(log_size), Word::bottom(),
                           storage, AllocKind::log);
}

static Word materialize(Runtime& rt, const PendingEntry& e) {
  switch (e.kind) {
    case kRead:
      return e.value;
    case kUpdate: {
      std::array<Word, 3> rec = {Word::handle(e.target), e.oldv, e.newv};
      return Word::handle(
          rt.mem.allocate(rec, Storage::persistent, AllocKind::log_entry));
    }
    default: {
      std::array<Word, 2> rec = {Word::handle(e.target), Word::handle(e.descr)};
      return Word::handle(
          rt.mem.allocate(rec, Storage::persistent, AllocKind::log_entry));
    }
  }
}

CommitResult commit_value(Runtime& rt, ThreadContext& ctx, const PendingEntry& e) {
  int type = e.kind;
  if (!ctx.log[type].valid()) {
    // Outside a critical section: touch no log.
    Word cval = (type == kRead) ? e.value : Word::bottom();
    return {cval, true};
  }
  int pos = ctx.pos[type];
  if (pos >= rt.cfg.log_size)
    throw ScenarioError("log overflow: thunk exceeded logSize=" +
                        std::to_string(rt.cfg.log_size) + " on log kind " +
                        std::to_string(type));
  if (type == kRead && e.value.is_bottom())
    throw ScenarioError("log: attempt to commit the empty-slot sentinel");
  Address slot = ctx.log[type].plus(pos);
  Word val = materialize(rt, e);
  bool is_first = rt.mem.cas(ctx.tid, slot, Word::bottom(), val);
  Word got = rt.mem.read(ctx.tid, slot);
  if (!is_first && type != kRead) rt.mem.free_block(val.as_handle());
  ctx.pos[type] = pos + 1;
  return {got, is_first};
}

Word fetch_value(Runtime& rt, ThreadContext& ctx, Address target) {
  if (ctx.log[kUpdate].valid()) {
    // Slots below our cursor are committed and immutable; scanning them is
    // free of races.
    for (int i = ctx.pos[kUpdate] - 1; i >= 0; --i) {
      Word slot = rt.mem.peek(ctx.log[kUpdate].plus(i));
      if (slot.is_bottom()) continue;
      UpdateTriple t = read_update_entry(rt, slot);
      if (t.target == target) {
        if (rt.cfg.record_accesses && !ctx.thunk_frames.empty())
          rt.note_access({ctx.thunk_frames.back(), Address{}, false, target,
                          true});
        return t.newv;
      }
    }
  }
  Word v = rt.mem.read(ctx.tid, target);
  if (rt.cfg.record_accesses && !ctx.thunk_frames.empty())
    rt.note_access({ctx.thunk_frames.back(), Address{}, false, target, false});
  return v;
}

int committed_prefix(const Runtime& rt, Address log_base, int log_size) {
  for (int i = 0; i < log_size; ++i)
    if (rt.mem.peek(log_base.plus(i)).is_bottom()) return i;
  return log_size;
}

UpdateTriple read_update_entry(const Runtime& rt, Word slot) {
  Address rec = slot.as_handle();
  return {rt.mem.peek(rec).as_handle(), rt.mem.peek(rec.plus(1)),
          rt.mem.peek(rec.plus(2))};
}

LockPair read_lock_entry(const Runtime& rt, Word slot) {
  Address rec = slot.as_handle();
  return {rt.mem.peek(rec).as_handle(), rt.mem.peek(rec.plus(1)).as_handle()};
}

std::string dump_log(const Runtime& rt, Address log_base, int log_size, int kind) {
  static const char* names[3] = {"READ", "UPDATE", "LOCK"};
  std::ostringstream os;
  for (int i = 0; i < log_size; ++i) {
    Word slot = rt.mem.peek(log_base.plus(i));
    if (slot.is_bottom()) break;
    os << "log kind=" << names[kind] << " pos=" << i << " entry=";
    if (kind == kRead) {
      os << slot.render();
    } else if (kind == kUpdate) {
      UpdateTriple t = read_update_entry(rt, slot);
      os << "<&" << t.target.id << "," << t.oldv.render() << ","
         << t.newv.render() << ">";
    } else {
      LockPair p = read_lock_entry(rt, slot);
      os << "<&" << p.lock.id << ",&" << p.descr.id << ">";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace rflock
