#include "rflock/bank.hpp"

#include <array>

namespace rflock {

NestedBank make_bank(Runtime& rt, const std::vector<int32_t>& balances) {
  NestedBank b;
  for (int32_t v : balances) {
    b.accounts.push_back(rt.mem.allocate(
        std::array<Word, 1>{Word::vint(v, 0)}, Storage::persistent));
    b.locks.push_back(create_lock(rt));
  }
  return b;
}

void transfer(Runtime& rt, ThreadContext& ctx, const NestedBank& b, int from,
              int to, int32_t amount) {
  if (from == to) throw ScenarioError("transfer: from == to");
  int lo = std::min(from, to);
  int hi = std::max(from, to);
  int32_t lo_delta = (from == lo) ? -amount : amount;
  Address lo_cell = b.accounts[lo];
  Address hi_cell = b.accounts[hi];
  Address hi_lock = b.locks[hi];

  int inner = rt.register_thunk([hi_cell, lo_delta](Runtime& r, ThreadContext& c) {
    Word w = mutable_load(r, c, hi_cell);
    mutable_store(r, c, hi_cell, Word::vint(w.vint_value() - lo_delta,
                                            w.vint_version() + 1));
    return true;
  });
  int outer = rt.register_thunk(
      [lo_cell, lo_delta, hi_lock, inner](Runtime& r, ThreadContext& c) {
        Word w = mutable_load(r, c, lo_cell);
        mutable_store(r, c, lo_cell, Word::vint(w.vint_value() + lo_delta,
                                                w.vint_version() + 1));
        while (!try_lock(r, c, hi_lock, inner)) {
        }
        return true;
      });
  while (!try_lock(rt, ctx, b.locks[lo], outer)) {
  }
}

std::vector<int32_t> bank_balances(const Runtime& rt, const NestedBank& b) {
  std::vector<int32_t> out;
  for (Address a : b.accounts) out.push_back(rt.mem.peek(a).vint_value());
  return out;
}

int64_t bank_total(const Runtime& rt, const NestedBank& b) {
  int64_t t = 0;
  for (Address a : b.accounts) t += rt.mem.peek(a).vint_value();
  return t;
}

}  // namespace rflock
