#pragma once

#include "rflock/lock.hpp"

namespace rflock {

// Nested-lock exerciser: per-account balances behind per-account locks,
// transfers take the locks in ascending account order (outer lock on the
// lower index, nested try_lock on the higher one). Balances are versioned
// words so stale CASes can never ABA their way in.

struct NestedBank {
  std::vector<Address> accounts;  // mutable vint cells
  std::vector<Address> locks;
};

NestedBank make_bank(Runtime& rt, const std::vector<int32_t>& balances);

inline void bank_roots(const NestedBank& b, std::vector<Address>& roots) {
  for (Address a : b.accounts) roots.push_back(a);
  for (Address l : b.locks) roots.push_back(l);
}

// Retries until the nested pair of critical sections runs to completion.
void transfer(Runtime& rt, ThreadContext& ctx, const NestedBank& b, int from,
              int to, int32_t amount);

std::vector<int32_t> bank_balances(const Runtime& rt, const NestedBank& b);
int64_t bank_total(const Runtime& rt, const NestedBank& b);

}  // namespace rflock
