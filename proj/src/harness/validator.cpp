#include "rflock/harness/validator.hpp"

#include <set>
#include <sstream>

namespace rflock::harness {

ValidatorVerdict validate_thunk_discipline(
    const std::vector<AccessRecord>& accesses,
    const std::map<int, Address>& thunk_locks) {
  // Which locks' thunks store each cell.
  std::map<uint32_t, std::set<uint32_t>> storers;
  for (const auto& a : accesses) {
    if (!a.is_store) continue;
    auto it = thunk_locks.find(a.thunk_id);
    if (it != thunk_locks.end()) storers[a.cell.id].insert(it->second.id);
  }

  ValidatorVerdict v;
  std::map<int, bool> store_seen;
  std::map<int, std::set<uint32_t>> own_stores;
  std::set<int> flagged;
  for (const auto& a : accesses) {
    auto it = thunk_locks.find(a.thunk_id);
    if (it == thunk_locks.end()) continue;
    uint32_t own_lock = it->second.id;
    if (a.is_store) {
      store_seen[a.thunk_id] = true;
      own_stores[a.thunk_id].insert(a.cell.id);
      continue;
    }
    if (!store_seen[a.thunk_id]) continue;
    if (a.from_update_log) continue;           // served by FetchValue
    if (own_stores[a.thunk_id].count(a.cell.id)) continue;
    auto st = storers.find(a.cell.id);
    if (st == storers.end()) continue;         // nobody writes it under a lock
    bool foreign = false;
    for (uint32_t l : st->second)
      if (l != own_lock) foreign = true;
    if (foreign && flagged.insert(a.thunk_id).second) {
      std::ostringstream os;
      os << "thunk " << a.thunk_id << " (lock &" << own_lock
         << ") loads cell &" << a.cell.id
         << " after its first store; the cell is written under a different lock";
      v.clean = false;
      v.flags.push_back(os.str());
    }
  }
  return v;
}

}  // namespace rflock::harness
