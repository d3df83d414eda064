#pragma once

#include <map>
#include <string>
#include <vector>

#include "rflock/runtime.hpp"

namespace rflock::harness {

struct ValidatorVerdict {
  bool clean = true;
  std::vector<std::string> flags;
};

// Flags thunks that perform a logged load of some cell after their first
// logged store to a different cell, when the loaded cell is written by a
// thunk under a different lock (the cross-lock read-after-write pattern the
// deferred-update discipline forbids). Loads served from the thunk's own
// update log and same-lock conflicts are exempt.
//
// Intended for solo traces: each registered thunk id should have run once.
ValidatorVerdict validate_thunk_discipline(
    const std::vector<AccessRecord>& accesses,
    const std::map<int, Address>& thunk_locks);

}  // namespace rflock::harness
