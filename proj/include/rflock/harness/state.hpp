#pragma once

#include <span>
#include <vector>

#include "rflock/runtime.hpp"

namespace rflock::harness {

// Address-independent serialization of the heap graph reachable from the
// roots: allocations get canonical ids in first-visit order, handles are
// rewritten to (canonical id, offset). Two runs that built isomorphic
// structures produce equal fingerprints regardless of allocation order.
std::vector<uint64_t> canonical_fingerprint(const Runtime& rt,
                                            std::span<const Address> roots);

// Raw dump of the persistent heap (volatile and persisted views plus
// allocation states). Used to compare recovery variants over the same
// memory image, where addresses are directly comparable.
std::vector<uint64_t> persistent_fingerprint(const Runtime& rt);

}  // namespace rflock::harness
