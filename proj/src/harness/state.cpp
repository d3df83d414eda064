#include "rflock/harness/state.hpp"

#include <map>

namespace rflock::harness {

std::vector<uint64_t> canonical_fingerprint(const Runtime& rt,
                                            std::span<const Address> roots) {
  const Memory& mem = rt.mem;
  std::map<uint32_t, uint32_t> canon;  // allocation base -> canonical id
  std::vector<const AllocationRecord*> order;
  std::vector<const AllocationRecord*> work;

  auto visit = [&](Address a) -> uint32_t {
    const AllocationRecord* r = mem.find_allocation(a);
    if (!r) return 0;
    auto [it, fresh] = canon.try_emplace(r->base,
                                         static_cast<uint32_t>(order.size()) + 1);
    if (fresh) {
      order.push_back(r);
      work.push_back(r);
    }
    return it->second;
  };

  std::vector<uint64_t> out;
  for (Address a : roots) {
    out.push_back(visit(a));
    out.push_back(a.id - (mem.find_allocation(a) ? mem.find_allocation(a)->base : 0));
  }
  size_t cursor = 0;
  while (cursor < work.size()) {
    const AllocationRecord* r = work[cursor++];
    bool dead = r->storage == Storage::volatile_ && r->epoch != mem.epoch();
    out.push_back(r->count);
    out.push_back(static_cast<uint64_t>(r->storage));
    out.push_back(static_cast<uint64_t>(r->state));
    out.push_back(dead ? 1 : 0);
    if (dead) continue;
    for (uint32_t i = 0; i < r->count; ++i) {
      Word w = mem.peek(Address{r->base + i});
      out.push_back(static_cast<uint64_t>(w.tag()));
      if (w.tag() == Tag::handle && w.as_handle().valid()) {
        Address t = w.as_handle();
        const AllocationRecord* tr = mem.find_allocation(t);
        out.push_back(visit(t));
        out.push_back(tr ? t.id - tr->base : 0);
      } else if (w.tag() == Tag::lockdescr && w.ld_descr().valid()) {
        Address t = w.ld_descr();
        const AllocationRecord* tr = mem.find_allocation(t);
        out.push_back(visit(t));
        out.push_back(tr ? t.id - tr->base : 0);
        out.push_back(w.ld_locked() ? 1 : 0);
      } else {
        out.push_back(w.bits());
      }
    }
  }
  return out;
}

std::vector<uint64_t> persistent_fingerprint(const Runtime& rt) {
  std::vector<uint64_t> out;
  for (const AllocationRecord& r : rt.mem.allocations()) {
    if (r.storage != Storage::persistent) continue;
    out.push_back(r.base);
    out.push_back(static_cast<uint64_t>(r.state));
    for (uint32_t i = 0; i < r.count; ++i) {
      Address a{r.base + i};
      out.push_back(rt.mem.peek(a).bits());
      out.push_back(rt.mem.persisted(a).bits());
    }
  }
  return out;
}

}  // namespace rflock::harness
