#pragma once

#include <cstdint>
#include <string>

namespace rflock {

// Index of one shared word in the simulated memory. id 0 is never allocated.
struct Address {
  uint32_t id = 0;
  bool valid() const { return id != 0; }
  Address plus(uint32_t off) const { return Address{id + off}; }
  friend bool operator==(Address a, Address b) { return a.id == b.id; }
  friend bool operator!=(Address a, Address b) { return a.id != b.id; }
  friend bool operator<(Address a, Address b) { return a.id < b.id; }
};

// A shared word is a tagged value, not raw bytes. CAS compares tagged
// equality (the raw 64-bit image). Bottom is the distinguished sentinel for
// empty log slots and uninitialized cells; it is distinct from every legal
// data value, including handle(0) (a null pointer) and int 0.
enum class Tag : uint8_t {
  bottom = 0,
  intv = 1,
  boolean = 2,
  handle = 3,
  lockdescr = 4,
  vint = 5,  // (value, version) pair for ABA-protected example data
};

class Word {
 public:
  constexpr Word() : bits_(0) {}

  static constexpr Word bottom() { return Word(); }
  static Word of_int(int64_t v) {
    return raw(pack(Tag::intv, static_cast<uint64_t>(v) & payload_mask));
  }
  static Word of_bool(bool b) { return raw(pack(Tag::boolean, b ? 1 : 0)); }
  static Word handle(Address a) { return raw(pack(Tag::handle, a.id)); }
  static Word null_handle() { return handle(Address{0}); }
  static Word lock_descr(Address descr, bool locked) {
    return raw(pack(Tag::lockdescr,
                    (static_cast<uint64_t>(descr.id) << 1) | (locked ? 1 : 0)));
  }
  static Word vint(int32_t value, uint32_t version) {
    uint64_t p = (static_cast<uint64_t>(version) << 32) |
                 static_cast<uint32_t>(value);
    return raw(pack(Tag::vint, p));
  }
  static Word from_bits(uint64_t b) { return raw(b); }

  Tag tag() const { return static_cast<Tag>(bits_ >> 60); }
  bool is_bottom() const { return bits_ == 0; }

  int64_t as_int() const {
    // sign-extend the 60-bit payload
    int64_t p = static_cast<int64_t>(payload() << 4);
    return p >> 4;
  }
  bool as_bool() const { return payload() != 0; }
  Address as_handle() const { return Address{static_cast<uint32_t>(payload())}; }
  bool ld_locked() const { return payload() & 1; }
  Address ld_descr() const { return Address{static_cast<uint32_t>(payload() >> 1)}; }
  int32_t vint_value() const { return static_cast<int32_t>(payload() & 0xffffffffu); }
  uint32_t vint_version() const { return static_cast<uint32_t>((payload() >> 32) & 0xfffffffu); }

  uint64_t bits() const { return bits_; }

  friend bool operator==(Word a, Word b) { return a.bits_ == b.bits_; }
  friend bool operator!=(Word a, Word b) { return a.bits_ != b.bits_; }

  std::string render() const;

 private:
  static constexpr uint64_t payload_mask = (uint64_t{1} << 60) - 1;
  static constexpr uint64_t pack(Tag t, uint64_t payload) {
    return (static_cast<uint64_t>(t) << 60) | (payload & payload_mask);
  }
  static constexpr Word raw(uint64_t b) {
    Word w;
    w.bits_ = b;
    return w;
  }
  uint64_t payload() const { return bits_ & payload_mask; }

  uint64_t bits_;
};

inline std::string Word::render() const {
  switch (tag()) {
    case Tag::bottom: return "_";
    case Tag::intv: return "i" + std::to_string(as_int());
    case Tag::boolean: return as_bool() ? "true" : "false";
    case Tag::handle: return "&" + std::to_string(as_handle().id);
    case Tag::lockdescr:
      return "ld(&" + std::to_string(ld_descr().id) + "," +
             (ld_locked() ? "L" : "U") + ")";
    case Tag::vint:
      return "v" + std::to_string(vint_value()) + "@" +
             std::to_string(vint_version());
  }
  return "?";
}

}  // namespace rflock
