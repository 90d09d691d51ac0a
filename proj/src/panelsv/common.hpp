#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace panelsv {

// Error categories shared with the C API status codes.
enum class ErrorCode : int {
  invalid_argument = 1,
  parse = 2,
  dimension = 3,
  numeric = 4,
  io = 5,
  unknown_scenario = 6,
  internal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// FNV-1a 64-bit, used for dataset/config digests (provenance, not security).
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  void update(double x) { update(&x, sizeof(x)); }
  void update(std::int64_t x) { update(&x, sizeof(x)); }
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::uint64_t value() const { return hash_; }
  std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

// Decimal serialization used by every writer: 17 significant digits
// round-trips IEEE doubles exactly.
std::string format_double(double x);

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a_string(const std::string& s) {
  Fnv1a h;
  h.update(s);
  return h.value();
}

}  // namespace panelsv
