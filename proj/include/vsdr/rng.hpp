#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace vsdr {

// 64-bit FNV-1a. Used for cache keys and for deriving per-task seed streams,
// so results do not depend on std::hash or platform details.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag) {
  uint64_t h = fnv1a(tag);
  h = fnv1a(&master, sizeof(master), h);
  return mix64(h);
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t a) {
  uint64_t h = fnv1a(tag);
  h = fnv1a(&master, sizeof(master), h);
  h = fnv1a(&a, sizeof(a), h);
  return mix64(h);
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t a, uint64_t b) {
  uint64_t h = fnv1a(tag);
  h = fnv1a(&master, sizeof(master), h);
  h = fnv1a(&a, sizeof(a), h);
  h = fnv1a(&b, sizeof(b), h);
  return mix64(h);
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, std::string_view a) {
  uint64_t h = fnv1a(tag);
  h = fnv1a(&master, sizeof(master), h);
  h = fnv1a(a, h);
  return mix64(h);
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, std::string_view a, uint64_t b) {
  uint64_t h = fnv1a(tag);
  h = fnv1a(&master, sizeof(master), h);
  h = fnv1a(a, h);
  h = fnv1a(&b, sizeof(b), h);
  return mix64(h);
}

// Deterministic generator with a fixed algorithm (splitmix64 progression),
// identical output on every platform. All randomness in the project flows
// through this type.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  // standard normal via Box-Muller; consumes two uniforms per pair
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u in (0,1] so log is finite
    double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 6.283185307179586476925287 * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace vsdr
