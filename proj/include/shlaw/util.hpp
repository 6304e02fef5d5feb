#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace shlaw {

// Exact integer FLOP arithmetic. Budgets reach 1e20 FLOPs, which overflows
// int64 and loses precision in double, so accounting runs in 128-bit ints.
using flops_t = __int128;

inline flops_t to_flops(double v) {
  if (!(v >= 0)) throw std::invalid_argument("FLOP quantity must be non-negative");
  if (v >= 1.7e38) throw std::invalid_argument("FLOP quantity out of range");
  return static_cast<flops_t>(v);
}

inline double from_flops(flops_t v) { return static_cast<double>(v); }

// splitmix64: cheap, well-mixed seed derivation for independent RNG streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Combine seed material into a fresh stream id (order-sensitive).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2)));
}

inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Kernel entries underflow into the denormal range while hyperparameters are
// being optimized, and denormal arithmetic slows the Cholesky by an order of
// magnitude. Flush denormals to zero for the lifetime of this guard.
class ScopedFlushDenormals {
 public:
  ScopedFlushDenormals() {
#if defined(__SSE2__)
    csr_ = _mm_getcsr();
    _mm_setcsr(csr_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~ScopedFlushDenormals() {
#if defined(__SSE2__)
    _mm_setcsr(csr_);
#endif
  }
  ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
  ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;

 private:
#if defined(__SSE2__)
  unsigned csr_ = 0;
#endif
};

}  // namespace shlaw
