#include "tabmath/lang/rng.hpp"

#include <cmath>
#include <string>

#include "tabmath/lang/errors.hpp"

namespace tabmath::lang {

Fnv1a64& Fnv1a64::byte(std::uint8_t b) noexcept {
  hash_ ^= b;
  hash_ *= kPrime;
  return *this;
}

Fnv1a64& Fnv1a64::bytes(std::string_view data) noexcept {
  for (unsigned char c : data) byte(c);
  return *this;
}

Fnv1a64& Fnv1a64::u64(std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

RngState RngState::derive(std::string_view operator_id, std::string_view purpose,
                          std::uint64_t seed,
                          std::initializer_list<std::uint64_t> sub_keys) noexcept {
  Fnv1a64 h;
  h.bytes(operator_id).byte(0xFF).bytes(purpose).byte(0xFF).u64(seed);
  for (std::uint64_t k : sub_keys) h.byte(0xFF).u64(k);
  return RngState(h.digest());
}

std::uint64_t RngState::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t RngState::below(std::uint64_t span) noexcept {
  if (span == 0) return next_u64();
  // Accept x >= 2^64 mod span so that the accepted region is a multiple of span.
  const std::uint64_t threshold = (0 - span) % span;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % span;
  }
}

std::int64_t RngState::randint(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw RangeError("randint: empty range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  const std::uint64_t span =
      static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + below(span));
}

double RngState::uniform(double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw RangeError("uniform: invalid bounds");
  }
  const double unit = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = lo + (hi - lo) * unit;
  return (r >= hi && hi > lo) ? std::nextafter(hi, lo) : r;
}

std::int64_t rng_randint(RngState& state, std::int64_t lo, std::int64_t hi) {
  return state.randint(lo, hi);
}

}  // namespace tabmath::lang
