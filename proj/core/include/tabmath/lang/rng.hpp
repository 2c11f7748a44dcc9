#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace tabmath::lang {

/// 64-bit FNV-1a, used to derive independent PRNG streams.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a64& bytes(std::string_view data) noexcept;
  Fnv1a64& byte(std::uint8_t b) noexcept;
  Fnv1a64& u64(std::uint64_t v) noexcept;  // little-endian
  std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = kOffsetBasis;
};

/// splitmix64 generator. Streams are keyed by (operator id, purpose tag, seed)
/// plus optional integer sub-keys; the key encoding is
///   FNV-1a( id ‖ 0xFF ‖ purpose ‖ 0xFF ‖ le64(seed) [‖ 0xFF ‖ le64(k)]... )
/// and the hash becomes the initial counter state.
class RngState {
 public:
  constexpr explicit RngState(std::uint64_t state = 0) noexcept : state_(state) {}

  static RngState derive(std::string_view operator_id, std::string_view purpose,
                         std::uint64_t seed,
                         std::initializer_list<std::uint64_t> sub_keys = {}) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform over [0, span) by rejection; span == 0 means the full 2^64 range.
  std::uint64_t below(std::uint64_t span) noexcept;

  /// Uniform over [lo, hi] inclusive. Throws lang::RangeError if lo > hi.
  std::int64_t randint(std::int64_t lo, std::int64_t hi);

  /// Uniform over [lo, hi) with 53 random mantissa bits.
  double uniform(double lo, double hi);

  std::uint64_t state() const noexcept { return state_; }

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  std::uint64_t state_;
};

std::int64_t rng_randint(RngState& state, std::int64_t lo, std::int64_t hi);

}  // namespace tabmath::lang
