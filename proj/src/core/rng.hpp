#pragma once

#include <array>
#include <cstdint>

// Counter-based random numbers (Philox4x64-10). Every variate is a pure
// function of (seed, stream, counter), so replicate r / individual j / event e
// maps to a fixed stream offset and runs reproduce bit-exactly regardless of
// scheduling or worker count.

namespace cmjsim::rng {

using Counter = std::array<std::uint64_t, 4>;

struct PhiloxKey {
  std::uint64_t k0;
  std::uint64_t k1;
};

// One 10-round Philox4x64 block (Random123 convention: the counter is used
// as given, no pre-increment).
std::array<std::uint64_t, 4> philox4x64(const Counter& ctr, const PhiloxKey& key);

// Domain tags keep independent uses of the same (seed, replicate) pair on
// disjoint streams.
inline constexpr std::uint64_t kDomainCmj = 1;
inline constexpr std::uint64_t kDomainTree = 2;
inline constexpr std::uint64_t kDomainLine = 3;

// Master-seed expansion: stream = domain tag in the top byte, replicate below.
inline std::uint64_t stream_id(std::uint64_t domain, std::uint64_t replicate) {
  return (domain << 56) | (replicate & 0x00FF'FFFF'FFFF'FFFFull);
}

// A logical stream: key = (seed, stream), counter lanes supplied per draw.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  std::uint64_t raw(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const {
    return philox4x64({a, b, c, 0}, key_)[0];
  }

  // Uniform on the open interval (0,1); never returns an endpoint, so
  // -log(u) is always finite.
  double uniform_open(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const {
    return (static_cast<double>(raw(a, b, c) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard exponential via inverse CDF.
  double std_exponential(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const;

 private:
  PhiloxKey key_;
};

}  // namespace cmjsim::rng
