#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cmjsim::rates {

// log2 of a birth rate. Stored instead of the rate itself so the
// pathological family (rates up to 2^(2^(k^3))) stays finite.
struct Log2Rate {
  double value;
};

enum class Kind {
  Constant,     // lambda_i = c
  Affine,       // lambda_i = a*i + b
  PowerPa,      // lambda_i = i^p
  IteratedLog,  // lambda_i = c * i * log i * ... * log^(k) i past the domain
                // threshold, lambda_i = c below it
  Pathological, // 1, a_1 x d_1, 1, a_2 x d_2, 1, ...  with d_k = 4^(k^2),
                // a_k = 2^(2^(k^3))
  Table,        // explicit log2 values, indices 1..size
};

// Positive rate per index i >= 1, immutable after construction and safe for
// concurrent reads.
class RateSequence {
 public:
  static RateSequence constant(double c);
  static RateSequence affine(double a, double b);
  static RateSequence power_pa(double p);
  static RateSequence iterated_log(double c, unsigned k);
  static RateSequence pathological();
  static RateSequence table(std::vector<double> log2_values);

  // {"kind": "...", "params": {...}}; the table kind also accepts
  // {"csv": path} with one log2 value per line.
  static RateSequence from_json(const nlohmann::json& descriptor);
  static RateSequence from_json_text(const std::string& descriptor);
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }

  // Largest queryable index (table size; unbounded otherwise).
  std::uint64_t max_index() const;

  // Exact for integer-power families; full double precision otherwise.
  // Throws ConfigError for index 0 and for table overruns, RangeError when
  // log2(lambda_i) would overflow the double exponent range.
  Log2Rate rate_log2(std::uint64_t i) const;

  std::string describe() const;

 private:
  RateSequence() = default;

  Kind kind_ = Kind::Constant;
  double a_ = 1.0;  // Constant c / Affine a / PowerPa p / IteratedLog c
  double b_ = 0.0;  // Affine b
  unsigned k_ = 0;  // IteratedLog depth
  std::uint64_t iterlog_threshold_ = 1;
  std::vector<double> table_;
};

// Sum_{i=a..b} 1/lambda_i, Kahan-compensated; terms below the smallest
// positive double underflow to exactly zero (deterministic).
double reciprocal_partial_sum(const RateSequence& seq, std::uint64_t a, std::uint64_t b);

// Hard cap on summation ranges, to keep accidental huge loops from hanging.
inline constexpr std::uint64_t kMaxSumIndex = 2'000'000'000ull;

struct DominationCheck {
  bool dominated;  // lambda_i <= mu_i for every i <= prefix
  std::optional<std::uint64_t> first_violation;
};

// Termwise log2-domain comparison over a finite prefix; evidence only.
DominationCheck is_dominated_by(const RateSequence& seq, const RateSequence& majorant,
                                std::uint64_t prefix);

// Index of the last i <= prefix with lambda_i > mu_i, if any (used by the
// domination path of the non-explosion certificate).
std::optional<std::uint64_t> last_domination_violation(const RateSequence& seq,
                                                       const RateSequence& majorant,
                                                       std::uint64_t prefix);

// Block structure of the pathological sequence. Index 1 is the first
// boundary (rate 1); block k occupies the d_k indices after the k-th
// boundary with rate a_k.
namespace pathological {

namespace detail {
// d_k = 4^(k^2) as a 128-bit value (k <= 7).
unsigned __int128 block_length_128(unsigned k);
}  // namespace detail

// d_k = 4^(k^2) while it fits in 64 bits (k <= 5).
std::uint64_t block_length(unsigned k);

// log2(a_k) = 2^(k^3), exact as a double. Throws RangeError for k >= 11,
// the first block whose rate exponent overflows the working real type.
double alpha_log2(unsigned k);

// Index of the m-th boundary entry, m >= 1.
std::uint64_t boundary_index(unsigned m);

// Number of boundary entries with index <= n.
std::uint64_t boundaries_up_to(std::uint64_t n);

}  // namespace pathological

}  // namespace cmjsim::rates
