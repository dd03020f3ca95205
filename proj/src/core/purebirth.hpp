#pragma once

#include <cstdint>
#include <vector>

#include "core/rates.hpp"
#include "core/rng.hpp"

// One individual's reproduction point process: arrival times T_i = sum of
// independent Exp(lambda_j) holding times, plus the analytic tail bounds the
// certificates are built from.

namespace cmjsim::purebirth {

struct StopRule {
  enum class Type { Count, Horizon };
  Type type;
  std::uint64_t count = 0;
  double horizon = 0.0;

  static StopRule count_of(std::uint64_t n) { return {Type::Count, n, 0.0}; }
  static StopRule horizon_of(double t) { return {Type::Horizon, 0, t}; }
};

inline constexpr std::uint64_t kDefaultArrivalCap = 10'000'000ull;

struct ArrivalSample {
  std::vector<double> times;  // non-decreasing, finite, >= 0
  StopRule truncated_at;
  std::uint64_t underflow_count = 0;  // holding times that rounded to exactly 0
  bool cap_hit = false;               // horizon mode ran into the arrival cap
};

// Holding time j is drawn as (standard exponential) * 2^(-log2 lambda_j);
// rates large enough that this underflows give a zero holding time
// ("instantaneous birth"), counted in underflow_count. A horizon of exactly
// 0 returns an empty sample: the point process has no atom at the origin.
ArrivalSample sample_arrivals(const rates::RateSequence& seq, StopRule stop,
                              const rng::CounterRng& rng, std::uint64_t individual = 0,
                              std::uint64_t cap = kDefaultArrivalCap);

struct GammaParams {
  std::uint64_t shape;    // d >= 1
  double rate_log2;       // log2(alpha)
  double t;               // threshold, > 0
  double y_log2;          // log2(alpha * t)

  static GammaParams make(std::uint64_t shape, double rate_log2, double t);
};

// log2 of the lower bound e^(-y) (y/d)^d for P{Gamma(d, alpha) <= t} with
// y = alpha * t. Saturates to -inf when y itself overflows the double range.
double gamma_lower_bound_log2(const GammaParams& p);

struct MarkovBound {
  bool informative;   // false when E X = d/alpha >= t (bound would be <= 0)
  double value_log2;  // log2(1 - (d/alpha)/t), stable for tiny ratios
};

MarkovBound markov_upper_tail_complement_log2(std::uint64_t d, double rate_log2, double t);

// Exponent of the intensity-series term in log2 units:
// beta * ln(n) * (t - sum_{i=1..n} 1/(lambda_i + beta ln n)) * log2(e).
// Rates that overflow to +inf contribute zero reciprocal mass.
double chernoff_intensity_term_log2(const rates::RateSequence& seq, double t, double beta,
                                    std::uint64_t n);

struct IntensityEstimate {
  double mean;
  double std_error;
  std::uint64_t cap_hits;  // replicates whose arrival count hit the cap
  std::uint64_t reps;
};

// Monte Carlo mean of the number of arrivals in [0,t]; a cap hit means the
// count is right-censored (possible explosion within the horizon) and is
// reported, never silently truncated.
IntensityEstimate estimate_intensity(const rates::RateSequence& seq, double t,
                                     std::uint64_t reps, std::uint64_t seed,
                                     std::uint64_t cap = kDefaultArrivalCap,
                                     unsigned workers = 1);

}  // namespace cmjsim::purebirth
