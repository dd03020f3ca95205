#include "core/purebirth.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/log2dom.hpp"
#include "core/parallel.hpp"
#include "core/stats.hpp"

namespace cmjsim::purebirth {

ArrivalSample sample_arrivals(const rates::RateSequence& seq, StopRule stop,
                              const rng::CounterRng& rng, std::uint64_t individual,
                              std::uint64_t cap) {
  ArrivalSample out;
  out.truncated_at = stop;
  if (stop.type == StopRule::Type::Count) {
    if (stop.count == 0) throw ConfigError("arrival count must be >= 1");
    if (stop.count > cap) throw ConfigError("arrival count exceeds the arrival cap");
  } else {
    if (!(stop.horizon >= 0.0) || !std::isfinite(stop.horizon)) {
      throw ConfigError("horizon must be a finite non-negative time");
    }
    if (stop.horizon == 0.0) return out;  // no atom at the origin
  }

  double t = 0.0;
  for (std::uint64_t j = 1;; ++j) {
    double holding = rng.std_exponential(individual, j) * pow2(-seq.rate_log2(j).value);
    if (holding == 0.0) ++out.underflow_count;
    t += holding;
    if (stop.type == StopRule::Type::Horizon && t > stop.horizon) break;
    out.times.push_back(t);
    if (stop.type == StopRule::Type::Count && out.times.size() == stop.count) break;
    if (out.times.size() >= cap) {
      out.cap_hit = true;
      break;
    }
  }
  return out;
}

GammaParams GammaParams::make(std::uint64_t shape, double rate_log2, double t) {
  if (shape == 0) throw ConfigError("gamma shape must be >= 1");
  if (!(t > 0.0)) throw ConfigError("gamma threshold must be > 0");
  return {shape, rate_log2, t, rate_log2 + std::log2(t)};
}

double gamma_lower_bound_log2(const GammaParams& p) {
  // log2[e^(-y) (y/d)^d] = -y log2(e) + d (log2 y - log2 d)
  double y = pow2(p.y_log2);  // +inf when y overflows: bound saturates to -inf
  double d = static_cast<double>(p.shape);
  return -y * kLog2E + d * (p.y_log2 - std::log2(d));
}

MarkovBound markov_upper_tail_complement_log2(std::uint64_t d, double rate_log2, double t) {
  if (d == 0) throw ConfigError("shape must be >= 1");
  if (!(t > 0.0)) throw ConfigError("threshold must be > 0");
  // ratio = (d/alpha)/t in log2 domain
  double ratio_log2 = std::log2(static_cast<double>(d)) - rate_log2 - std::log2(t);
  if (ratio_log2 >= 0.0) return {false, 0.0};  // E X >= t: no information
  return {true, log2_one_minus_pow2(ratio_log2)};
}

double chernoff_intensity_term_log2(const rates::RateSequence& seq, double t, double beta,
                                    std::uint64_t n) {
  if (!(t > 0.0) || !(beta > 0.0)) throw ConfigError("t and beta must be > 0");
  if (n < 2) throw ConfigError("series index n must be >= 2");
  const double shift = beta * std::log(static_cast<double>(n));
  double sum = 0.0, comp = 0.0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    double lambda = pow2(seq.rate_log2(i).value);  // +inf allowed: term becomes 0
    double term = 1.0 / (lambda + shift);
    double y = term - comp;
    double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  }
  return shift * (t - sum) * kLog2E;
}

IntensityEstimate estimate_intensity(const rates::RateSequence& seq, double t,
                                     std::uint64_t reps, std::uint64_t seed,
                                     std::uint64_t cap, unsigned workers) {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t must be finite and >= 0");
  std::vector<double> counts(reps);
  std::vector<std::uint8_t> hit(reps, 0);
  parallel_replicates(reps, workers, [&](std::uint64_t r) {
    rng::CounterRng rng(seed, rng::stream_id(rng::kDomainLine, r));
    ArrivalSample s = sample_arrivals(seq, StopRule::horizon_of(t), rng, 0, cap);
    counts[r] = static_cast<double>(s.times.size());
    hit[r] = s.cap_hit ? 1 : 0;
  });
  stats::MeanAccumulator acc;
  std::uint64_t cap_hits = 0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    acc.add(counts[r]);
    cap_hits += hit[r];
  }
  return {acc.mean(), acc.std_error(), cap_hits, reps};
}

}  // namespace cmjsim::purebirth
