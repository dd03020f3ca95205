#pragma once

#include <cstdint>

namespace cmjsim::stats {

// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a); series for
// x < a+1, continued fraction otherwise.
double regularized_gamma_lower(double a, double x);

// Q(a,x) = 1 - P(a,x).
double regularized_gamma_upper(double a, double x);

// Upper-tail p-value of a chi-square statistic. df == 0 returns 1.
double chi_square_pvalue(double chi2, std::uint64_t df);

// Streaming mean / standard error.
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace cmjsim::stats
