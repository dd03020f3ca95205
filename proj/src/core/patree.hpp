#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/cmj.hpp"
#include "core/rates.hpp"

// Discrete preferential attachment trees: vertex n attaches to vertex m with
// probability f(out-degree of m) / sum_j f(out-degree of j).

namespace cmjsim::patree {

class WeightFunction {
 public:
  enum class Kind { Constant, Affine, Power, Table };

  static WeightFunction constant(double c = 1.0);
  static WeightFunction affine(double beta0);  // f(k) = k + beta0
  static WeightFunction power(double p);       // f(k) = (k+1)^p
  static WeightFunction table(std::vector<double> values);  // f(0..K-1)

  static WeightFunction from_json(const nlohmann::json& descriptor);
  static WeightFunction from_json_text(const std::string& descriptor);
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }

  // f(out_degree); always positive, finite. Throws ConfigError when a table
  // runs out of entries or a value is not a positive finite number.
  double operator()(std::uint32_t out_degree) const;

  // Rates of the matching pure-birth process: lambda_i = f(i-1).
  rates::RateSequence to_rate_sequence() const;

  std::string describe() const;

 private:
  WeightFunction() = default;
  Kind kind_ = Kind::Constant;
  double a_ = 1.0;
  std::vector<double> table_;
};

struct PATree {
  std::vector<std::uint64_t> parent;  // parent[0] == cmj::kRootParent, parent[n] < n

  std::uint64_t size() const { return parent.size(); }
  std::vector<std::uint32_t> out_degrees() const;
};

enum class SamplerStrategy {
  Auto,        // linear scan for trees up to 10^4 vertices, Fenwick above
  LinearScan,
  Fenwick,
};

inline constexpr std::uint64_t kScanStrategyLimit = 10'000;

// Grows a tree on vertices 0..n. One uniform variate per step; both sampler
// strategies consume the same variate and pick the first vertex (in id
// order) whose cumulative weight exceeds u * total, so they make identical
// choices apart from rounding-boundary events of measure ~n*ulp.
PATree grow(const WeightFunction& f, std::uint64_t n, std::uint64_t seed,
            std::uint64_t replicate = 0, SamplerStrategy strategy = SamplerStrategy::Auto);

// Discrete skeleton of a genealogy: identity re-interpretation of the parent
// array (genealogies are already labelled in birth order).
PATree skeleton(const cmj::Genealogy& g);

// CSV: id,parent (root parent written as -1).
void write_tree_csv(const PATree& t, std::ostream& os);

struct StepChiSquare {
  std::uint32_t step;       // vertex whose parent choice is tested
  double chi2;
  std::uint64_t df;
  double p_value;
  std::uint64_t groups;             // realized-prefix groups entering the statistic
  std::uint64_t merged_cells;       // cells pooled for low expected counts
  double skipped_fraction;          // replicate mass in groups too small to test
  bool underpowered;
};

struct CouplingReport {
  std::vector<StepChiSquare> steps;
  std::uint64_t reps = 0;
  std::uint32_t n = 0;
  std::string weight;
  nlohmann::json to_json() const;
};

// Per-step conditional chi-square of sampled parent choices against the
// attachment probabilities evaluated on the realized prefix. The sampler is
// any source of trees with >= n+1 vertices (replicate index -> tree).
CouplingReport conditional_chi_square(const WeightFunction& f, std::uint32_t n,
                                      std::uint64_t reps,
                                      const std::function<PATree(std::uint64_t)>& sampler);

// The coupling check proper: CMJ genealogies with rates lambda_i = f(i-1),
// skeletonized and compared against the discrete attachment law. n <= 8.
CouplingReport coupling_test(const WeightFunction& f, std::uint32_t n, std::uint64_t reps,
                             std::uint64_t seed, unsigned workers = 1);

struct ShapeDiagnostics {
  enum class Verdict { StarLike, PathLike, Mixed, Inconclusive };
  struct Point {
    std::uint64_t n;
    std::uint64_t value;
  };
  std::vector<Point> max_degree_trajectory;
  std::vector<Point> height_trajectory;
  Verdict verdict_hint = Verdict::Inconclusive;

  nlohmann::json to_json() const;
};

const char* to_string(ShapeDiagnostics::Verdict v);

// Max-degree and height trajectories at the given checkpoint sizes, plus a
// heuristic star/path verdict from the final max-degree/height ratio
// (> 10 star-like, < 1/10 path-like, otherwise mixed/inconclusive).
ShapeDiagnostics shape_diagnostics(const PATree& t, const std::vector<std::uint64_t>& checkpoints);

// CSV: n,max_degree,height.
void write_diagnostics_csv(const ShapeDiagnostics& d, std::ostream& os);

}  // namespace cmjsim::patree
