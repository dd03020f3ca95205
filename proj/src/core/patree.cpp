#include "core/patree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/fenwick.hpp"
#include "core/parallel.hpp"
#include "core/stats.hpp"

namespace cmjsim::patree {

using nlohmann::json;

WeightFunction WeightFunction::constant(double c) {
  if (!(std::isfinite(c) && c > 0.0)) throw ConfigError("constant weight must be positive and finite");
  WeightFunction f;
  f.kind_ = Kind::Constant;
  f.a_ = c;
  return f;
}

WeightFunction WeightFunction::affine(double beta0) {
  if (!(std::isfinite(beta0) && beta0 > 0.0)) {
    throw ConfigError("affine weight shift must be positive so f(0) > 0");
  }
  WeightFunction f;
  f.kind_ = Kind::Affine;
  f.a_ = beta0;
  return f;
}

WeightFunction WeightFunction::power(double p) {
  if (!std::isfinite(p)) throw ConfigError("power weight exponent must be finite");
  WeightFunction f;
  f.kind_ = Kind::Power;
  f.a_ = p;
  return f;
}

WeightFunction WeightFunction::table(std::vector<double> values) {
  if (values.empty()) throw ConfigError("weight table must not be empty");
  for (double v : values) {
    if (!(std::isfinite(v) && v > 0.0)) throw ConfigError("weight table entries must be positive and finite");
  }
  WeightFunction f;
  f.kind_ = Kind::Table;
  f.table_ = std::move(values);
  return f;
}

double WeightFunction::operator()(std::uint32_t k) const {
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::Affine:
      return static_cast<double>(k) + a_;
    case Kind::Power: {
      double v = std::pow(static_cast<double>(k) + 1.0, a_);
      if (!(std::isfinite(v) && v > 0.0)) {
        throw ConfigError("power weight overflowed at out-degree " + std::to_string(k));
      }
      return v;
    }
    case Kind::Table:
      if (k >= table_.size()) {
        throw ConfigError("weight table has " + std::to_string(table_.size()) +
                          " entries; out-degree " + std::to_string(k) + " out of range");
      }
      return table_[k];
  }
  throw InternalError("unknown weight kind");
}

rates::RateSequence WeightFunction::to_rate_sequence() const {
  switch (kind_) {
    case Kind::Constant:
      return rates::RateSequence::constant(a_);
    case Kind::Affine:
      // lambda_i = f(i-1) = i + (beta0 - 1)
      return rates::RateSequence::affine(1.0, a_ - 1.0);
    case Kind::Power:
      return rates::RateSequence::power_pa(a_);
    case Kind::Table: {
      std::vector<double> log2_values(table_.size());
      for (std::size_t i = 0; i < table_.size(); ++i) log2_values[i] = std::log2(table_[i]);
      return rates::RateSequence::table(std::move(log2_values));
    }
  }
  throw InternalError("unknown weight kind");
}

WeightFunction WeightFunction::from_json(const json& descriptor) {
  if (!descriptor.is_object() || !descriptor.contains("kind")) {
    throw ConfigError("weight descriptor must be an object with a \"kind\" field");
  }
  const std::string kind = descriptor.at("kind").get<std::string>();
  json params = descriptor.value("params", json::object());
  try {
    if (kind == "constant") return constant(params.value("c", 1.0));
    if (kind == "affine") return affine(params.value("beta0", 1.0));
    if (kind == "power") return power(params.at("p").get<double>());
    if (kind == "table") return table(params.at("values").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad weight descriptor: ") + e.what());
  }
  throw ConfigError("unknown weight kind \"" + kind + "\"");
}

WeightFunction WeightFunction::from_json_text(const std::string& descriptor) {
  json j = json::parse(descriptor, nullptr, false);
  if (j.is_discarded()) throw ConfigError("weight descriptor is not valid JSON");
  return from_json(j);
}

json WeightFunction::to_json() const {
  json params = json::object();
  switch (kind_) {
    case Kind::Constant: params["c"] = a_; return {{"kind", "constant"}, {"params", params}};
    case Kind::Affine: params["beta0"] = a_; return {{"kind", "affine"}, {"params", params}};
    case Kind::Power: params["p"] = a_; return {{"kind", "power"}, {"params", params}};
    case Kind::Table: params["values"] = table_; return {{"kind", "table"}, {"params", params}};
  }
  throw InternalError("unknown weight kind");
}

std::string WeightFunction::describe() const {
  switch (kind_) {
    case Kind::Constant: return "constant(" + std::to_string(a_) + ")";
    case Kind::Affine: return "affine(" + std::to_string(a_) + ")";
    case Kind::Power: return "power(" + std::to_string(a_) + ")";
    case Kind::Table: return "table[" + std::to_string(table_.size()) + "]";
  }
  return "?";
}

std::vector<std::uint32_t> PATree::out_degrees() const {
  std::vector<std::uint32_t> deg(parent.size(), 0);
  for (std::uint64_t v = 1; v < parent.size(); ++v) ++deg[parent[v]];
  return deg;
}

PATree grow(const WeightFunction& f, std::uint64_t n, std::uint64_t seed,
            std::uint64_t replicate, SamplerStrategy strategy) {
  if (n == 0) throw ConfigError("tree size must be >= 1");
  if (strategy == SamplerStrategy::Auto) {
    strategy = n <= kScanStrategyLimit ? SamplerStrategy::LinearScan : SamplerStrategy::Fenwick;
  }
  rng::CounterRng rng(seed, rng::stream_id(rng::kDomainTree, replicate));

  PATree tree;
  tree.parent.assign(n + 1, cmj::kRootParent);
  std::vector<std::uint32_t> deg(n + 1, 0);
  double total = f(0);

  std::vector<double> weights;
  FenwickTree fenwick(strategy == SamplerStrategy::Fenwick ? n + 1 : 1);
  if (strategy == SamplerStrategy::Fenwick) {
    fenwick.add(0, f(0));
  } else {
    weights.reserve(n + 1);
    weights.push_back(f(0));
  }

  for (std::uint64_t m = 1; m <= n; ++m) {
    const double x = rng.uniform_open(m, 0) * total;
    std::uint64_t chosen;
    if (strategy == SamplerStrategy::Fenwick) {
      chosen = fenwick.upper_bound(x);
    } else {
      chosen = m - 1;  // fallback when rounding pushes x past the last prefix
      double cum = 0.0;
      for (std::uint64_t j = 0; j < m; ++j) {
        cum += weights[j];
        if (cum > x) {
          chosen = j;
          break;
        }
      }
    }
    if (chosen >= m) chosen = m - 1;

    tree.parent[m] = chosen;
    const double old_w = f(deg[chosen]);
    ++deg[chosen];
    const double delta = f(deg[chosen]) - old_w;
    total += delta + f(0);
    if (strategy == SamplerStrategy::Fenwick) {
      fenwick.add(chosen, delta);
      fenwick.add(m, f(0));
    } else {
      weights[chosen] += delta;
      weights.push_back(f(0));
    }
  }
  return tree;
}

PATree skeleton(const cmj::Genealogy& g) {
  PATree t;
  t.parent = g.parent;
  return t;
}

void write_tree_csv(const PATree& t, std::ostream& os) {
  os << "id,parent\n";
  for (std::uint64_t v = 0; v < t.size(); ++v) {
    os << v << ',';
    if (t.parent[v] == cmj::kRootParent) {
      os << -1;
    } else {
      os << t.parent[v];
    }
    os << '\n';
  }
}

namespace {

// Realized-prefix key: parents of vertices 1..m-1 packed 4 bits apiece
// (tested steps are small, <= 12).
std::uint64_t prefix_key(const PATree& t, std::uint32_t m) {
  std::uint64_t key = 0;
  for (std::uint32_t v = 1; v < m; ++v) key |= t.parent[v] << (4 * (v - 1));
  return key;
}

std::vector<std::uint32_t> degrees_from_key(std::uint64_t key, std::uint32_t m) {
  std::vector<std::uint32_t> deg(m, 0);
  for (std::uint32_t v = 1; v < m; ++v) ++deg[(key >> (4 * (v - 1))) & 0xF];
  return deg;
}

struct GroupStat {
  double chi2 = 0.0;
  std::uint64_t df = 0;
  std::uint64_t merged = 0;
  bool usable = false;
};

constexpr double kMinExpected = 5.0;

GroupStat group_chi_square(const std::vector<std::uint64_t>& observed,
                           const std::vector<double>& probs, std::uint64_t total) {
  const std::size_t cells = observed.size();
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double ea = probs[a], eb = probs[b];
    if (ea != eb) return ea < eb;
    return a < b;
  });

  // Pool low-expectation cells (ascending) into one overflow cell.
  GroupStat out;
  std::vector<std::pair<double, double>> final_cells;  // (observed, expected)
  double pool_obs = 0.0, pool_exp = 0.0;
  std::size_t idx = 0;
  for (; idx < cells; ++idx) {
    double e = probs[order[idx]] * static_cast<double>(total);
    if (e >= kMinExpected && pool_exp >= kMinExpected) break;
    if (e >= kMinExpected && pool_exp == 0.0) break;
    pool_obs += static_cast<double>(observed[order[idx]]);
    pool_exp += e;
    ++out.merged;
  }
  if (pool_exp > 0.0) final_cells.emplace_back(pool_obs, pool_exp);
  for (; idx < cells; ++idx) {
    double e = probs[order[idx]] * static_cast<double>(total);
    final_cells.emplace_back(static_cast<double>(observed[order[idx]]), e);
  }
  if (final_cells.size() < 2) return out;  // unusable: no degrees of freedom
  if (final_cells.front().second < kMinExpected) return out;

  for (auto& [obs, exp] : final_cells) {
    double d = obs - exp;
    out.chi2 += d * d / exp;
  }
  out.df = final_cells.size() - 1;
  out.usable = true;
  return out;
}

}  // namespace

CouplingReport conditional_chi_square(const WeightFunction& f, std::uint32_t n,
                                      std::uint64_t reps,
                                      const std::function<PATree(std::uint64_t)>& sampler) {
  if (n == 0 || n > 12) throw ConfigError("tested steps must be in 1..12");
  if (reps == 0) throw ConfigError("reps must be >= 1");

  // counts[m-1]: prefix key -> per-parent tallies at step m
  std::vector<std::map<std::uint64_t, std::vector<std::uint64_t>>> counts(n);
  for (std::uint64_t r = 0; r < reps; ++r) {
    PATree t = sampler(r);
    if (t.size() < static_cast<std::uint64_t>(n) + 1) {
      throw InternalError("sampler returned a tree smaller than the tested prefix");
    }
    for (std::uint32_t m = 1; m <= n; ++m) {
      auto& tally = counts[m - 1][prefix_key(t, m)];
      if (tally.empty()) tally.assign(m, 0);
      ++tally[t.parent[m]];
    }
  }

  CouplingReport report;
  report.n = n;
  report.reps = reps;
  report.weight = f.describe();
  for (std::uint32_t m = 1; m <= n; ++m) {
    StepChiSquare step{};
    step.step = m;
    std::uint64_t skipped = 0;
    for (const auto& [key, tally] : counts[m - 1]) {
      std::uint64_t total = 0;
      for (auto c : tally) total += c;

      // Attachment probabilities on this realized prefix.
      std::vector<std::uint32_t> deg = degrees_from_key(key, m);
      std::vector<double> probs(m);
      double denom = 0.0;
      for (std::uint32_t j = 0; j < m; ++j) denom += f(deg[j]);
      for (std::uint32_t j = 0; j < m; ++j) probs[j] = f(deg[j]) / denom;

      GroupStat gs = group_chi_square(tally, probs, total);
      if (!gs.usable) {
        skipped += total;
        continue;
      }
      step.chi2 += gs.chi2;
      step.df += gs.df;
      step.merged_cells += gs.merged;
      ++step.groups;
    }
    step.skipped_fraction = static_cast<double>(skipped) / static_cast<double>(reps);
    step.underpowered = step.skipped_fraction > 0.2 || (m > 1 && step.df == 0);
    step.p_value = stats::chi_square_pvalue(step.chi2, step.df);
    report.steps.push_back(step);
  }
  return report;
}

CouplingReport coupling_test(const WeightFunction& f, std::uint32_t n, std::uint64_t reps,
                             std::uint64_t seed, unsigned workers) {
  if (n == 0 || n > 8) {
    throw ConfigError("coupling test needs 1 <= n <= 8 (exact conditionals are tractable)");
  }
  if (reps == 0) throw ConfigError("reps must be >= 1");
  rates::RateSequence seq = f.to_rate_sequence();

  std::vector<PATree> trees(reps);
  parallel_replicates(reps, workers, [&](std::uint64_t r) {
    cmj::SimResult res = simulate(seq, purebirth::StopRule::count_of(n + 1), seed, r);
    trees[r] = skeleton(res.genealogy);
  });
  return conditional_chi_square(f, n, reps, [&](std::uint64_t r) { return trees[r]; });
}

json CouplingReport::to_json() const {
  json steps_json = json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"step", s.step},
                          {"chi2", s.chi2},
                          {"df", s.df},
                          {"p_value", s.p_value},
                          {"groups", s.groups},
                          {"merged_cells", s.merged_cells},
                          {"skipped_fraction", s.skipped_fraction},
                          {"underpowered", s.underpowered}});
  }
  return {{"kind", "coupling_report"},
          {"weight", weight},
          {"n", n},
          {"reps", reps},
          {"steps", steps_json}};
}

const char* to_string(ShapeDiagnostics::Verdict v) {
  switch (v) {
    case ShapeDiagnostics::Verdict::StarLike: return "StarLike";
    case ShapeDiagnostics::Verdict::PathLike: return "PathLike";
    case ShapeDiagnostics::Verdict::Mixed: return "Mixed";
    case ShapeDiagnostics::Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

ShapeDiagnostics shape_diagnostics(const PATree& t,
                                   const std::vector<std::uint64_t>& checkpoints) {
  if (checkpoints.empty()) throw ConfigError("at least one checkpoint is required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0 || checkpoints[i] > t.size()) {
      throw ConfigError("checkpoints must lie within the tree size");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw ConfigError("checkpoints must be strictly ascending");
    }
  }

  ShapeDiagnostics d;
  std::vector<std::uint32_t> deg(t.size(), 0);
  std::vector<std::uint32_t> depth(t.size(), 0);
  std::uint64_t max_deg = 0, height = 0;
  std::size_t next_cp = 0;
  for (std::uint64_t v = 0; v < t.size(); ++v) {
    if (v > 0) {
      std::uint64_t p = t.parent[v];
      depth[v] = depth[p] + 1;
      if (depth[v] > height) height = depth[v];
      if (++deg[p] > max_deg) max_deg = deg[p];
    }
    while (next_cp < checkpoints.size() && v + 1 == checkpoints[next_cp]) {
      d.max_degree_trajectory.push_back({v + 1, max_deg});
      d.height_trajectory.push_back({v + 1, height});
      ++next_cp;
    }
  }

  const double final_deg = static_cast<double>(d.max_degree_trajectory.back().value);
  const double final_height = static_cast<double>(std::max<std::uint64_t>(
      d.height_trajectory.back().value, 1));
  const double ratio = final_deg / final_height;
  if (ratio > 10.0) {
    d.verdict_hint = ShapeDiagnostics::Verdict::StarLike;
  } else if (ratio < 0.1) {
    d.verdict_hint = ShapeDiagnostics::Verdict::PathLike;
  } else if (d.max_degree_trajectory.size() >= 2 &&
             d.max_degree_trajectory.back().value >= 2 * d.max_degree_trajectory.front().value &&
             d.height_trajectory.back().value >= 2 * d.height_trajectory.front().value) {
    d.verdict_hint = ShapeDiagnostics::Verdict::Mixed;
  } else {
    d.verdict_hint = ShapeDiagnostics::Verdict::Inconclusive;
  }
  return d;
}

json ShapeDiagnostics::to_json() const {
  json max_deg = json::array(), h = json::array();
  for (const auto& p : max_degree_trajectory) max_deg.push_back({p.n, p.value});
  for (const auto& p : height_trajectory) h.push_back({p.n, p.value});
  return {{"kind", "shape_diagnostics"},
          {"max_degree_trajectory", max_deg},
          {"height_trajectory", h},
          {"verdict_hint", to_string(verdict_hint)}};
}

void write_diagnostics_csv(const ShapeDiagnostics& d, std::ostream& os) {
  os << "n,max_degree,height\n";
  for (std::size_t i = 0; i < d.max_degree_trajectory.size(); ++i) {
    os << d.max_degree_trajectory[i].n << ',' << d.max_degree_trajectory[i].value << ','
       << d.height_trajectory[i].value << '\n';
  }
}

}  // namespace cmjsim::patree
