#include "core/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "core/errors.hpp"
#include "core/log2dom.hpp"
#include "core/purebirth.hpp"

namespace cmjsim::certificates {

using nlohmann::json;

namespace {

constexpr const char* kCaveat =
    "grid evidence does not prove an asymptotic statement; certified verdicts "
    "extrapolate the verified finite ranges";

json num_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double json_to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void validate_grid(const std::vector<std::uint64_t>& grid) {
  if (grid.empty()) throw ConfigError("index grid must not be empty");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] == 0) throw ConfigError("grid indices must be >= 1");
    if (j > 0 && grid[j] <= grid[j - 1]) throw ConfigError("grid must be strictly ascending");
  }
  if (grid.back() > rates::kMaxSumIndex) {
    throw ConfigError("grid exceeds the configured maximum index");
  }
}

// log2 of an mpz (exact enough for reporting).
double mpz_log2(const mpz_class& v) {
  signed long exp2_part = 0;
  double mant = mpz_get_d_2exp(&exp2_part, v.get_mpz_t());
  return std::log2(mant) + static_cast<double>(exp2_part);
}

double mpz_to_double_or_inf(const mpz_class& v) {
  double d = v.get_d();
  return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::ExplosionCertified: return "ExplosionCertified";
    case Verdict::NonExplosionCertified: return "NonExplosionCertified";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

namespace {

Verdict verdict_from_string(const std::string& s) {
  if (s == "ExplosionCertified") return Verdict::ExplosionCertified;
  if (s == "NonExplosionCertified") return Verdict::NonExplosionCertified;
  return Verdict::Inconclusive;
}

}  // namespace

std::vector<std::uint64_t> default_grid(std::uint64_t lo, std::uint64_t hi, std::size_t points) {
  if (lo == 0 || hi < lo || points < 2) throw ConfigError("bad grid specification");
  std::vector<std::uint64_t> grid;
  const double llo = std::log(static_cast<double>(lo));
  const double lhi = std::log(static_cast<double>(hi));
  for (std::size_t j = 0; j < points; ++j) {
    double f = static_cast<double>(j) / static_cast<double>(points - 1);
    auto v = static_cast<std::uint64_t>(std::llround(std::exp(llo + f * (lhi - llo))));
    if (grid.empty() || v > grid.back()) grid.push_back(v);
  }
  if (grid.back() != hi) grid.push_back(hi);
  return grid;
}

// ---------------------------------------------------------------------------
// Partition of {2,...,i+1}
// ---------------------------------------------------------------------------

namespace {

// Exact comparison of 2^(k^3) against i + 2k^2 + k + add. The right-hand
// side never reaches 2^65 for uint64 inputs, so k^3 > 66 short-circuits; the
// borderline k = 4 (k^3 = 64) and all small k compare exactly via GMP.
int compare_pow_kc(std::uint64_t i, std::uint32_t k, unsigned add) {
  if (k > 2'000'000) return 1;  // k^3 would overflow; 2^(k^3) dwarfs the rhs
  const std::uint64_t kc = static_cast<std::uint64_t>(k) * k * k;
  if (kc > 66) return 1;
  mpz_class lhs;
  mpz_ui_pow_ui(lhs.get_mpz_t(), 2, static_cast<unsigned long>(kc));
  mpz_class rhs = mpz_class(static_cast<unsigned long>(i));
  rhs += 2ul * k * k + k + add;
  return cmp(lhs, rhs);
}

}  // namespace

bool PartitionAB::in_a(std::uint64_t i, std::uint32_t k) {
  if (k < 2 || static_cast<std::uint64_t>(k) > i + 1) return false;
  return compare_pow_kc(i, k, 2) >= 0;  // 2^(k^3) >= 2k^2 + k + i + 2
}

bool PartitionAB::in_b(std::uint64_t i, std::uint32_t k) {
  if (k < 2 || static_cast<std::uint64_t>(k) > i + 1) return false;
  return compare_pow_kc(i, k, 1) <= 0;  // 2^(k^3) <= 2k^2 + k + i + 1
}

PartitionAB PartitionAB::compute(std::uint64_t i) {
  PartitionAB p;
  p.i = i;
  p.d_exact = 0;
  for (std::uint64_t k = 2; k <= i + 1; ++k) {
    if (k > 4) {
      // k^3 >= 125: in A for every uint64 i; count the rest in one step.
      p.a_size += i + 2 - k;
      break;
    }
    auto k32 = static_cast<std::uint32_t>(k);
    if (in_b(i, k32)) {
      p.b_members.push_back(k32);
      mpz_class d;
      mpz_ui_pow_ui(d.get_mpz_t(), 4, static_cast<unsigned long>(k * k));
      p.d_exact += d;
    } else {
      ++p.a_size;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

json CertificateReport::to_json() const {
  json rows = json::array();
  for (const auto& row : evidence) {
    rows.push_back({{"tag", row.tag},
                    {"name", row.name},
                    {"index_from", row.index_from},
                    {"index_to", row.index_to},
                    {"value", num_to_json(row.value)},
                    {"threshold", num_to_json(row.threshold)},
                    {"pass", row.pass},
                    {"note", row.note}});
  }
  return {{"kind", "certificate_report"},
          {"certificate", certificate},
          {"verdict", to_string(verdict)},
          {"parameters", parameters},
          {"caveat", caveat},
          {"evidence", rows},
          {"extra", extra}};
}

CertificateReport CertificateReport::from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "certificate_report") {
    throw ConfigError("not a certificate report");
  }
  CertificateReport r;
  r.certificate = j.value("certificate", "");
  r.verdict = verdict_from_string(j.value("verdict", "Inconclusive"));
  r.parameters = j.value("parameters", json::object());
  r.caveat = j.value("caveat", "");
  r.extra = j.value("extra", json::object());
  for (const auto& row : j.value("evidence", json::array())) {
    EvidenceRow e;
    e.tag = row.value("tag", "");
    e.name = row.value("name", "");
    e.index_from = row.value("index_from", 0ull);
    e.index_to = row.value("index_to", 0ull);
    e.value = json_to_num(row.value("value", json()));
    e.threshold = json_to_num(row.value("threshold", json()));
    e.pass = row.value("pass", false);
    e.note = row.value("note", "");
    r.evidence.push_back(std::move(e));
  }
  return r;
}

std::string CertificateReport::evidence_csv() const {
  std::ostringstream os;
  os << "tag,name,index_from,index_to,value,threshold,pass,note\n";
  for (const auto& row : evidence) {
    os << csv_escape(row.tag) << ',' << csv_escape(row.name) << ',' << row.index_from << ','
       << row.index_to << ',' << fmt_double(row.value) << ',' << fmt_double(row.threshold) << ','
       << (row.pass ? 1 : 0) << ',' << csv_escape(row.note) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Condition (i): reciprocal series convergence
// ---------------------------------------------------------------------------

CertificateReport check_condition_i(const rates::RateSequence& seq,
                                    const std::vector<std::uint64_t>& n_grid,
                                    std::optional<TailBound> tail) {
  validate_grid(n_grid);
  if (tail && !(tail->c > 0.0 && tail->delta > 0.0)) {
    throw ConfigError("tail bound needs c > 0 and delta > 0");
  }

  CertificateReport report;
  report.certificate = "i";
  report.caveat = kCaveat;
  report.parameters["grid"] = n_grid;
  report.parameters["sequence"] = seq.describe();

  // Partial sums at the grid points and at 2n for the doubling increments.
  const std::uint64_t n_max = n_grid.back();
  std::vector<std::uint64_t> wanted;
  for (auto n : n_grid) {
    wanted.push_back(n);
    if (n <= n_max / 2) wanted.push_back(2 * n);
  }
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  std::map<std::uint64_t, double> partial;  // S_n at wanted indices
  {
    double sum = 0.0, comp = 0.0;
    std::size_t w = 0;
    for (std::uint64_t i = 1; i <= wanted.back(); ++i) {
      double term = pow2(-seq.rate_log2(i).value);
      double y = term - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      while (w < wanted.size() && wanted[w] == i) {
        partial[i] = sum;
        ++w;
      }
    }
  }

  for (auto n : n_grid) {
    report.evidence.push_back({"conv", "partial sum of reciprocal rates", 1, n, partial.at(n),
                               0.0, true, "informational"});
  }
  for (auto n : n_grid) {
    if (n > n_max / 2) continue;
    report.evidence.push_back({"conv", "doubling increment of the partial sum", n + 1, 2 * n,
                               partial.at(2 * n) - partial.at(n), 0.0, true, "informational"});
  }

  bool certified = false;
  if (tail) {
    // Termwise lambda_i >= c i^(1+delta) on the verified prefix.
    double min_margin = std::numeric_limits<double>::infinity();
    std::uint64_t min_at = 1;
    const double log2_c = std::log2(tail->c);
    for (std::uint64_t i = 1; i <= n_max; ++i) {
      double margin = seq.rate_log2(i).value - (log2_c + (1.0 + tail->delta) * std::log2(static_cast<double>(i)));
      if (margin < min_margin) {
        min_margin = margin;
        min_at = i;
      }
    }
    const bool termwise_ok = min_margin >= -1e-9;
    report.evidence.push_back({"conv", "declared bound lambda_i >= c i^(1+delta), min log2 margin",
                               1, n_max, min_margin, 0.0, termwise_ok,
                               "worst index " + std::to_string(min_at)});
    const double tail_value = std::pow(static_cast<double>(n_max), -tail->delta) /
                              (tail->c * tail->delta);
    report.evidence.push_back({"conv", "analytic tail bound past the verified prefix", n_max + 1,
                               0, tail_value, 0.0, true, "declared extrapolation"});
    report.parameters["tail_bound"] = {{"c", tail->c}, {"delta", tail->delta}};
    report.parameters["limit_upper_bound"] = partial.at(n_max) + tail_value;
    certified = termwise_ok;
  } else {
    report.evidence.push_back({"conv", "no analytic tail bound declared", 0, 0, 0.0, 0.0, true,
                               "partial sums reported as evidence only"});
  }

  if (seq.kind() == rates::Kind::Pathological) {
    const std::uint64_t m = rates::pathological::boundaries_up_to(n_max);
    report.evidence.push_back({"rates", "boundary entries below n_max, each contributing 1",
                               1, n_max, static_cast<double>(m), 0.0, true,
                               "partial sum >= boundary count: series diverges"});
  }

  report.verdict = certified ? Verdict::ExplosionCertified : Verdict::Inconclusive;
  return report;
}

// ---------------------------------------------------------------------------
// Condition (ii): slope + window-sum + witness triple + intensity series
// ---------------------------------------------------------------------------

namespace {

struct StageOutcome {
  bool passed = false;
  std::string failed_stage;
  ParamTriple witness{};
  std::uint64_t side_threshold_index = 0;     // lambda_i >= r i verified from here
  std::uint64_t series_threshold_index = 0;   // intensity term <= n^-2 from this grid point
};

std::uint64_t window_start(double eps, std::uint64_t n) {
  double a = std::ceil(eps * std::log(static_cast<double>(n)));
  if (a < 1.0) return 1;
  return static_cast<std::uint64_t>(a);
}

// One streamed pass collecting prefix reciprocal sums at the window edges.
std::vector<double> window_sums(const rates::RateSequence& seq, double eps,
                                const std::vector<std::uint64_t>& grid) {
  std::vector<std::uint64_t> edges;
  for (auto n : grid) {
    std::uint64_t a = window_start(eps, n);
    if (a > 1) edges.push_back(a - 1);
    edges.push_back(n);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::map<std::uint64_t, double> prefix;
  prefix[0] = 0.0;
  double sum = 0.0, comp = 0.0;
  std::size_t w = 0;
  for (std::uint64_t i = 1; i <= edges.back(); ++i) {
    double term = pow2(-seq.rate_log2(i).value);
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    while (w < edges.size() && edges[w] == i) {
      prefix[i] = sum;
      ++w;
    }
  }

  std::vector<double> out;
  out.reserve(grid.size());
  for (auto n : grid) {
    std::uint64_t a = window_start(eps, n);
    if (a > n) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(prefix.at(n) - prefix.at(a - 1));
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t points) {
  std::vector<double> v;
  for (std::size_t j = 0; j < points; ++j) {
    double f = points == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(points - 1);
    v.push_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))));
  }
  return v;
}

// Smallest index from which lambda_i >= r*i holds through n_max (one pass).
std::uint64_t side_condition_threshold(const rates::RateSequence& seq, double r,
                                       std::uint64_t n_max) {
  const double log2_r = std::log2(r);
  std::uint64_t last_violation = 0;
  for (std::uint64_t i = 1; i <= n_max; ++i) {
    if (seq.rate_log2(i).value < log2_r + std::log2(static_cast<double>(i))) last_violation = i;
  }
  return last_violation + 1;
}

StageOutcome run_stages(const rates::RateSequence& seq, double eps,
                        const std::vector<std::uint64_t>& grid, std::uint64_t budget,
                        std::vector<EvidenceRow>& evidence, json& params,
                        const std::string& note) {
  StageOutcome out;
  const std::uint64_t n_max = grid.back();
  const std::size_t mid_idx = grid.size() / 2;
  const std::uint64_t mid_n = grid[mid_idx];

  // Stage 1: slope evidence for lambda_i / i -> infinity.
  std::vector<double> slope(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    slope[j] = seq.rate_log2(grid[j]).value - std::log2(static_cast<double>(grid[j]));
  }
  bool monotone = true;
  std::size_t first_drop = 0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (slope[j] < slope[j - 1] - 1e-9) {
      monotone = false;
      if (first_drop == 0) first_drop = j;
    }
  }
  const bool doubling = slope.back() - slope.front() >= 1.0;
  const bool stage1 = monotone && doubling;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    evidence.push_back({"lim1", "log2(lambda_n / n)", grid[j], grid[j], slope[j], 0.0, true,
                        note.empty() ? "informational" : note});
  }
  evidence.push_back({"lim1", "slope nondecreasing on grid and gaining >= 1", grid.front(),
                      n_max, slope.back() - slope.front(), 1.0, stage1,
                      monotone ? note : note + (note.empty() ? "" : "; ") + "drop at grid point " +
                                            std::to_string(grid[std::max<std::size_t>(first_drop, 1)])});
  if (!stage1) {
    out.failed_stage = "stage 1 (rate slope)";
    return out;
  }

  // Stage 2: window sums with the liminf proxy.
  std::vector<double> w = window_sums(seq, eps, grid);
  double liminf_proxy = std::numeric_limits<double>::infinity();
  for (std::size_t j = mid_idx; j < grid.size(); ++j) liminf_proxy = std::min(liminf_proxy, w[j]);
  const bool no_decay = w.back() >= 0.9 * w[mid_idx];
  const bool stage2 = liminf_proxy > 0.0 && no_decay;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    evidence.push_back({"lim2", "window sum of reciprocal rates", window_start(eps, grid[j]),
                        grid[j], w[j], 0.0, true, note.empty() ? "informational" : note});
  }
  evidence.push_back({"lim2", "liminf proxy: min window sum over top half of grid", grid[mid_idx],
                      n_max, liminf_proxy, 0.0, stage2,
                      no_decay ? note : note + (note.empty() ? "" : "; ") + "window sums decay"});
  if (!stage2) {
    out.failed_stage = "stage 2 (window sums)";
    return out;
  }

  // Stage 3: witness (t, beta, r) search; stage 4 verified per candidate.
  const std::vector<double> t_grid = log_spaced(1e-4, 1.0, 9);
  const std::vector<double> beta_grid = log_spaced(1.0, 1e4, 9);
  const std::vector<double> r_grid = log_spaced(1.0, 1e6, 13);

  std::map<double, std::uint64_t> side_cache;
  auto side_threshold = [&](double r) {
    auto it = side_cache.find(r);
    if (it != side_cache.end()) return it->second;
    std::uint64_t v = side_condition_threshold(seq, r, n_max);
    side_cache[r] = v;
    return v;
  };

  std::uint64_t evaluated = 0;
  bool budget_hit = false;
  double best_margin = -std::numeric_limits<double>::infinity();
  ParamTriple best{t_grid.front(), beta_grid.front(), r_grid.front()};

  auto try_triple = [&](double t, double beta, double r) -> bool {
    if (evaluated >= budget) {
      budget_hit = true;
      return false;
    }
    ++evaluated;
    const double threshold = (t + 2.0 / beta) * (1.0 + beta / (r * eps));
    const bool side_ok = side_threshold(r) <= mid_n;
    if (side_ok && liminf_proxy - threshold > best_margin) {
      best_margin = liminf_proxy - threshold;
      best = {t, beta, r};
    }
    if (!(liminf_proxy > threshold) || !side_ok) return false;

    // Stage 4: the intensity-series terms must drop below n^-2 from some
    // grid point in the lower half onward.
    std::size_t pass_from = grid.size();
    for (std::size_t j = grid.size(); j-- > 0;) {
      double term = purebirth::chernoff_intensity_term_log2(seq, t, beta, grid[j]);
      if (term <= -2.0 * std::log2(static_cast<double>(grid[j]))) {
        pass_from = j;
      } else {
        break;
      }
    }
    if (pass_from == grid.size() || grid[pass_from] > mid_n) return false;

    out.passed = true;
    out.witness = {t, beta, r};
    out.side_threshold_index = side_threshold(r);
    out.series_threshold_index = grid[pass_from];
    return true;
  };

  bool found = false;
  for (double t : t_grid) {
    for (double beta : beta_grid) {
      for (double r : r_grid) {
        if (try_triple(t, beta, r)) {
          found = true;
          break;
        }
      }
      if (found || budget_hit) break;
    }
    if (found || budget_hit) break;
  }
  if (!found && !budget_hit) {
    // One refinement pass around the most promising cell.
    for (double t : log_spaced(best.t / 3.0, std::min(1.0, best.t * 3.0), 5)) {
      for (double beta : log_spaced(std::max(1.0, best.beta / 3.0), best.beta * 3.0, 5)) {
        for (double r : log_spaced(std::max(1.0, best.r / 3.0), best.r * 3.0, 5)) {
          if (try_triple(t, beta, r)) {
            found = true;
            break;
          }
        }
        if (found || budget_hit) break;
      }
      if (found || budget_hit) break;
    }
  }

  params["triples_evaluated"] = evaluated;
  if (!found) {
    evidence.push_back({"in1", "no witness triple found within budget", grid.front(), n_max,
                        best_margin, 0.0, false,
                        "best margin over threshold (t + 2/beta)(1 + beta/(r eps))"});
    out.failed_stage = budget_hit ? "stage 3 (witness search budget exhausted)"
                                  : "stage 3 (no witness triple)";
    return out;
  }

  const double threshold =
      (out.witness.t + 2.0 / out.witness.beta) * (1.0 + out.witness.beta / (out.witness.r * eps));
  evidence.push_back({"in1", "liminf proxy exceeds (t + 2/beta)(1 + beta/(r eps))", grid[mid_idx],
                      n_max, liminf_proxy, threshold, true, note});
  evidence.push_back({"lim1", "lambda_i >= r i verified termwise from index", out.side_threshold_index,
                      n_max, static_cast<double>(out.side_threshold_index),
                      static_cast<double>(mid_n), true, "side condition for the witness r"});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double term = purebirth::chernoff_intensity_term_log2(seq, out.witness.t, out.witness.beta,
                                                          grid[j]);
    double bound = -2.0 * std::log2(static_cast<double>(grid[j]));
    bool required = grid[j] >= out.series_threshold_index;
    evidence.push_back({"series", "intensity-series term log2 vs -2 log2 n", grid[j], grid[j],
                        term, bound, !required || term <= bound,
                        required ? note : "below reported threshold; informational"});
  }
  evidence.push_back({"in2", "series terms <= n^-2 for all grid n past threshold",
                      out.series_threshold_index, n_max,
                      static_cast<double>(out.series_threshold_index),
                      static_cast<double>(mid_n), true, note});
  return out;
}

}  // namespace

CertificateReport check_condition_ii(const rates::RateSequence& seq,
                                     const ConditionIIOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("eps must be > 0");
  std::vector<std::uint64_t> grid = options.n_grid.empty() ? default_grid() : options.n_grid;
  validate_grid(grid);
  if (grid.size() < 4) throw ConfigError("condition (ii) needs a grid with at least 4 points");

  CertificateReport report;
  report.certificate = "ii";
  report.caveat = kCaveat;
  report.parameters["eps"] = options.eps;
  report.parameters["grid"] = grid;
  report.parameters["sequence"] = seq.describe();

  StageOutcome direct = run_stages(seq, options.eps, grid, options.triple_search_budget,
                                   report.evidence, report.parameters, "");
  if (direct.passed) {
    report.verdict = Verdict::NonExplosionCertified;
    report.parameters["path"] = "direct";
    report.parameters["witness"] = {{"t", direct.witness.t},
                                    {"beta", direct.witness.beta},
                                    {"r", direct.witness.r}};
    report.parameters["side_threshold_index"] = direct.side_threshold_index;
    report.parameters["series_threshold_index"] = direct.series_threshold_index;
    return report;
  }
  report.parameters["direct_failed_stage"] = direct.failed_stage;

  if (options.majorant != nullptr) {
    const std::uint64_t n_max = grid.back();
    const std::uint64_t allowed = std::max<std::uint64_t>(1000, n_max / 100);
    auto last_violation = rates::last_domination_violation(seq, *options.majorant, n_max);
    const std::uint64_t v = last_violation.value_or(0);
    const bool dom_ok = v <= allowed;
    report.evidence.push_back({"dom", "last index with lambda_i > majorant_i", 1, n_max,
                               static_cast<double>(v), static_cast<double>(allowed), dom_ok,
                               v == 0 ? "dominated on the whole prefix"
                                      : "finite-prefix violations only; majorant lifted below "
                                        "this index"});
    if (dom_ok) {
      StageOutcome dominated = run_stages(*options.majorant, options.eps, grid,
                                          options.triple_search_budget, report.evidence,
                                          report.parameters, "majorant");
      if (dominated.passed) {
        report.verdict = Verdict::NonExplosionCertified;
        report.parameters["path"] = "domination";
        report.parameters["majorant"] = options.majorant->describe();
        report.parameters["domination_from_index"] = v + 1;
        report.parameters["witness"] = {{"t", dominated.witness.t},
                                        {"beta", dominated.witness.beta},
                                        {"r", dominated.witness.r}};
        report.parameters["side_threshold_index"] = dominated.side_threshold_index;
        report.parameters["series_threshold_index"] = dominated.series_threshold_index;
        return report;
      }
      report.parameters["majorant_failed_stage"] = dominated.failed_stage;
    } else {
      report.parameters["majorant_failed_stage"] = "domination prefix check";
    }
  }

  report.verdict = Verdict::Inconclusive;
  return report;
}

// ---------------------------------------------------------------------------
// Iterated-log window table
// ---------------------------------------------------------------------------

namespace {

// Smallest index whose k-fold iterated log is positive.
std::uint64_t min_index_for_depth(unsigned k) {
  if (k == 0) return 1;
  double e = 1.0;
  for (unsigned j = 0; j + 1 < k; ++j) {
    e = std::exp(e);
    if (e > 1e18) throw ConfigError("iterated-log depth too large for any admissible window");
  }
  return static_cast<std::uint64_t>(std::floor(e)) + 1;
}

double iterated_log(double x, unsigned depth) {
  for (unsigned j = 0; j < depth; ++j) x = std::log(x);
  return x;
}

}  // namespace

std::uint64_t iterated_log_window_min_n(unsigned k) {
  // Window terms need log^(k) i > 0 at the start index ceil(log n); the
  // comparison value needs log^(k+1) n > 0.
  const std::uint64_t a_min = min_index_for_depth(k);
  double n_from_window = std::exp(static_cast<double>(a_min) - 1.0);
  if (n_from_window > 1e18) throw ConfigError("iterated-log depth too large for any admissible window");
  std::uint64_t n1 = static_cast<std::uint64_t>(std::floor(n_from_window)) + 1;
  std::uint64_t n2 = min_index_for_depth(k + 1);
  return std::max({n1, n2, static_cast<std::uint64_t>(2)});
}

std::vector<WindowRow> iterated_log_window(double c, unsigned k,
                                           const std::vector<std::uint64_t>& n_grid) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("scale c must be positive and finite");
  validate_grid(n_grid);
  const std::uint64_t min_n = iterated_log_window_min_n(k);
  if (n_grid.front() < min_n) {
    throw ConfigError("n too small for the " + std::to_string(k) +
                      "-fold iterated log; minimum admissible n is " + std::to_string(min_n));
  }

  std::vector<WindowRow> rows;
  rows.reserve(n_grid.size());
  for (auto n : n_grid) {
    const std::uint64_t a = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(std::log(static_cast<double>(n)))));
    double sum = 0.0, comp = 0.0;
    for (std::uint64_t i = a; i <= n; ++i) {
      double v = c * static_cast<double>(i);
      double x = static_cast<double>(i);
      for (unsigned j = 0; j < k; ++j) {
        x = std::log(x);
        v *= x;
      }
      double term = 1.0 / v;
      double y = term - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    const double asym =
        (iterated_log(static_cast<double>(n), k + 1) - iterated_log(static_cast<double>(n), k + 2)) / c;
    rows.push_back({n, sum, asym, sum / asym});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Counterexample certificate (condition (iii) construction)
// ---------------------------------------------------------------------------

CertificateReport counterexample_certificate(std::uint64_t i_max) {
  if (i_max == 0) throw ConfigError("i_max must be >= 1");
  if (i_max > kCounterexampleMaxI) {
    throw RangeError("i_max " + std::to_string(i_max) +
                     " exceeds the exact-arithmetic budget " + std::to_string(kCounterexampleMaxI));
  }

  CertificateReport report;
  report.certificate = "iii";
  report.caveat = kCaveat;
  report.parameters["i_max"] = i_max;
  report.parameters["schedule"] = "t_i = 2^-i, M_i = i + sum_{k<=i} d_k";

  const double log2_43 = 2.0 - std::log2(3.0);  // log2(4/3)
  std::vector<double> mainprod(i_max + 1, 0.0);
  std::vector<double> s0_margin(i_max + 1, 0.0);

  json rows = json::array();
  mpz_class sum_d = 0;  // sum_{k<=i} d_k, advanced per i
  std::uint64_t f2_exception_max_i = 0;

  for (std::uint64_t i = 1; i <= i_max; ++i) {
    mpz_class d_i;
    mpz_ui_pow_ui(d_i.get_mpz_t(), 4, i * i);
    sum_d += d_i;
    mpz_class m_i = sum_d + i;

    // M_i > 4^(i^2), exactly.
    const bool m_gt = m_i > d_i;  // 4^(i^2) == d_i
    const double m_log2 = mpz_log2(m_i);
    report.evidence.push_back({"M", "M_i > 4^(i^2) (exact)", i, i, m_log2,
                               2.0 * static_cast<double>(i) * static_cast<double>(i), m_gt, ""});

    // Gamma floor for the unit-rate sum: shape i+2, rate 1, threshold 2^-(i+1).
    const double y = pow2(-static_cast<double>(i) - 1.0);
    const double s0_log2 = -y * kLog2E + static_cast<double>(i + 2) *
                                             (-(static_cast<double>(i) + 1.0) -
                                              std::log2(static_cast<double>(i + 2)));
    const double compare_log2 =
        std::log2(static_cast<double>(i)) -
        static_cast<double>(i) * static_cast<double>(i) * std::log2(3.0);
    s0_margin[i] = s0_log2 - compare_log2;

    // Partition of {2..i+1} and the per-factor floors.
    PartitionAB part = PartitionAB::compute(i);
    const double p1_log2 = -kLog2E - 4.0 * static_cast<double>(i) - 8.0;
    double factors_sum = p1_log2 - static_cast<double>(part.a_size);
    double markov_min = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 2; k <= i + 1; ++k) {
      const std::uint64_t kc = k * k * k;
      bool in_b = std::find(part.b_members.begin(), part.b_members.end(),
                            static_cast<std::uint32_t>(k)) != part.b_members.end();
      if (in_b) {
        const double dk = static_cast<double>(rates::pathological::block_length(static_cast<unsigned>(k)));
        factors_sum += -static_cast<double>(i) * dk - dk * kLog2E;
      } else {
        // Sharp Markov complement, recorded for reference.
        double e = kc <= 1023
                       ? static_cast<double>(2 * k * k + k + i + 1) - std::ldexp(1.0, static_cast<int>(kc))
                       : kNegInf;
        markov_min = std::min(markov_min, log2_one_minus_pow2(e));
      }
    }
    const double d_exact = mpz_to_double_or_inf(part.d_exact);
    const double f1_log2 = -static_cast<double>(part.a_size) -
                           static_cast<double>(i) * d_exact - 4.0 * static_cast<double>(i) - 8.0 -
                           (d_exact + 1.0) * kLog2E;
    report.evidence.push_back({"f1", "per-factor floors vs combined bound, abs log2 gap", i, i,
                               std::fabs(factors_sum - f1_log2), 1e-9,
                               std::fabs(factors_sum - f1_log2) <= 1e-9, ""});

    // D_i against the block-length bound when B is nonempty.
    json b_json = json::array();
    for (auto k : part.b_members) b_json.push_back(k);
    double f2_bound_log2 = kNegInf;
    if (!part.b_members.empty()) {
      const auto root = static_cast<unsigned>(
          std::floor(std::cbrt(std::log2(static_cast<double>(i)))));
      mpz_class bound;
      mpz_ui_pow_ui(bound.get_mpz_t(), 4,
                    static_cast<unsigned long>(root + 1) * (root + 1));
      bound *= static_cast<unsigned long>(part.b_members.size());
      f2_bound_log2 = mpz_log2(bound);
      report.evidence.push_back({"f2", "D_i (exact) <= block-length bound", i, i,
                                 mpz_log2(part.d_exact) /* -inf-safe: D>0 here */, f2_bound_log2,
                                 part.d_exact <= bound, ""});
      const unsigned k_star = root + 2;
      if (std::find(part.b_members.begin(), part.b_members.end(), k_star) != part.b_members.end()) {
        f2_exception_max_i = i;
      }
    }

    mainprod[i] = static_cast<double>(i) * static_cast<double>(i) * log2_43 + factors_sum;
    const double main_log2 = (m_log2 - std::log2(static_cast<double>(i))) + s0_log2 + factors_sum;

    json row = {{"i", i},
                {"m_log2", m_log2},
                {"m_gt_4_pow_i2", m_gt},
                {"t_log2", -static_cast<double>(i)},
                {"s0_bound_log2", s0_log2},
                {"s0_margin_log2", s0_margin[i]},
                {"a_size", part.a_size},
                {"b_members", b_json},
                {"d_exact", part.d_exact.get_str()},
                {"p1_log2", p1_log2},
                {"markov_min_log2", num_to_json(markov_min)},
                {"f1_log2", num_to_json(f1_log2)},
                {"f2_bound_log2", num_to_json(f2_bound_log2)},
                {"factors_sum_log2", factors_sum},
                {"mainprod_log2", mainprod[i]},
                {"main_proxy_log2", main_log2}};
    if (i <= 40) {
      row["m_decimal"] = m_i.get_str();
      mpz_class m_next = sum_d;
      mpz_class d_next;
      mpz_ui_pow_ui(d_next.get_mpz_t(), 4, (i + 1) * (i + 1));
      m_next += d_next + (i + 1);
      row["m_next_decimal"] = m_next.get_str();
    }
    rows.push_back(std::move(row));

    report.evidence.push_back({"mainprod", "log2 of (4/3)^(i^2) times the factor floors", i, i,
                               mainprod[i], 0.0, true, "informational"});
    report.evidence.push_back({"main", "log2 of (M_i / i) times the probability floor", i, i,
                               main_log2, 0.0, true, "informational"});
  }
  report.extra["rows"] = std::move(rows);

  // Aggregates: where the product target turns positive / strictly increasing,
  // and the same for the gamma-floor comparison.
  auto stable_from = [&](auto&& fn) {
    std::uint64_t from = i_max + 1;
    for (std::uint64_t i = i_max; i >= 1; --i) {
      if (fn(i)) {
        from = i;
      } else {
        break;
      }
    }
    return from;
  };
  const std::uint64_t positive_from = stable_from([&](std::uint64_t i) { return mainprod[i] > 0.0; });
  const std::uint64_t increasing_from = stable_from([&](std::uint64_t i) {
    return i == 1 || mainprod[i] > mainprod[i - 1];
  });
  const std::uint64_t margin_positive_from =
      stable_from([&](std::uint64_t i) { return s0_margin[i] > 0.0; });
  const std::uint64_t margin_increasing_from = stable_from([&](std::uint64_t i) {
    return i == 1 || s0_margin[i] > s0_margin[i - 1];
  });

  const std::uint64_t last_quarter = std::max<std::uint64_t>(1, (3 * i_max) / 4);
  const bool target_ok = positive_from <= last_quarter && increasing_from <= last_quarter;
  report.evidence.push_back({"mainprod", "product target positive and increasing on the last "
                             "quarter of the i-range", last_quarter, i_max,
                             static_cast<double>(std::max(positive_from, increasing_from)),
                             static_cast<double>(last_quarter), target_ok, ""});
  report.evidence.push_back({"Gamma", "gamma floor dominates i 3^(-i^2) from index", margin_positive_from,
                             i_max, static_cast<double>(margin_positive_from),
                             static_cast<double>(i_max), margin_positive_from <= i_max, ""});

  report.parameters["mainprod_positive_from"] = positive_from;
  report.parameters["mainprod_increasing_from"] = increasing_from;
  report.parameters["s0_margin_positive_from"] = margin_positive_from;
  report.parameters["s0_margin_increasing_from"] = margin_increasing_from;
  report.parameters["f2_exception_max_i"] = f2_exception_max_i;
  report.parameters["reciprocal_series"] = "divergent: every boundary entry contributes 1";

  report.verdict = target_ok ? Verdict::ExplosionCertified : Verdict::Inconclusive;
  return report;
}

// ---------------------------------------------------------------------------
// Certificates vs Monte Carlo
// ---------------------------------------------------------------------------

ConsistencySummary certificate_vs_simulation(const CertificateReport& report,
                                             const std::optional<cmj::ProbeResult>& probe) {
  ConsistencySummary out;
  if (!probe || probe->rows.empty()) {
    out.status = "no_simulation_evidence";
    out.notes.push_back("no probe results supplied");
    return out;
  }
  double max_p = 0.0;
  for (const auto& row : probe->rows) max_p = std::max(max_p, row.p_hat);
  const bool explosion_signal = probe->cap_fraction >= 0.5 || max_p >= 0.5;

  std::ostringstream sig;
  sig << "probe: cap fraction " << probe->cap_fraction << ", max p_hat " << max_p << " at target "
      << probe->target_population;
  out.notes.push_back(sig.str());

  if (report.verdict == Verdict::NonExplosionCertified && explosion_signal) {
    out.status = "contradiction";
    out.notes.push_back("non-explosion certified but the probe reaches the target population "
                        "within small horizons; flagged for review (certificate not overridden)");
  } else if (report.verdict == Verdict::ExplosionCertified && !explosion_signal) {
    out.status = "consistent";
    out.notes.push_back("no explosion signal at the probed horizons; not a contradiction "
                        "(explosion may occur beyond them)");
  } else {
    out.status = "consistent";
  }
  return out;
}

json ConsistencySummary::to_json() const {
  return {{"kind", "consistency_summary"}, {"status", status}, {"notes", notes}};
}

}  // namespace cmjsim::certificates
