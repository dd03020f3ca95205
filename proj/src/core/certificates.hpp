#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <nlohmann/json.hpp>

#include "core/cmj.hpp"
#include "core/rates.hpp"

// Numeric certificates for explosion / non-explosion of the pure-birth
// branching process. Everything is finite, auditable evidence: grid sums,
// verified termwise inequalities and exact integer checks, never a proof of
// an asymptotic statement (the reports carry that caveat).

namespace cmjsim::certificates {

struct ParamTriple {
  double t;
  double beta;
  double r;
};

// Split of {2,...,i+1} by the exact integer comparison of 2^(k^3) against
// 2k^2+k+i+2 (membership in A) / 2k^2+k+i+1 (membership in B); the two
// conditions are integer complements. Computed with exact arithmetic for
// small k and short-circuited to A for k^3 >= 60, where 2^(k^3) dwarfs any
// reachable right-hand side.
struct PartitionAB {
  std::uint64_t i = 0;
  std::uint64_t a_size = 0;
  std::vector<std::uint32_t> b_members;
  mpz_class d_exact;  // sum of d_k over B

  static bool in_a(std::uint64_t i, std::uint32_t k);
  static bool in_b(std::uint64_t i, std::uint32_t k);
  static PartitionAB compute(std::uint64_t i);
};

enum class Verdict { ExplosionCertified, NonExplosionCertified, Inconclusive };

const char* to_string(Verdict v);

struct EvidenceRow {
  std::string tag;   // short quantity tag ("conv", "lim1", "in2", "p1", ...)
  std::string name;  // human-readable quantity
  std::uint64_t index_from = 0;
  std::uint64_t index_to = 0;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct CertificateReport {
  std::string certificate;  // "i", "ii" or "iii"
  Verdict verdict = Verdict::Inconclusive;
  nlohmann::json parameters;
  std::vector<EvidenceRow> evidence;
  std::string caveat;
  nlohmann::json extra;  // per-index detail rows and auxiliary tables

  nlohmann::json to_json() const;
  std::string evidence_csv() const;
  static CertificateReport from_json(const nlohmann::json& j);
};

// Declared analytic tail bound lambda_i >= c * i^(1+delta), verified
// termwise on the grid prefix; the only way the series-convergence check can
// end in ExplosionCertified.
struct TailBound {
  double c;
  double delta;
};

CertificateReport check_condition_i(const rates::RateSequence& seq,
                                    const std::vector<std::uint64_t>& n_grid,
                                    std::optional<TailBound> tail = std::nullopt);

struct ConditionIIOptions {
  double eps = 1.0;
  std::vector<std::uint64_t> n_grid;          // defaults to default_grid()
  std::uint64_t triple_search_budget = 4096;  // max (t, beta, r) evaluations
  const rates::RateSequence* majorant = nullptr;  // optional domination path
};

CertificateReport check_condition_ii(const rates::RateSequence& seq,
                                     const ConditionIIOptions& options);

struct WindowRow {
  std::uint64_t n;
  double exact_sum;
  double asymptotic;
  double ratio;
};

// Exact window sums sum_{i=ceil(log n)}^{n} 1/(c i log i ... log^(k) i)
// against the closed-form comparison value (log^(k+1) n - log^(k+2) n)/c.
// Throws ConfigError naming the minimum admissible n when iterated logs are
// not defined on the window.
std::vector<WindowRow> iterated_log_window(double c, unsigned k,
                                           const std::vector<std::uint64_t>& n_grid);

std::uint64_t iterated_log_window_min_n(unsigned k);

// Desk-scale reproduction of the explosion certificate for the pathological
// rate sequence: per-i evidence rows for the schedule t_i = 2^(-i),
// M_i = i + sum_{k<=i} d_k (exact), the gamma floor for the unit-rate block,
// the A/B split with its Markov / gamma factor bounds, their combination,
// and the certified product target.
CertificateReport counterexample_certificate(std::uint64_t i_max);

// Exact-arithmetic budget: M_i carries ~2 i^2 bits, so the big-integer rows
// stay cheap only up to a few thousand.
inline constexpr std::uint64_t kCounterexampleMaxI = 2000;

struct ConsistencySummary {
  std::string status;  // "consistent" | "contradiction" | "no_simulation_evidence"
  std::vector<std::string> notes;
  nlohmann::json to_json() const;
};

// Cross-checks a certificate verdict against Monte Carlo probe results;
// flags contradictions for human review, never overrides the certificate.
ConsistencySummary certificate_vs_simulation(const CertificateReport& report,
                                             const std::optional<cmj::ProbeResult>& probe);

// Log-spaced ascending index grid (deduplicated).
std::vector<std::uint64_t> default_grid(std::uint64_t lo = 100, std::uint64_t hi = 1'000'000,
                                        std::size_t points = 25);

}  // namespace cmjsim::certificates
