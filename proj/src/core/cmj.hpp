#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "core/purebirth.hpp"
#include "core/rates.hpp"

// Event-driven simulation of the whole branching population: each individual
// reproduces by an independent copy of the pure-birth point process shifted
// to its birth time.

namespace cmjsim::cmj {

inline constexpr std::uint64_t kRootParent = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kDefaultPopulationCap = 10'000'000ull;

// Finite population in birth order: tau_0 = 0 <= tau_1 <= ..., parent[n] < n.
struct Genealogy {
  std::vector<std::uint64_t> parent;  // parent[0] == kRootParent
  std::vector<double> birth_time;
  std::vector<std::uint32_t> out_degree;

  std::uint64_t size() const { return parent.size(); }
};

enum class SimStatus {
  Completed,
  // Horizon runs that hit the population cap with events still pending:
  // explosion suspected within the horizon.
  CapExceededWithinHorizon,
};

struct SimResult {
  Genealogy genealogy;
  SimStatus status = SimStatus::Completed;
};

// Min-heap of next-birth events, one pending event per living individual.
// When individual m bears its c-th child at time s, its next birth is
// scheduled at s + Exp(lambda_{c+1}) and the newborn's first at
// s + Exp(lambda_1). Ties from underflowed holding times break by
// (time, parent id, child rank).
SimResult simulate(const rates::RateSequence& seq, purebirth::StopRule stop,
                   std::uint64_t seed, std::uint64_t replicate = 0,
                   std::uint64_t population_cap = kDefaultPopulationCap);

std::vector<std::pair<std::uint64_t, double>> tau_trajectory(const Genealogy& g);

// CSV: id,parent,birth_time,out_degree_final (root parent written as -1).
void write_genealogy_csv(const Genealogy& g, std::ostream& os);
// CSV: n,tau_n.
void write_trajectory_csv(const Genealogy& g, std::ostream& os);

struct ProbeRow {
  double horizon;
  double p_hat;      // estimate of P{tau reaches the target population by T}
  double std_error;  // binomial standard error
};

struct ProbeResult {
  std::vector<ProbeRow> rows;
  double cap_fraction = 0.0;  // replicates reaching the target population
                              // (== the population cap) within the largest horizon
  std::uint64_t reps = 0;
  std::uint64_t target_population = 0;
};

// Monte Carlo explosion probe: each replicate runs with the population cap
// set to the target N and horizon max(T_grid); reaching the cap is the
// explosion signal, and tau_N is the birth time of the N-th individual.
ProbeResult explosion_probe(const rates::RateSequence& seq, std::uint64_t target_population,
                            std::vector<double> horizons, std::uint64_t reps,
                            std::uint64_t seed, unsigned workers = 1);

void write_probe_csv(const ProbeResult& probe, std::ostream& os);

}  // namespace cmjsim::cmj
