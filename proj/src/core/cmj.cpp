#include "core/cmj.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>

#include "core/errors.hpp"
#include "core/log2dom.hpp"
#include "core/parallel.hpp"

namespace cmjsim::cmj {

namespace {

struct BirthEvent {
  double time;
  std::uint64_t parent_id;
  std::uint32_t child_rank;  // this birth is the parent's child number child_rank

  // Reversed so std::priority_queue pops the lexicographic minimum.
  bool operator<(const BirthEvent& o) const {
    if (time != o.time) return time > o.time;
    if (parent_id != o.parent_id) return parent_id > o.parent_id;
    return child_rank > o.child_rank;
  }
};

void print_double(std::ostream& os, double v);

}  // namespace

SimResult simulate(const rates::RateSequence& seq, purebirth::StopRule stop,
                   std::uint64_t seed, std::uint64_t replicate,
                   std::uint64_t population_cap) {
  using purebirth::StopRule;
  if (population_cap == 0) throw ConfigError("population cap must be >= 1");
  std::uint64_t target = population_cap;
  if (stop.type == StopRule::Type::Count) {
    if (stop.count == 0) throw ConfigError("population count must be >= 1");
    if (stop.count > population_cap) throw ConfigError("population count exceeds the population cap");
    target = stop.count;
  } else if (!(stop.horizon >= 0.0) || !std::isfinite(stop.horizon)) {
    throw ConfigError("horizon must be a finite non-negative time");
  }

  rng::CounterRng rng(seed, rng::stream_id(rng::kDomainCmj, replicate));
  auto holding = [&](std::uint64_t individual, std::uint32_t rank) {
    return rng.std_exponential(individual, rank) * pow2(-seq.rate_log2(rank).value);
  };

  SimResult out;
  Genealogy& g = out.genealogy;
  g.parent.reserve(std::min<std::uint64_t>(target, 1u << 20));
  g.parent.push_back(kRootParent);
  g.birth_time.push_back(0.0);
  g.out_degree.push_back(0);

  std::priority_queue<BirthEvent> queue;
  queue.push({holding(0, 1), 0, 1});

  for (;;) {
    if (stop.type == StopRule::Type::Count && g.size() >= target) break;
    const BirthEvent ev = queue.top();
    if (stop.type == StopRule::Type::Horizon && ev.time > stop.horizon) break;
    if (g.size() >= population_cap) {
      // Horizon mode only: pending event within the horizon but no room.
      out.status = SimStatus::CapExceededWithinHorizon;
      break;
    }
    queue.pop();

    const std::uint64_t newborn = g.size();
    g.parent.push_back(ev.parent_id);
    g.birth_time.push_back(ev.time);
    g.out_degree.push_back(0);
    ++g.out_degree[ev.parent_id];

    queue.push({ev.time + holding(ev.parent_id, ev.child_rank + 1), ev.parent_id,
                ev.child_rank + 1});
    queue.push({ev.time + holding(newborn, 1), newborn, 1});
  }
  return out;
}

std::vector<std::pair<std::uint64_t, double>> tau_trajectory(const Genealogy& g) {
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(g.size());
  for (std::uint64_t n = 0; n < g.size(); ++n) out.emplace_back(n, g.birth_time[n]);
  return out;
}

namespace {

void print_double(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_genealogy_csv(const Genealogy& g, std::ostream& os) {
  os << "id,parent,birth_time,out_degree_final\n";
  for (std::uint64_t n = 0; n < g.size(); ++n) {
    os << n << ',';
    if (g.parent[n] == kRootParent) {
      os << -1;
    } else {
      os << g.parent[n];
    }
    os << ',';
    print_double(os, g.birth_time[n]);
    os << ',' << g.out_degree[n] << '\n';
  }
}

void write_trajectory_csv(const Genealogy& g, std::ostream& os) {
  os << "n,tau_n\n";
  for (std::uint64_t n = 0; n < g.size(); ++n) {
    os << n << ',';
    print_double(os, g.birth_time[n]);
    os << '\n';
  }
}

ProbeResult explosion_probe(const rates::RateSequence& seq, std::uint64_t target_population,
                            std::vector<double> horizons, std::uint64_t reps,
                            std::uint64_t seed, unsigned workers) {
  if (target_population == 0) throw ConfigError("target population must be >= 1");
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  for (double t : horizons) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("horizons must be finite and >= 0");
  }
  std::sort(horizons.begin(), horizons.end());
  const double t_max = horizons.back();

  // tau of the target birth per replicate; +inf when not reached by t_max.
  std::vector<double> reach_time(reps);
  parallel_replicates(reps, workers, [&](std::uint64_t r) {
    SimResult res = simulate(seq, purebirth::StopRule::horizon_of(t_max), seed, r,
                             target_population);
    const Genealogy& g = res.genealogy;
    reach_time[r] = g.size() >= target_population
                        ? g.birth_time.back()
                        : std::numeric_limits<double>::infinity();
  });

  ProbeResult out;
  out.reps = reps;
  out.target_population = target_population;
  std::uint64_t reached = 0;
  for (double t : reach_time) {
    if (std::isfinite(t)) ++reached;
  }
  out.cap_fraction = static_cast<double>(reached) / static_cast<double>(reps);
  for (double T : horizons) {
    std::uint64_t hits = 0;
    for (double t : reach_time) {
      if (t <= T) ++hits;
    }
    double p = static_cast<double>(hits) / static_cast<double>(reps);
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    out.rows.push_back({T, p, se});
  }
  return out;
}

void write_probe_csv(const ProbeResult& probe, std::ostream& os) {
  os << "horizon,p_hat,std_error,cap_fraction,target_population,reps\n";
  for (const auto& row : probe.rows) {
    print_double(os, row.horizon);
    os << ',';
    print_double(os, row.p_hat);
    os << ',';
    print_double(os, row.std_error);
    os << ',';
    print_double(os, probe.cap_fraction);
    os << ',' << probe.target_population << ',' << probe.reps << '\n';
  }
}

}  // namespace cmjsim::cmj
