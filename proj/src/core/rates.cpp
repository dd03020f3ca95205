#include "core/rates.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/log2dom.hpp"

namespace cmjsim::rates {

namespace {

using nlohmann::json;

void require_positive_finite(double v, const char* what) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ConfigError(std::string(what) + " must be a positive finite number");
  }
}

// Smallest index whose k-fold iterated logs all exceed 1, i.e. the first
// integer above exp^(k)(1). Saturates for k >= 4 (threshold beyond uint64).
std::uint64_t iterlog_threshold(unsigned k) {
  if (k == 0) return 1;
  double e = 1.0;
  for (unsigned j = 0; j < k; ++j) {
    e = std::exp(e);
    if (e > 1e18) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(std::floor(e)) + 1;
}

}  // namespace

RateSequence RateSequence::constant(double c) {
  require_positive_finite(c, "constant rate c");
  RateSequence s;
  s.kind_ = Kind::Constant;
  s.a_ = c;
  return s;
}

RateSequence RateSequence::affine(double a, double b) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw ConfigError("affine parameters must be finite");
  if (a < 0.0 || a + b <= 0.0) {
    throw ConfigError("affine rates require a >= 0 and a + b > 0 so every lambda_i is positive");
  }
  RateSequence s;
  s.kind_ = Kind::Affine;
  s.a_ = a;
  s.b_ = b;
  return s;
}

RateSequence RateSequence::power_pa(double p) {
  if (!std::isfinite(p)) throw ConfigError("power exponent must be finite");
  RateSequence s;
  s.kind_ = Kind::PowerPa;
  s.a_ = p;
  return s;
}

RateSequence RateSequence::iterated_log(double c, unsigned k) {
  require_positive_finite(c, "iterated-log scale c");
  RateSequence s;
  s.kind_ = Kind::IteratedLog;
  s.a_ = c;
  s.k_ = k;
  s.iterlog_threshold_ = iterlog_threshold(k);
  return s;
}

RateSequence RateSequence::pathological() {
  RateSequence s;
  s.kind_ = Kind::Pathological;
  return s;
}

RateSequence RateSequence::table(std::vector<double> log2_values) {
  if (log2_values.empty()) throw ConfigError("rate table must not be empty");
  for (double v : log2_values) {
    if (!std::isfinite(v)) throw ConfigError("rate table entries must be finite log2 values");
  }
  RateSequence s;
  s.kind_ = Kind::Table;
  s.table_ = std::move(log2_values);
  return s;
}

std::uint64_t RateSequence::max_index() const {
  if (kind_ == Kind::Table) return table_.size();
  return std::numeric_limits<std::uint64_t>::max();
}

Log2Rate RateSequence::rate_log2(std::uint64_t i) const {
  if (i == 0) throw ConfigError("rate index must be >= 1");
  switch (kind_) {
    case Kind::Constant:
      return {std::log2(a_)};
    case Kind::Affine:
      return {std::log2(a_ * static_cast<double>(i) + b_)};
    case Kind::PowerPa:
      return {a_ * std::log2(static_cast<double>(i))};
    case Kind::IteratedLog: {
      if (i < iterlog_threshold_) return {std::log2(a_)};
      double v = std::log2(a_) + std::log2(static_cast<double>(i));
      double x = static_cast<double>(i);
      for (unsigned j = 0; j < k_; ++j) {
        x = std::log(x);
        v += std::log2(x);
      }
      return {v};
    }
    case Kind::Pathological: {
      // Walk blocks: boundary at b_k, then d_k entries of a_k. All uint64
      // indices land in block <= 6 (d_7 alone exceeds the index range).
      unsigned __int128 pos = 1;
      for (unsigned k = 1;; ++k) {
        if (i == pos) return {0.0};  // boundary entry, rate 1
        unsigned __int128 d = pathological::detail::block_length_128(k);
        if (i <= pos + d) return {pathological::alpha_log2(k)};
        pos += d + 1;
      }
    }
    case Kind::Table:
      if (i > table_.size()) {
        throw ConfigError("rate table has " + std::to_string(table_.size()) +
                          " entries; index " + std::to_string(i) + " out of range");
      }
      return {table_[i - 1]};
  }
  throw InternalError("unknown rate kind");
}

std::string RateSequence::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant: os << "constant(" << a_ << ")"; break;
    case Kind::Affine: os << "affine(" << a_ << "," << b_ << ")"; break;
    case Kind::PowerPa: os << "power_pa(" << a_ << ")"; break;
    case Kind::IteratedLog: os << "iterated_log(" << a_ << ",k=" << k_ << ")"; break;
    case Kind::Pathological: os << "pathological"; break;
    case Kind::Table: os << "table[" << table_.size() << "]"; break;
  }
  return os.str();
}

RateSequence RateSequence::from_json(const json& descriptor) {
  if (!descriptor.is_object() || !descriptor.contains("kind")) {
    throw ConfigError("rate descriptor must be an object with a \"kind\" field");
  }
  const std::string kind = descriptor.at("kind").get<std::string>();
  json params = descriptor.value("params", json::object());
  try {
    if (kind == "constant") return constant(params.value("c", 1.0));
    if (kind == "affine") return affine(params.value("a", 1.0), params.value("b", 0.0));
    if (kind == "power_pa") return power_pa(params.at("p").get<double>());
    if (kind == "iterated_log") {
      return iterated_log(params.value("c", 1.0), params.value("k", 1u));
    }
    if (kind == "pathological") return pathological();
    if (kind == "table") {
      if (params.contains("log2_values")) {
        return table(params.at("log2_values").get<std::vector<double>>());
      }
      if (params.contains("csv")) {
        std::ifstream in(params.at("csv").get<std::string>());
        if (!in) throw ConfigError("cannot open rate table csv: " + params.at("csv").get<std::string>());
        std::vector<double> values;
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          values.push_back(std::stod(line));
        }
        return table(std::move(values));
      }
      throw ConfigError("table descriptor needs \"log2_values\" or \"csv\"");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad rate descriptor: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("rate table csv contains a non-numeric line");
  }
  throw ConfigError("unknown rate kind \"" + kind + "\"");
}

RateSequence RateSequence::from_json_text(const std::string& descriptor) {
  json j = json::parse(descriptor, nullptr, false);
  if (j.is_discarded()) throw ConfigError("rate descriptor is not valid JSON");
  return from_json(j);
}

nlohmann::json RateSequence::to_json() const {
  json params = json::object();
  switch (kind_) {
    case Kind::Constant: params["c"] = a_; return {{"kind", "constant"}, {"params", params}};
    case Kind::Affine: params["a"] = a_; params["b"] = b_; return {{"kind", "affine"}, {"params", params}};
    case Kind::PowerPa: params["p"] = a_; return {{"kind", "power_pa"}, {"params", params}};
    case Kind::IteratedLog:
      params["c"] = a_;
      params["k"] = k_;
      return {{"kind", "iterated_log"}, {"params", params}};
    case Kind::Pathological: return {{"kind", "pathological"}, {"params", params}};
    case Kind::Table: params["log2_values"] = table_; return {{"kind", "table"}, {"params", params}};
  }
  throw InternalError("unknown rate kind");
}

double reciprocal_partial_sum(const RateSequence& seq, std::uint64_t a, std::uint64_t b) {
  if (a == 0 || a > b) throw ConfigError("reciprocal_partial_sum needs 1 <= a <= b");
  if (b > kMaxSumIndex) {
    throw ConfigError("summation upper index exceeds the configured maximum " +
                      std::to_string(kMaxSumIndex));
  }
  double sum = 0.0, comp = 0.0;  // Kahan
  for (std::uint64_t i = a; i <= b; ++i) {
    double term = pow2(-seq.rate_log2(i).value);
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

DominationCheck is_dominated_by(const RateSequence& seq, const RateSequence& majorant,
                                std::uint64_t prefix) {
  if (prefix == 0) throw ConfigError("domination prefix must be >= 1");
  for (std::uint64_t i = 1; i <= prefix; ++i) {
    if (seq.rate_log2(i).value > majorant.rate_log2(i).value) {
      return {false, i};
    }
  }
  return {true, std::nullopt};
}

std::optional<std::uint64_t> last_domination_violation(const RateSequence& seq,
                                                       const RateSequence& majorant,
                                                       std::uint64_t prefix) {
  std::optional<std::uint64_t> last;
  for (std::uint64_t i = 1; i <= prefix; ++i) {
    if (seq.rate_log2(i).value > majorant.rate_log2(i).value) last = i;
  }
  return last;
}

namespace pathological {

namespace detail {

// d_k = 4^(k^2) as a 128-bit value (exact for k <= 7; k = 8 needs 2^128).
unsigned __int128 block_length_128(unsigned k) {
  if (k == 0 || k > 7) throw RangeError("block length 4^(k^2) exceeds 128 bits past k = 7");
  return static_cast<unsigned __int128>(1) << (2 * k * k);
}

}  // namespace detail

std::uint64_t block_length(unsigned k) {
  if (k == 0 || k > 5) throw RangeError("block length 4^(k^2) fits 64 bits only for 1 <= k <= 5");
  return 1ull << (2 * k * k);
}

double alpha_log2(unsigned k) {
  if (k == 0) throw ConfigError("pathological blocks are numbered from 1");
  // log2(a_k) = 2^(k^3); finite as a double only while k^3 <= 1023.
  const unsigned kc = k * k * k;
  if (kc > 1023) {
    throw RangeError("pathological rate exponent 2^(k^3) overflows the working real type "
                     "at block " + std::to_string(k) + " (first unrepresentable block is 11)");
  }
  return std::ldexp(1.0, static_cast<int>(kc));
}

std::uint64_t boundary_index(unsigned m) {
  if (m == 0) throw ConfigError("boundaries are numbered from 1");
  unsigned __int128 pos = 1;
  for (unsigned k = 1; k < m; ++k) {
    if (k > 7) throw RangeError("boundary index exceeds the 64-bit index range");
    pos += detail::block_length_128(k) + 1;
  }
  if (pos > std::numeric_limits<std::uint64_t>::max()) {
    throw RangeError("boundary index exceeds the 64-bit index range");
  }
  return static_cast<std::uint64_t>(pos);
}

std::uint64_t boundaries_up_to(std::uint64_t n) {
  std::uint64_t count = 0;
  unsigned __int128 pos = 1;
  for (unsigned k = 1;; ++k) {
    if (pos > n) break;
    ++count;
    pos += detail::block_length_128(k) + 1;
  }
  return count;
}

}  // namespace pathological

}  // namespace cmjsim::rates
