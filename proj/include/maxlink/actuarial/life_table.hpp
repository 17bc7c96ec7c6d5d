#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "maxlink/error.hpp"

namespace maxlink {

/// One-year death probabilities q_x for contiguous integer ages; q at max_age is 1.
class LifeTable {
 public:
  LifeTable(int min_age, std::vector<double> q) : min_age_(min_age), q_(std::move(q)) {
    if (q_.empty()) throw Error(Errc::MalformedTable, "life table is empty");
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (!(q_[i] >= 0.0 && q_[i] <= 1.0)) {
        throw Error(Errc::MalformedTable,
                    "q at age " + std::to_string(min_age_ + static_cast<int>(i)) + " outside [0,1]");
      }
    }
    if (q_.back() != 1.0) throw Error(Errc::MalformedTable, "table does not close (last q != 1)");
  }

  int min_age() const { return min_age_; }
  int max_age() const { return min_age_ + static_cast<int>(q_.size()) - 1; }

  double q(int age) const {
    if (age < min_age() || age > max_age()) {
      throw Error(Errc::AgeOutOfRange, "age " + std::to_string(age) + " not in table");
    }
    return q_[age - min_age_];
  }

 private:
  int min_age_;
  std::vector<double> q_;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// CSV with header `age,qx`; ages contiguous and increasing.
inline LifeTable parse_life_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MalformedTable, "missing header row");
  if (detail::trim(line) != "age,qx") throw Error(Errc::MalformedTable, "header must be 'age,qx'");
  int first = 0;
  int expected = 0;
  std::vector<double> q;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(Errc::MalformedTable, "line " + std::to_string(lineno) + " lacks a comma");
    }
    int age = 0;
    double qx = 0.0;
    try {
      std::size_t used = 0;
      const std::string a = detail::trim(line.substr(0, comma));
      age = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument("age");
      const std::string b = detail::trim(line.substr(comma + 1));
      qx = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument("qx");
    } catch (const std::exception&) {
      throw Error(Errc::MalformedTable, "line " + std::to_string(lineno) + " is not 'age,qx'");
    }
    if (q.empty()) {
      first = age;
    } else if (age != expected) {
      throw Error(Errc::MalformedTable, "ages not contiguous at line " + std::to_string(lineno));
    }
    expected = age + 1;
    q.push_back(qx);
  }
  return LifeTable(first, std::move(q));
}

inline LifeTable load_life_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedTable, "cannot open " + path);
  return parse_life_table(in);
}

/// ₜpₓ = ∏_{j<t} (1 - q_{x+j}).
inline double survival(const LifeTable& table, int x, int t) {
  if (t < 0 || x < table.min_age() || x + t > table.max_age() + 1) {
    throw Error(Errc::AgeOutOfRange, "survival from age " + std::to_string(x) + " over " +
                                         std::to_string(t) + " years leaves the table");
  }
  double p = 1.0;
  for (int j = 0; j < t; ++j) p *= 1.0 - table.q(x + j);
  return p;
}

/// Mortality tilt g_1..g_T; empty means g ≡ 0.
struct MortalityTilt {
  std::vector<double> g;

  double at(int k) const { return g.empty() ? 0.0 : g.at(k - 1); }
  MortalityTilt tail(int from) const {
    if (g.empty()) return {};
    return {std::vector<double>(g.begin() + from, g.end())};
  }
};

struct TiltedMortality {
  double survive_T = 1.0;
  std::vector<double> deferred_death;  // index k-1: ₖ₋₁|q̃ₓ
  std::vector<double> cumulative;      // index k: ₖq̃ₓ, k = 0..T
};

namespace detail {

inline void check_tilt(const MortalityTilt& tilt, int horizon) {
  if (!tilt.g.empty() && static_cast<int>(tilt.g.size()) < horizon) {
    throw Error(Errc::DimensionMismatch, "tilt vector shorter than the horizon");
  }
  for (double g : tilt.g) {
    if (!std::isfinite(g)) throw Error(Errc::InvalidSpec, "tilt must be finite");
  }
}

inline void check_unit(double v, const char* what) {
  if (!(v >= -1e-15 && v <= 1.0 + 1e-15)) {
    throw Error(Errc::TiltedProbabilityOutOfRange, std::string(what) + " = " + std::to_string(v));
  }
}

}  // namespace detail

/// Risk-neutral survival and death probabilities under the tilt g.
/// Step m has death probability e^g q / (1 + (e^g - 1) q) given survival to m-1.
inline TiltedMortality tilted_mortality(const LifeTable& table, int x, int horizon,
                                        const MortalityTilt& tilt = {}) {
  detail::check_tilt(tilt, horizon);
  (void)survival(table, x, horizon);
  TiltedMortality out;
  out.cumulative.push_back(0.0);
  double alive = 1.0;
  for (int k = 1; k <= horizon; ++k) {
    const double q = table.q(x + k - 1);
    const double eg = std::exp(tilt.at(k));
    const double qt = eg * q / (1.0 + (eg - 1.0) * q);
    detail::check_unit(qt, "tilted one-year death probability");
    const double death = alive * qt;
    out.deferred_death.push_back(death);
    alive *= 1.0 - qt;
    out.cumulative.push_back(1.0 - alive);
  }
  out.survive_T = alive;
  for (double d : out.deferred_death) detail::check_unit(d, "deferred death probability");
  detail::check_unit(out.survive_T, "tilted survival probability");
  return out;
}

/// K_T on the outcome "death in year k" (k = 1..T) or survival (k = 0).
inline double mortality_density(const LifeTable& table, int x, int horizon,
                                const MortalityTilt& tilt, int death_year) {
  detail::check_tilt(tilt, horizon);
  (void)survival(table, x, horizon);
  if (death_year < 0 || death_year > horizon) {
    throw Error(Errc::DimensionMismatch, "death year must lie in 1..T (0 for survival)");
  }
  const int last = death_year == 0 ? horizon : death_year;
  double log_k = 0.0;
  for (int m = 1; m <= last; ++m) {
    const double q = table.q(x + m - 1);
    log_k -= std::log1p(std::expm1(tilt.at(m)) * q);
  }
  if (death_year > 0) log_k += tilt.at(death_year);
  return std::exp(log_k);
}

}  // namespace maxlink
