#pragma once

#include <cmath>
#include <random>
#include <string>

#include "maxlink/maxlink.hpp"

namespace fixtures {

using namespace maxlink;

inline std::string sample(const std::string& name) { return std::string(MAXLINK_SAMPLES) + "/" + name; }

inline const ValidatedModel& r2() {
  static const ValidatedModel m = io::load_model(sample("r2_model.json"));
  return m;
}

inline const ValidatedModel& r1() {
  static const ValidatedModel m = io::load_model(sample("r1_model.json"));
  return m;
}

inline const LifeTable& table3() {
  static const LifeTable t = load_life_table(sample("table_3age.csv"));
  return t;
}

inline const LifeTable& table4() {
  static const LifeTable t = load_life_table(sample("table_4age.csv"));
  return t;
}

inline MaxClaim claim(int k, double g, Vector w = Vector::Ones(2)) { return MaxClaim{k, std::move(w), g}; }

/// Product on R2 with guarantees g_k = 1 + 0.025(k-1) and unit weights.
inline ProductSpec r2_product(ProductKind kind, int t, int T, int age = 60) {
  ProductSpec p;
  p.kind = kind;
  p.x = age;
  p.t = t;
  p.T = T;
  for (int k = 1; k <= T; ++k) p.claims.push_back(claim(k, 1.0 + 0.025 * (k - 1)));
  return p;
}

/// A one-step-observed market state on R2 (t = 1, regime 0).
inline MarketState r2_state_t1() {
  MarketState st;
  st.t = 1;
  Vector y(3);
  y << 0.031, 0.04, -0.02;
  st.y.push_back(y);
  st.regimes.push_back(0);
  return st;
}

/// Single-regime model with n_z = 1, n_x assets, random-walk log prices and constant rate row.
inline ModelSpec flat_spec(int n_x, double rate, const Matrix& sigma) {
  const int n = 1 + n_x;
  ModelSpec s;
  s.n_z = 1;
  s.n_x = n_x;
  s.p = 1;
  s.regimes = 1;
  RegimeCoefficients c;
  c.a0 = Matrix::Zero(n, 1);
  c.a0(0, 0) = rate;
  Matrix a1 = Matrix::Identity(n, n);
  a1(0, 0) = 0.0;
  c.lags.push_back(a1);
  s.coefficients.push_back(c);
  s.transition = Matrix::Ones(1, 1);
  s.initial_dist = Vector::Ones(1);
  s.covariance = ConstantCovariance{{sigma}};
  Vector y0 = Vector::Zero(n);
  y0(0) = rate;
  s.presample_y.push_back(y0);
  return s;
}

/// Deterministic random symmetric positive definite matrix.
inline Matrix random_spd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = z(rng);
  }
  return a * a.transpose() + 0.1 * Matrix::Identity(d, d);
}

/// |a - b| measured in combined standard errors.
inline double z_score(double analytic, const McEstimate& mc) {
  if (mc.std_error == 0.0) return analytic == mc.mean ? 0.0 : INFINITY;
  return std::abs(analytic - mc.mean) / mc.std_error;
}

inline Ensemble ensemble(const ValidatedModel& m, const MarketState& st, int end, std::size_t n,
                         std::uint64_t seed = 20240601) {
  Ensemble e;
  e.model = &m;
  e.state = st;
  e.end = end;
  e.n_paths = n;
  e.seed = seed;
  return e;
}

}  // namespace fixtures
