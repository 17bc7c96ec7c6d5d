#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/numerics/linalg.hpp"

namespace maxlink {

/// Coefficients of one regime: A₀ (n×k) on the exogenous vector and A₁..A_p (n×n) on lags.
struct RegimeCoefficients {
  Matrix a0;
  std::vector<Matrix> lags;
};

/// One covariance matrix per regime.
struct ConstantCovariance {
  std::vector<Matrix> sigma;
};

/// vech(Σ_m) = B₀(s_m) + Σ_j B_j(s_m) vech(Σ_{m-j}).
struct VechGarchCovariance {
  std::vector<Vector> b0;               // per regime, length n(n+1)/2
  std::vector<std::vector<Matrix>> b;   // per regime, B_1..B_{p*}
  std::vector<Matrix> presample;        // Σ_0, Σ_{-1}, ..., Σ_{1-p*}
};

using CovarianceModel = std::variant<ConstantCovariance, VechGarchCovariance>;

/// Raw market description. Regimes are indexed 0..N-1.
struct ModelSpec {
  int n_z = 1;
  int n_x = 1;
  int k = 1;
  int p = 1;
  int regimes = 1;
  std::vector<RegimeCoefficients> coefficients;
  Matrix transition;
  Vector initial_dist;
  CovarianceModel covariance;
  std::vector<Vector> presample_y;  // y_0, y_{-1}, ...
  std::vector<Vector> exog;         // ψ_1, ψ_2, ...; empty means ψ ≡ 1 (k = 1)
};

enum class MeasureMode { Physical, RiskNeutral };

/// A model whose invariants have been checked. Immutable.
class ValidatedModel {
 public:
  const ModelSpec& spec() const { return spec_; }
  int n() const { return spec_.n_z + spec_.n_x; }
  int n_z() const { return spec_.n_z; }
  int n_x() const { return spec_.n_x; }
  int regimes() const { return spec_.regimes; }
  int exog_dim() const { return spec_.k; }
  /// Lag order used by the recursions: max(p, 1), since discounting always reads y_{t-1}.
  int lag_order() const { return static_cast<int>(lags_[0].size()); }
  int garch_order() const {
    if (const auto* g = std::get_if<VechGarchCovariance>(&spec_.covariance)) {
      return static_cast<int>(g->presample.size());
    }
    return 0;
  }
  bool is_garch() const { return std::holds_alternative<VechGarchCovariance>(spec_.covariance); }
  /// Set when a per-regime covariance needed diagonal jitter to factor.
  bool regularized() const { return regularized_; }

  double transition(int from, int to) const { return spec_.transition(from, to); }
  double initial(int s) const { return spec_.initial_dist(s); }
  const Matrix& a0(int s) const { return spec_.coefficients[s].a0; }
  /// A_i(s) for i = 1..lag_order(); zero for i > p.
  const Matrix& lag(int s, int i) const { return lags_[s][i - 1]; }

  /// ψ_m for m >= 1.
  Vector exog(int m) const {
    if (spec_.exog.empty()) return Vector::Ones(1);
    if (m < 1 || m > static_cast<int>(spec_.exog.size())) {
      throw Error(Errc::DimensionMismatch,
                  "exogenous sequence does not cover step " + std::to_string(m));
    }
    return spec_.exog[m - 1];
  }
  int exog_horizon() const {
    return spec_.exog.empty() ? std::numeric_limits<int>::max()
                              : static_cast<int>(spec_.exog.size());
  }

  /// y_m for 1 - lag_order() <= m <= 0.
  const Vector& presample(int m) const { return spec_.presample_y[-m]; }

  /// Σ(s) for constant-per-regime models.
  const Matrix& sigma(int s) const { return std::get<ConstantCovariance>(spec_.covariance).sigma[s]; }

  friend ValidatedModel validate_spec(ModelSpec raw);

 private:
  ModelSpec spec_;
  std::vector<std::vector<Matrix>> lags_;
  bool regularized_ = false;
};

namespace detail {

inline void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                         const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(Errc::DimensionMismatch, what + " must be " + std::to_string(rows) + "x" +
                                             std::to_string(cols) + ", got " +
                                             std::to_string(m.rows()) + "x" +
                                             std::to_string(m.cols()));
  }
}

inline void expect_length(const Vector& v, Eigen::Index len, const std::string& what) {
  if (v.size() != len) {
    throw Error(Errc::DimensionMismatch, what + " must have length " + std::to_string(len) +
                                             ", got " + std::to_string(v.size()));
  }
}

inline void check_probability_vector(const Vector& v, const std::string& what) {
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!(v(j) >= 0.0) || !std::isfinite(v(j))) {
      throw Error(Errc::InvalidTransitionMatrix, what + " has a negative entry at column " +
                                                     std::to_string(j));
    }
  }
  if (std::abs(v.sum() - 1.0) > 1e-12) {
    throw Error(Errc::InvalidTransitionMatrix,
                what + " sums to " + std::to_string(v.sum()) + ", expected 1");
  }
}

inline bool check_covariance(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw Error(Errc::InvalidSpec, what + " has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(Errc::InvalidSpec, what + " is not symmetric");
  }
  try {
    return cholesky_regularized(m).regularized;
  } catch (const Error&) {
    throw Error(Errc::NotPositiveDefinite, what + " is not positive definite");
  }
}

}  // namespace detail

/// Checks every ModelSpec invariant and cross-checks dimensions.
inline ValidatedModel validate_spec(ModelSpec raw) {
  using detail::expect_length;
  using detail::expect_shape;
  if (raw.n_z < 1 || raw.n_x < 1 || raw.k < 1 || raw.p < 0 || raw.regimes < 1) {
    throw Error(Errc::DimensionMismatch, "n_z, n_x, k, regimes must be >= 1 and p >= 0");
  }
  const int n = raw.n_z + raw.n_x;
  const int big_n = raw.regimes;
  const int lags = std::max(raw.p, 1);

  expect_shape(raw.transition, big_n, big_n, "transition matrix");
  for (int i = 0; i < big_n; ++i) {
    detail::check_probability_vector(raw.transition.row(i).transpose(),
                                     "transition matrix row " + std::to_string(i));
  }
  expect_length(raw.initial_dist, big_n, "initial distribution");
  detail::check_probability_vector(raw.initial_dist, "initial distribution");

  if (static_cast<int>(raw.coefficients.size()) != big_n) {
    throw Error(Errc::DimensionMismatch, "need one coefficient set per regime");
  }
  ValidatedModel out;
  out.lags_.resize(big_n);
  for (int s = 0; s < big_n; ++s) {
    const auto& c = raw.coefficients[s];
    const std::string tag = "regime " + std::to_string(s);
    expect_shape(c.a0, n, raw.k, tag + " A0");
    if (static_cast<int>(c.lags.size()) != raw.p) {
      throw Error(Errc::DimensionMismatch, tag + " needs exactly p lag matrices");
    }
    for (int i = 0; i < raw.p; ++i) expect_shape(c.lags[i], n, n, tag + " A" + std::to_string(i + 1));
    out.lags_[s] = c.lags;
    out.lags_[s].resize(lags, Matrix::Zero(n, n));
  }

  if (static_cast<int>(raw.presample_y.size()) != lags) {
    throw Error(Errc::DimensionMismatch,
                "presample must hold max(p,1) = " + std::to_string(lags) + " vectors");
  }
  for (const auto& y : raw.presample_y) expect_length(y, n, "presample y");
  for (const auto& psi : raw.exog) expect_length(psi, raw.k, "exogenous vector");
  if (raw.exog.empty() && raw.k != 1) {
    throw Error(Errc::DimensionMismatch, "exogenous sequence is required when k != 1");
  }

  bool regularized = false;
  if (const auto* cc = std::get_if<ConstantCovariance>(&raw.covariance)) {
    if (static_cast<int>(cc->sigma.size()) != big_n) {
      throw Error(Errc::DimensionMismatch, "need one covariance matrix per regime");
    }
    for (int s = 0; s < big_n; ++s) {
      expect_shape(cc->sigma[s], n, n, "Sigma(" + std::to_string(s) + ")");
      regularized |= detail::check_covariance(cc->sigma[s], "Sigma(" + std::to_string(s) + ")");
    }
  } else {
    const auto& g = std::get<VechGarchCovariance>(raw.covariance);
    const int m = n * (n + 1) / 2;
    if (static_cast<int>(g.b0.size()) != big_n || static_cast<int>(g.b.size()) != big_n) {
      throw Error(Errc::DimensionMismatch, "need GARCH coefficients per regime");
    }
    const auto order = g.presample.size();
    if (order == 0) throw Error(Errc::DimensionMismatch, "GARCH model needs presample covariances");
    for (int s = 0; s < big_n; ++s) {
      expect_length(g.b0[s], m, "B0");
      if (g.b[s].size() != order) {
        throw Error(Errc::DimensionMismatch, "GARCH order disagrees with presample length");
      }
      for (const auto& bj : g.b[s]) expect_shape(bj, m, m, "GARCH B matrix");
    }
    for (std::size_t j = 0; j < order; ++j) {
      expect_shape(g.presample[j], n, n, "presample covariance");
      regularized |= detail::check_covariance(g.presample[j], "presample covariance");
    }
  }

  out.spec_ = std::move(raw);
  out.regularized_ = regularized;
  return out;
}

/// A sequence of regimes over steps [start, start + states.size() - 1].
struct RegimePath {
  int start = 1;
  std::vector<int> states;
  double chain_prob = 1.0;

  int end() const { return start + static_cast<int>(states.size()) - 1; }
};

/// Chain probability of `future` given the regime at start-1 (or the initial law when none).
inline double chain_probability(const ValidatedModel& model, std::span<const int> history,
                                std::span<const int> future) {
  double prob = 1.0;
  int prev = history.empty() ? -1 : history.back();
  for (int s : future) {
    prob *= prev < 0 ? model.initial(s) : model.transition(prev, s);
    prev = s;
  }
  return prob;
}

/// Incremental covariance recursion along a regime path.
class CovarianceRecursion {
 public:
  explicit CovarianceRecursion(const ValidatedModel& model) : model_(&model) {
    if (const auto* g = std::get_if<VechGarchCovariance>(&model.spec().covariance)) {
      for (const auto& m : g->presample) recent_.push_back(m);  // newest first
    }
  }

  /// Σ_m for the next step in regime s.
  Matrix next(int s) {
    if (!model_->is_garch()) return model_->sigma(s);
    const auto& g = std::get<VechGarchCovariance>(model_->spec().covariance);
    Vector v = g.b0[s];
    for (std::size_t j = 0; j < g.b[s].size(); ++j) {
      v += g.b[s][j] * vech(SymMatrix::symmetrized(recent_[j]));
    }
    Matrix sigma = unvech(v);
    try {
      (void)cholesky_regularized(sigma);
    } catch (const Error&) {
      throw Error(Errc::NotPositiveDefinite,
                  "GARCH recursion produced an indefinite covariance (inadmissible coefficients)");
    }
    recent_.insert(recent_.begin(), sigma);
    recent_.pop_back();
    return sigma;
  }

 private:
  const ValidatedModel* model_;
  std::vector<Matrix> recent_;
};

/// Σ_1(s̄_1), ..., Σ_m(s̄_m) along regimes s_1..s_m.
inline std::vector<Matrix> covariance_sequence(const ValidatedModel& model,
                                               std::span<const int> regimes) {
  CovarianceRecursion rec(model);
  std::vector<Matrix> out;
  out.reserve(regimes.size());
  for (int s : regimes) out.push_back(rec.next(s));
  return out;
}

inline std::vector<Matrix> covariance_sequence(const ValidatedModel& model, const RegimePath& path) {
  if (path.start != 1 && model.is_garch()) {
    throw Error(Errc::DimensionMismatch, "GARCH covariance needs the regime path from step 1");
  }
  return covariance_sequence(model, std::span<const int>(path.states));
}

}  // namespace maxlink
