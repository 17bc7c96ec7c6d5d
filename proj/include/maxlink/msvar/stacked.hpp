#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/msvar/model.hpp"
#include "maxlink/numerics/linalg.hpp"

namespace maxlink {

/// Observed information at step t: y_1..y_t and (optionally) the regimes s_1..s_t.
struct MarketState {
  int t = 0;
  std::vector<Vector> y;
  std::vector<int> regimes;

  bool regimes_known() const { return static_cast<int>(regimes.size()) == t; }
};

inline void check_state(const ValidatedModel& model, const MarketState& st) {
  if (st.t < 0 || static_cast<int>(st.y.size()) != st.t) {
    throw Error(Errc::DimensionMismatch, "market state must hold exactly t observations");
  }
  for (const auto& v : st.y) detail::expect_length(v, model.n(), "observation");
  if (!st.regimes.empty() && !st.regimes_known()) {
    throw Error(Errc::DimensionMismatch, "regime history must be empty or have length t");
  }
  for (int s : st.regimes) {
    if (s < 0 || s >= model.regimes()) throw Error(Errc::DimensionMismatch, "regime index out of range");
  }
}

/// y_j for 1 - lag_order <= j <= t.
inline const Vector& history_value(const ValidatedModel& model, const MarketState& st, int j) {
  if (j >= 1) return st.y[j - 1];
  if (j < 1 - model.lag_order()) throw Error(Errc::DimensionMismatch, "lag reaches before presample");
  return model.presample(j);
}

/// D_t = exp(-Σ_{m=1}^t r̃_m) with r̃_m = e₁ᵀy_{m-1}.
inline double discount_factor(const ValidatedModel& model, const MarketState& st) {
  double acc = 0.0;
  for (int m = 1; m <= st.t; ++m) acc += history_value(model, st, m - 1)(0);
  return std::exp(-acc);
}

/// Undiscounted asset prices x_t = exp(x̃_t).
inline Vector asset_prices(const ValidatedModel& model, const MarketState& st) {
  return history_value(model, st, st.t).tail(model.n_x()).array().exp();
}

/// Discounted prices X̄_t = D_t x_t.
inline Vector discounted_prices(const ValidatedModel& model, const MarketState& st) {
  return discount_factor(model, st) * asset_prices(model, st);
}

/// Per-regime coefficients A_i + Δ_i in the requested measure.
struct EffectiveCoefficients {
  Matrix c0;
  std::vector<Matrix> lags;
};

inline EffectiveCoefficients effective_coefficients(const ValidatedModel& model, int s,
                                                    MeasureMode mode) {
  EffectiveCoefficients out;
  out.c0 = model.a0(s);
  for (int i = 1; i <= model.lag_order(); ++i) out.lags.push_back(model.lag(s, i));
  if (mode == MeasureMode::RiskNeutral) {
    // Asset rows become x̃_{j,m} = x̃_{j,m-1} + r̃_m (before the α correction).
    const int nz = model.n_z();
    const int nx = model.n_x();
    out.c0.bottomRows(nx).setZero();
    for (auto& a : out.lags) a.bottomRows(nx).setZero();
    for (int j = 0; j < nx; ++j) {
      out.lags[0](nz + j, nz + j) = 1.0;
      out.lags[0](nz + j, 0) += 1.0;
    }
  }
  return out;
}

/// Theorem-1 system for the window (t, end] along one future regime path.
struct StackedSystem {
  int t = 0;
  int end = 0;
  int n = 0;
  int n_z = 0;
  MeasureMode mode = MeasureMode::Physical;
  BlockLowerSystem psi22;
  Vector delta2;  // (A₀+Δ₀)ψ_m plus presample lag terms
  struct KnownLag {
    int row;   // 0-based block row
    int step;  // observed step 1..t feeding this row
    Matrix coeff;
  };
  std::vector<KnownLag> psi21;  // stores -Ψ₂₁ entries (coefficients on observed y)
  std::vector<Matrix> sigma;    // Σ_{t+1}, ..., Σ_end
  Vector alpha_bar;

  int blocks() const { return end - t; }
};

/// Builds Ψ₂₂, δ̄₂, Ψ₂₁, Σ̄ and ᾱ. `sigmas` holds Σ_{t+1..end} for the path.
inline StackedSystem build_stacked_system(const ValidatedModel& model, const MarketState& st,
                                          std::span<const int> future, std::vector<Matrix> sigmas,
                                          MeasureMode mode) {
  const int n = model.n();
  const int blocks = static_cast<int>(future.size());
  if (static_cast<int>(sigmas.size()) != blocks) {
    throw Error(Errc::DimensionMismatch, "one covariance per future step is required");
  }
  StackedSystem sys;
  sys.t = st.t;
  sys.end = st.t + blocks;
  sys.n = n;
  sys.n_z = model.n_z();
  sys.mode = mode;
  sys.psi22.blocks = blocks;
  sys.psi22.block_dim = n;
  sys.delta2 = Vector::Zero(static_cast<Eigen::Index>(blocks) * n);
  sys.alpha_bar = Vector::Zero(sys.delta2.size());
  const int lags = model.lag_order();
  for (int r = 0; r < blocks; ++r) {
    const int m = st.t + 1 + r;
    const int s = future[r];
    const auto c = effective_coefficients(model, s, mode);
    auto row = sys.delta2.segment(static_cast<Eigen::Index>(r) * n, n);
    row += c.c0 * model.exog(m);
    for (int i = 1; i <= lags; ++i) {
      const Matrix& ci = c.lags[i - 1];
      const int src = m - i;
      if (src > st.t) {
        if (!ci.isZero(0.0)) sys.psi22.set(r, i, -ci);
      } else if (src >= 1) {
        sys.psi21.push_back({r, src, ci});
      } else {
        row += ci * model.presample(src);
      }
    }
    if (mode == MeasureMode::RiskNeutral) {
      sys.alpha_bar.segment(static_cast<Eigen::Index>(r) * n, n) = 0.5 * sigmas[r].diagonal();
    }
  }
  sys.sigma = std::move(sigmas);
  return sys;
}

/// Σ_{t+1..t+len} along `future`, continuing the recursion from the state's regime history.
inline std::vector<Matrix> future_covariances(const ValidatedModel& model, const MarketState& st,
                                              std::span<const int> future) {
  if (!model.is_garch()) {
    std::vector<Matrix> out;
    for (int s : future) out.push_back(model.sigma(s));
    return out;
  }
  if (!st.regimes_known()) {
    throw Error(Errc::DimensionMismatch, "GARCH covariance needs the regime history");
  }
  CovarianceRecursion rec(model);
  for (int s : st.regimes) (void)rec.next(s);
  std::vector<Matrix> out;
  for (int s : future) out.push_back(rec.next(s));
  return out;
}

inline StackedSystem build_stacked_system(const ValidatedModel& model, const MarketState& st,
                                          std::span<const int> future, MeasureMode mode) {
  return build_stacked_system(model, st, future, future_covariances(model, st, future), mode);
}

/// Identifies the probability measure a law lives under.
struct MeasureTag {
  enum class Kind { Physical, RiskNeutral, Forward, Pair, Discounted } kind = Kind::RiskNeutral;
  int i = -1, u = -1, j = -1, v = -1;

  std::string describe() const {
    switch (kind) {
      case Kind::Physical: return "physical";
      case Kind::RiskNeutral: return "risk-neutral";
      case Kind::Forward: return "forward(" + std::to_string(i) + "," + std::to_string(u) + ")";
      case Kind::Pair:
        return "pair(" + std::to_string(i) + "," + std::to_string(u) + "," + std::to_string(j) +
               "," + std::to_string(v) + ")";
      case Kind::Discounted: return "discounted";
    }
    return "unknown";
  }
};

/// Law of the stacked future block (y_{t+1}, ..., y_end) given the observed history and path.
struct GaussianLaw {
  MeasureTag tag;
  Vector mean;
  Matrix cov;
  int t = 0;
  int end = 0;
  int n = 0;
  int n_z = 0;
  double known_rate = 0.0;  // e₁ᵀy_t, the already-known next spot rate
  std::shared_ptr<const StackedSystem> system;

  int blocks() const { return end - t; }
  int n_x() const { return n - n_z; }
  Eigen::Index offset(int step) const { return static_cast<Eigen::Index>(step - t - 1) * n; }
};

/// Mean Ψ₂₂⁻¹(δ̄₂ - ᾱ - Ψ₂₁ȳ_t) and covariance Ψ₂₂⁻¹Σ̄Ψ₂₂⁻ᵀ by block forward substitution.
inline GaussianLaw conditional_law(const ValidatedModel& model, StackedSystem sys,
                                   const MarketState& st) {
  const int n = sys.n;
  Vector rhs = sys.delta2 - sys.alpha_bar;
  for (const auto& k : sys.psi21) {
    rhs.segment(static_cast<Eigen::Index>(k.row) * n, n) += k.coeff * history_value(model, st, k.step);
  }
  GaussianLaw law;
  law.tag.kind = sys.mode == MeasureMode::RiskNeutral ? MeasureTag::Kind::RiskNeutral
                                                      : MeasureTag::Kind::Physical;
  law.t = sys.t;
  law.end = sys.end;
  law.n = n;
  law.n_z = sys.n_z;
  law.known_rate = history_value(model, st, st.t)(0);
  law.mean = solve_unit_block_lower(sys.psi22, rhs);
  const Eigen::Index dim = sys.psi22.size();
  Matrix sbar = Matrix::Zero(dim, dim);
  for (int r = 0; r < sys.blocks(); ++r) {
    sbar.block(static_cast<Eigen::Index>(r) * n, static_cast<Eigen::Index>(r) * n, n, n) = sys.sigma[r];
  }
  const Matrix x = solve_unit_block_lower(sys.psi22, sbar);          // Ψ⁻¹Σ̄
  const Matrix cov = solve_unit_block_lower(sys.psi22, Matrix(x.transpose()));  // Ψ⁻¹(Ψ⁻¹Σ̄)ᵀ
  law.cov = 0.5 * (cov + cov.transpose());
  law.system = std::make_shared<const StackedSystem>(std::move(sys));
  return law;
}

/// Convenience: law over (t, t+|future|] along `future` in the given measure.
inline GaussianLaw path_law(const ValidatedModel& model, const MarketState& st,
                            std::span<const int> future, MeasureMode mode) {
  return conditional_law(model, build_stacked_system(model, st, future, mode), st);
}

}  // namespace maxlink
