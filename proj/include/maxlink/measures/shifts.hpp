#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "maxlink/error.hpp"
#include "maxlink/msvar/stacked.hpp"
#include "maxlink/numerics/mvn.hpp"

namespace maxlink {

/// Spot-rate selector γ_{u,v}: picks e₁ᵀy_m for m = u..v-1 that lie in the window.
/// The already-known term e₁ᵀy_t (present when u = t < v) is returned through `known`.
inline Vector gamma_selector(const GaussianLaw& law, int u, int v, double* known = nullptr) {
  if (u < law.t || v < u || v > law.end + 1) {
    throw Error(Errc::SelectorOutOfWindow, "gamma(" + std::to_string(u) + "," + std::to_string(v) +
                                               ") outside window (" + std::to_string(law.t) + "," +
                                               std::to_string(law.end) + "]");
  }
  Vector g = Vector::Zero(law.mean.size());
  for (int m = std::max(u, law.t + 1); m < v; ++m) g(law.offset(m)) = 1.0;
  if (known) *known = (u == law.t && v > u) ? law.known_rate : 0.0;
  return g;
}

/// β^i_{t,u}: asset coordinate n_z+i (0-based i) over steps t+1..u.
inline Vector beta_selector(const GaussianLaw& law, int i, int u) {
  if (i < 0 || i >= law.n_x()) throw Error(Errc::DimensionMismatch, "asset index out of range");
  if (u < law.t || u > law.end) {
    throw Error(Errc::SelectorOutOfWindow, "beta horizon " + std::to_string(u) + " outside window");
  }
  Vector b = Vector::Zero(law.mean.size());
  for (int m = law.t + 1; m <= u; ++m) b(law.offset(m) + law.n_z + i) = 1.0;
  return b;
}

/// J_k: the n_x asset rows of block k.
inline Matrix j_selector(const GaussianLaw& law, int k) {
  if (k <= law.t || k > law.end) {
    throw Error(Errc::SelectorOutOfWindow, "J_" + std::to_string(k) + " outside window");
  }
  Matrix j = Matrix::Zero(law.n_x(), law.mean.size());
  for (int a = 0; a < law.n_x(); ++a) j(a, law.offset(k) + law.n_z + a) = 1.0;
  return j;
}

/// Ψ₂₂⁻¹Σ̄₂₂ β for a stacked selector β.
inline Vector measure_shift(const GaussianLaw& law, const Vector& beta) {
  if (!law.system) throw Error(Errc::InvalidSpec, "law carries no stacked system");
  const auto& sys = *law.system;
  Vector sb(beta.size());
  for (int r = 0; r < sys.blocks(); ++r) {
    const Eigen::Index off = static_cast<Eigen::Index>(r) * sys.n;
    sb.segment(off, sys.n) = sys.sigma[r] * beta.segment(off, sys.n);
  }
  return solve_unit_block_lower(sys.psi22, sb);
}

struct BetaShift {
  int asset;
  int horizon;
};

/// Forward measure P̃ⁱ_{t,u}: mean + Ψ₂₂⁻¹Σ̄β^i_{t,u}; covariance unchanged.
inline GaussianLaw shifted_law(const GaussianLaw& base, BetaShift a) {
  GaussianLaw out = base;
  out.mean += measure_shift(base, beta_selector(base, a.asset, a.horizon));
  out.tag = {MeasureTag::Kind::Forward, a.asset, a.horizon, -1, -1};
  return out;
}

/// Pair measure P̃^{i,j}_{t,u,v}: mean + Ψ₂₂⁻¹Σ̄(β^i_{t,u} + β^j_{t,v}).
inline GaussianLaw shifted_law(const GaussianLaw& base, BetaShift a, BetaShift b) {
  GaussianLaw out = base;
  out.mean += measure_shift(base, beta_selector(base, a.asset, a.horizon) +
                                      beta_selector(base, b.asset, b.horizon));
  out.tag = {MeasureTag::Kind::Pair, a.asset, a.horizon, b.asset, b.horizon};
  return out;
}

/// E^G[(D_v/D_u) 1_A | ℋ_t] = exp(a) · 𝒩(A; mean - Σγ, Σ).
struct DiscountedExpectation {
  double log_prefactor = 0.0;
  GaussianLaw law;

  double prefactor() const { return std::exp(log_prefactor); }
};

inline DiscountedExpectation discounted_factor_expectation(const GaussianLaw& law, int u, int v) {
  if (u < law.t || v < law.t || v < u) {
    throw Error(Errc::SelectorOutOfWindow, "discount window (" + std::to_string(u) + "," +
                                               std::to_string(v) + "] not within (t, end]");
  }
  double known = 0.0;
  const Vector g = gamma_selector(law, u, v, &known);
  DiscountedExpectation out;
  const Vector cg = law.cov * g;
  out.log_prefactor = -known - g.dot(law.mean) + 0.5 * g.dot(cg);
  out.law = law;
  out.law.mean -= cg;
  out.law.tag.kind = MeasureTag::Kind::Discounted;
  return out;
}

/// Law of A·x̃_k for a (rows × n_x) matrix A.
struct ProjectedLaw {
  Vector mean;
  Matrix cov;
};

inline ProjectedLaw project_law(const GaussianLaw& law, const Matrix& a, int k) {
  if (a.cols() != law.n_x()) {
    throw Error(Errc::DimensionMismatch, "projection matrix must have n_x columns");
  }
  const Eigen::Index off = law.offset(k) + law.n_z;
  if (k <= law.t || k > law.end) {
    throw Error(Errc::SelectorOutOfWindow, "projection step outside window");
  }
  ProjectedLaw out;
  out.mean = a * law.mean.segment(off, law.n_x());
  out.cov = a * law.cov.block(off, off, law.n_x(), law.n_x()) * a.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// {A·x̃_k ≤ b}.
struct LinearEvent {
  Matrix a;
  Vector b;
};

inline MvnResult event_probability(const ProjectedLaw& p, const Vector& b, double tol,
                                   const MvnOptions& opt = {}) {
  if (b.size() == 0) return {1.0, 0.0, false, 0};
  return mvn_cdf({b, p.mean, p.cov, tol}, opt);
}

inline MvnResult event_probability(const GaussianLaw& law, const LinearEvent& e, int k, double tol,
                                   const MvnOptions& opt = {}) {
  if (e.b.size() == 0) return {1.0, 0.0, false, 0};
  return event_probability(project_law(law, e.a, k), e.b, tol, opt);
}

}  // namespace maxlink
