#pragma once

#include <cmath>
#include <vector>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/error.hpp"
#include "maxlink/measures/posterior.hpp"
#include "maxlink/measures/regime_tree.hpp"
#include "maxlink/measures/shifts.hpp"
#include "maxlink/pricing/premium.hpp"

namespace maxlink {

/// Posterior-weighted value of fn(state) when the regime history is unobserved.
template <class Fn>
auto posterior_average(const ValidatedModel& model, const MarketState& st, Fn&& fn) {
  if (st.t == 0 || st.regimes_known()) return fn(st);
  const auto post = regime_posterior(model, st);
  auto total = fn([&] {
    MarketState w = st;
    w.regimes = post.paths[0].states;
    return w;
  }());
  total = total * post.weights[0];
  for (std::size_t p = 1; p < post.paths.size(); ++p) {
    MarketState w = st;
    w.regimes = post.paths[p].states;
    total = total + fn(w) * post.weights[p];
  }
  return total;
}

/// Ẽ[X̄_{i,u} X̄_{j,v} | ℋ_t] (0-based assets), in absolute discount units.
inline double cross_moment(const ValidatedModel& model, const MarketState& st, int i, int u, int j,
                           int v) {
  if (u < st.t || v < st.t) throw Error(Errc::SelectorOutOfWindow, "cross moment needs u, v >= t");
  if (i < 0 || j < 0 || i >= model.n_x() || j >= model.n_x()) {
    throw Error(Errc::DimensionMismatch, "asset index out of range");
  }
  return posterior_average(model, st, [&](const MarketState& s) {
    const Vector xb = discounted_prices(model, s);
    const int m = std::min(u, v);
    if (m == s.t) return xb(i) * xb(j);
    double acc = 0.0;
    walk_regime_tree(model, s, {m}, MeasureMode::RiskNeutral,
                     [&](int, std::span<const int>, double prob, const GaussianLaw& law) {
                       double sum = 0.0;
                       for (const auto& sig : law.system->sigma) sum += sig(model.n_z() + i, model.n_z() + j);
                       acc += prob * std::exp(sum);
                     });
    return xb(i) * xb(j) * acc;
  });
}

/// Ω_{t+1} = Ẽ[ΔX̄_{t+1} ΔX̄ᵀ_{t+1} | ℱ_t].
inline Matrix omega(const ValidatedModel& model, const MarketState& st) {
  check_state(model, st);
  return posterior_average(model, st, [&](const MarketState& s) -> Matrix {
    const Vector xb = discounted_prices(model, s);
    const int nx = model.n_x();
    const int nz = model.n_z();
    Matrix e = Matrix::Zero(nx, nx);
    walk_regime_tree(model, s, {s.t + 1}, MeasureMode::RiskNeutral,
                     [&](int, std::span<const int>, double prob, const GaussianLaw& law) {
                       const Matrix& sig = law.system->sigma.front();
                       for (int a = 0; a < nx; ++a) {
                         for (int b = 0; b < nx; ++b) e(a, b) += prob * std::exp(sig(nz + a, nz + b));
                       }
                     });
    Matrix w(nx, nx);
    for (int a = 0; a < nx; ++a) {
      for (int b = 0; b < nx; ++b) w(a, b) = xb(a) * xb(b) * (e(a, b) - 1.0);
    }
    return 0.5 * (w + w.transpose());
  });
}

enum class SumInsuredKind { Segregated, UnitLinked };

namespace detail {

// R-vector contributions of one regime path to maturity k.
inline Vector r_vector_path(const GaussianLaw& law, const MaxClaim& claim, SumInsuredKind kind,
                            double d_t, const Vector& xb, int nz, const PricingOptions& opt,
                            PathAccumulator& acc) {
  const int t = law.t;
  const int k = claim.k;
  const int nx = law.n_x();
  const double g = claim.guarantee;
  const Matrix& sig1 = law.system->sigma.front();
  Vector r = Vector::Zero(nx);
  std::vector<EventGeometry> geo;
  for (int i = 0; i < nx; ++i) {
    if (kind == SumInsuredKind::Segregated) {
      geo.push_back(event_geometry(claim, i, OptionKind::Put));
    } else {
      geo.push_back(event_geometry(claim, i, g > 0.0 ? OptionKind::Call : OptionKind::Forward));
    }
  }
  for (int j = 0; j < nx; ++j) {
    double bond_leg = 0.0;
    if (g > 0.0) {
      const auto dj = discounted_factor_expectation(shifted_law(law, {j, t + 1}), t, k);
      double probs = 0.0;
      for (int i = 0; i < nx; ++i) probs += acc.prob(dj.law, geo[i], k, opt);
      bond_leg = g * d_t * xb(j) * dj.prefactor() *
                 (kind == SumInsuredKind::Segregated ? probs : probs - 1.0);
    }
    double pair_leg = 0.0;
    if (kind == SumInsuredKind::UnitLinked || g > 0.0) {
      for (int i = 0; i < nx; ++i) {
        const GaussianLaw pair = shifted_law(law, {i, k}, {j, t + 1});
        pair_leg += claim.weights(i) * xb(i) * xb(j) * std::exp(sig1(nz + i, nz + j)) *
                    acc.prob(pair, geo[i], k, opt);
      }
    }
    r(j) = kind == SumInsuredKind::Segregated ? bond_leg - pair_leg : pair_leg - bond_leg;
  }
  return r;
}

}  // namespace detail

/// R^k_{t+1} = Ẽ[Q̄_k X̄_{t+1} | 𝒢_t] for every asset j, in absolute discount units.
inline Vector sum_insured_cross_expectation(const ValidatedModel& model, const MarketState& st,
                                            const MaxClaim& claim, SumInsuredKind kind,
                                            const PricingOptions& opt = {}) {
  check_state(model, st);
  check_claim(claim, model.n_x());
  if (claim.k <= st.t) throw Error(Errc::SelectorOutOfWindow, "claim maturity must exceed t");
  return posterior_average(model, st, [&](const MarketState& s) -> Vector {
    const double d_t = discount_factor(model, s);
    const Vector xb = d_t * asset_prices(model, s);
    Vector r = Vector::Zero(model.n_x());
    detail::PathAccumulator acc;
    walk_regime_tree(model, s, {claim.k}, MeasureMode::RiskNeutral,
                     [&](int, std::span<const int>, double prob, const GaussianLaw& law) {
                       r += prob * detail::r_vector_path(law, claim, kind, d_t, xb, model.n_z(), opt, acc);
                     });
    return r;
  });
}

/// Λ_{t+1} for a product: mortality-weighted R-vectors minus V̄_t X̄_t.
/// `premium_t` is the product value at t in time-t money.
inline Vector lambda_vector(const ProductSpec& p, const ValidatedModel& model, const MarketState& st,
                            const LifeTable& table, const MortalityTilt& tilt, double premium_t,
                            const PricingOptions& opt = {}) {
  check_product(p, model.n_x());
  if (!p.alive) return Vector::Zero(model.n_x());
  const auto mort = remaining_mortality(p, table, tilt);
  const auto kind = is_segregated(p.kind) ? SumInsuredKind::Segregated : SumInsuredKind::UnitLinked;
  Vector lam = Vector::Zero(model.n_x());
  if (is_term(p.kind)) {
    for (int k = p.t + 1; k <= p.T; ++k) {
      const double w = mort.deferred_death[k - p.t - 1];
      if (w == 0.0) continue;
      lam += w * sum_insured_cross_expectation(model, st, p.claim(k), kind, opt);
    }
  } else if (mort.survive_T > 0.0) {
    lam += mort.survive_T * sum_insured_cross_expectation(model, st, p.claim(p.T), kind, opt);
  }
  lam -= discount_factor(model, st) * premium_t * discounted_prices(model, st);
  return lam;
}

struct HedgePosition {
  int t = 0;
  Vector h;
  double h0 = 0.0;
  double V = 0.0;
  bool singular_omega = false;
};

/// h = Ω⁻¹Λ and h⁰ = V - hᵀx, with h⁰ nudged so that hᵀx + h⁰ == V in floating point.
inline HedgePosition strategy(const Matrix& omega_m, const Vector& lambda, double value,
                              const Vector& x, int t = 0) {
  if (omega_m.rows() != lambda.size() || omega_m.cols() != lambda.size() || x.size() != lambda.size()) {
    throw Error(Errc::DimensionMismatch, "omega, lambda and prices disagree in size");
  }
  HedgePosition pos;
  pos.t = t;
  pos.V = value;
  Eigen::LLT<Matrix> llt(omega_m);
  const double scale = omega_m.cwiseAbs().maxCoeff();
  bool ok = llt.info() == Eigen::Success && scale > 0.0;
  if (ok) {
    const auto d = llt.matrixL().toDenseMatrix().diagonal();
    ok = d.minCoeff() > 1e-12 * std::sqrt(scale);
  }
  if (ok) {
    pos.h = llt.solve(lambda);
  } else {
    pos.singular_omega = true;
    pos.h = omega_m.completeOrthogonalDecomposition().pseudoInverse() * lambda;
  }
  double dot = 0.0;
  for (Eigen::Index a = 0; a < x.size(); ++a) dot += pos.h(a) * x(a);
  double h0 = value - dot;
  for (int guard = 0; guard < 64 && dot + h0 != value; ++guard) {
    h0 = std::nextafter(h0, dot + h0 < value ? INFINITY : -INFINITY);
  }
  pos.h0 = h0;
  return pos;
}

/// Value identity check using the same summation order as `strategy`.
inline bool value_identity_holds(const HedgePosition& pos, const Vector& x) {
  double dot = 0.0;
  for (Eigen::Index a = 0; a < x.size(); ++a) dot += pos.h(a) * x(a);
  return dot + pos.h0 == pos.V;
}

struct HedgeReport {
  HedgePosition position;
  Matrix omega;
  Vector lambda;
  double premium = 0.0;   // value at t in time-t money
  bool discounted_ledger = false;
};

/// Locally risk-minimizing position for h_{t+1} chosen at t. The cash account uses the
/// undiscounted value and prices at t unless `discounted_ledger` is set.
inline HedgeReport hedge(const ProductSpec& p, const ValidatedModel& model, const MarketState& st,
                         const LifeTable& table, const MortalityTilt& tilt = {},
                         const PricingOptions& opt = {}, bool discounted_ledger = false) {
  PricingOptions discounted = opt;
  discounted.raw_guarantee_leg = false;
  HedgeReport rep;
  rep.premium = premium(p, model, st, table, tilt, discounted).value;
  rep.omega = omega(model, st);
  rep.lambda = lambda_vector(p, model, st, table, tilt, rep.premium, discounted);
  const double d_t = discount_factor(model, st);
  const Vector x = asset_prices(model, st);
  rep.discounted_ledger = discounted_ledger;
  rep.position = discounted_ledger ? strategy(rep.omega, rep.lambda, d_t * rep.premium, d_t * x, st.t)
                                   : strategy(rep.omega, rep.lambda, rep.premium, x, st.t);
  return rep;
}

}  // namespace maxlink
