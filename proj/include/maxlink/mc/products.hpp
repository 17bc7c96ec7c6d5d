#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/hedging/hedging.hpp"
#include "maxlink/mc/engine.hpp"
#include "maxlink/pricing/premium.hpp"

namespace maxlink {

/// max_i w_i x_{i,k} along a path.
inline double path_max(const PathView& v, const MaxClaim& c) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < c.weights.size(); ++i) {
    m = std::max(m, c.weights(i) * v.price(static_cast<int>(i), c.k));
  }
  return m;
}

/// Discounted (to t) option payoff at maturity claim.k.
inline Payoff option_payoff(const MaxClaim& c, OptionKind kind) {
  return [c, kind](const PathView& v) {
    const double m = path_max(v, c);
    double pay = m;
    if (kind == OptionKind::Call) pay = std::max(m - c.guarantee, 0.0);
    if (kind == OptionKind::Put) pay = std::max(c.guarantee - m, 0.0);
    return v.discount(c.k) * pay;
  };
}

inline Payoff bond_payoff(int k) {
  return [k](const PathView& v) { return v.discount(k); };
}

/// Claim paid at k, discounted to t.
inline double sum_insured_payoff(const PathView& v, const ProductSpec& p, int k, bool raw_guarantee) {
  const auto& c = p.claim(k);
  const double m = path_max(v, c);
  if (is_segregated(p.kind)) return v.discount(k) * std::max(c.guarantee - m, 0.0);
  if (raw_guarantee) return v.discount(k) * std::max(m - c.guarantee, 0.0) + c.guarantee;
  return v.discount(k) * std::max(m, c.guarantee);
}

/// Product benefit with the lifetime drawn on the path's auxiliary stream.
inline Payoff product_payoff(const ProductSpec& p, const TiltedMortality& mort,
                             bool raw_guarantee = false) {
  return [p, mort, raw_guarantee](const PathView& v) {
    if (!p.alive) return 0.0;
    auto rng = v.aux_rng();
    const int d = sample_death_year(rng, mort);
    if (is_term(p.kind)) {
      return d == 0 ? 0.0 : sum_insured_payoff(v, p, p.t + d, raw_guarantee);
    }
    return d == 0 ? sum_insured_payoff(v, p, p.T, raw_guarantee) : 0.0;
  };
}

/// Monte-Carlo premiums for several products over one ensemble; lifetimes are simulated.
inline std::vector<McEstimate> mc_premiums(const Ensemble& ens, const std::vector<ProductSpec>& products,
                                           const LifeTable& table, const MortalityTilt& tilt = {},
                                           bool raw_guarantee = false) {
  std::vector<Payoff> payoffs;
  for (const auto& p : products) {
    if (ens.end < p.T) throw Error(Errc::InvalidSpec, "ensemble horizon shorter than the product");
    payoffs.push_back(product_payoff(p, remaining_mortality(p, table, tilt), raw_guarantee));
  }
  return mc_price_many(ens, payoffs);
}

/// Value at t+1 (discounted to t) with the death/survival outcome over (t, t+1] integrated out:
/// q̃·Q̄_{t+1} (term only) + p̃·V̄_{t+1}.
inline Payoff analytic_next_value(const ProductSpec& p, const ValidatedModel& model,
                                  const LifeTable& table, const MortalityTilt& tilt,
                                  const PricingOptions& opt = {}) {
  const auto mort = remaining_mortality(p, table, tilt);
  const double q1 = mort.deferred_death.front();
  const double p1 = 1.0 - q1;
  return [=, &model, &table](const PathView& v) {
    if (!p.alive) return 0.0;
    const int t1 = p.t + 1;
    double value = 0.0;
    if (is_term(p.kind)) value += q1 * sum_insured_payoff(v, p, t1, opt.raw_guarantee_leg);
    if (t1 == p.T) {
      if (!is_term(p.kind)) value += p1 * sum_insured_payoff(v, p, p.T, opt.raw_guarantee_leg);
    } else if (p1 > 0.0) {
      ProductSpec next = p;
      next.t = t1;
      value += p1 * v.discount(t1) * premium(next, model, v.state_at(t1), table, tilt, opt).value;
    }
    return value;
  };
}

/// Sample covariance of the one-step cost V̄_{t+1} - V̄_t - hᵀΔX̄_{t+1} with each ΔX̄_{j,t+1}.
/// Everything is discounted to t. Since Ẽ[ΔX̄] = 0, the covariance is the mean of cost·ΔX̄_j.
inline std::vector<McEstimate> mc_hedge_residual(const Ensemble& ens, const Vector& h, double value_t,
                                                 const Payoff& next_value) {
  const ValidatedModel& model = *ens.model;
  const int nx = model.n_x();
  if (h.size() != nx) throw Error(Errc::DimensionMismatch, "hedge vector must have n_x entries");
  const Vector x_t = asset_prices(model, ens.state);
  const int t1 = ens.state.t + 1;
  return mc_reduce(ens, static_cast<std::size_t>(nx), [&](const PathView& v, double* out) {
    Vector dx(nx);
    for (int j = 0; j < nx; ++j) dx(j) = v.discounted_price(j, t1) - x_t(j);
    const double cost = next_value(v) - value_t - h.dot(dx);
    for (int j = 0; j < nx; ++j) out[j] = cost * dx(j);
  });
}

/// Joint-sampling estimator: one path per parameter draw, each draw's model simulated once.
/// Returns the mean and standard error across draws.
template <class PayoffFactory>
McEstimate joint_sampling_estimate(const std::vector<ValidatedModel>& draws, const MarketState& st,
                                   int end, std::uint64_t seed, PayoffFactory&& factory) {
  detail::Moments m;
  for (std::size_t d = 0; d < draws.size(); ++d) {
    Ensemble ens;
    ens.model = &draws[d];
    ens.state = st;
    ens.end = end;
    ens.n_paths = 1;
    ens.seed = path_seed(seed, 7, d);
    m.add(mc_price(ens, factory(draws[d])).mean);
  }
  return m.estimate();
}

}  // namespace maxlink
