#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/measures/posterior.hpp"
#include "maxlink/measures/regime_tree.hpp"
#include "maxlink/measures/shifts.hpp"
#include "maxlink/msvar/stacked.hpp"
#include "maxlink/pricing/claims.hpp"

namespace maxlink {

struct PricingOptions {
  double mvn_tol = 1e-6;
  MvnOptions mvn;
  bool raw_guarantee_leg = false;
};

struct PriceResult {
  double value = 0.0;
  std::size_t path_count = 0;
  double truncation_bound = 0.0;
  double mvn_tol = 1e-6;
  double mvn_error = 0.0;  // accumulated quadrature error estimate
  bool regularized = false;
};

/// Prices of the building blocks at one maturity, in time-t money.
struct MaturityValues {
  double call = 0.0;
  double put = 0.0;
  double forward = 0.0;
  double zcb = 0.0;
};

/// Which legs are requested at a maturity.
struct LegRequest {
  bool call = false;
  bool put = false;
  bool forward = false;
  bool zcb = false;
};

struct MaturitySweep {
  std::map<int, MaturityValues> values;
  std::size_t path_count = 0;
  double truncation_bound = 0.0;
  double mvn_error = 0.0;
  bool regularized = false;
};

namespace detail {

struct PathAccumulator {
  double mvn_error = 0.0;
  bool regularized = false;

  double prob(const GaussianLaw& law, const EventGeometry& g, int k, const PricingOptions& opt) {
    const auto r = event_probability(project_law(law, g.L, k), g.b, opt.mvn_tol, opt.mvn);
    mvn_error += r.error;
    regularized |= r.regularized;
    return r.value;
  }
};

// Per-path contribution of the requested legs; `x` holds undiscounted x_t.
inline MaturityValues path_values(const GaussianLaw& law, int k, const MaxClaim& claim,
                                  const LegRequest& req, const Vector& x, const PricingOptions& opt,
                                  PathAccumulator& acc) {
  MaturityValues out;
  const int nx = law.n_x();
  const auto disc = discounted_factor_expectation(law, law.t, k);
  const double zcb = disc.prefactor();
  out.zcb = zcb;
  const bool call = req.call && claim.guarantee > 0.0;
  if (!call && !req.put && !req.forward) return out;
  for (int i = 0; i < nx; ++i) {
    const GaussianLaw fwd = shifted_law(law, {i, k});
    const double wx = claim.weights(i) * x(i);
    if (call) {
      const auto g = event_geometry(claim, i, OptionKind::Call);
      out.call += wx * acc.prob(fwd, g, k, opt) - claim.guarantee * zcb * acc.prob(disc.law, g, k, opt);
    }
    if (req.put && claim.guarantee > 0.0) {
      const auto g = event_geometry(claim, i, OptionKind::Put);
      out.put += claim.guarantee * zcb * acc.prob(disc.law, g, k, opt) - wx * acc.prob(fwd, g, k, opt);
    }
    if (req.forward) {
      out.forward += wx * acc.prob(fwd, event_geometry(claim, i, OptionKind::Forward), k, opt);
    }
  }
  return out;
}

// Price sweep for a state whose regime history is known (or t = 0).
inline MaturitySweep sweep_known(const ValidatedModel& model, const MarketState& st,
                                 const std::map<int, std::pair<MaxClaim, LegRequest>>& legs,
                                 const PricingOptions& opt) {
  MaturitySweep out;
  std::vector<int> visit;
  for (const auto& [k, _] : legs) {
    visit.push_back(k);
    out.values[k] = {};
  }
  const Vector x = asset_prices(model, st);
  PathAccumulator acc;
  const auto stats = walk_regime_tree(
      model, st, visit, MeasureMode::RiskNeutral,
      [&](int k, std::span<const int>, double prob, const GaussianLaw& law) {
        const auto& [claim, req] = legs.at(k);
        const auto v = path_values(law, k, claim, req, x, opt, acc);
        auto& tot = out.values[k];
        tot.call += prob * v.call;
        tot.put += prob * v.put;
        tot.forward += prob * v.forward;
        tot.zcb += prob * v.zcb;
      });
  out.path_count = stats.path_count;
  out.truncation_bound = stats.truncation_bound;
  out.mvn_error = acc.mvn_error;
  out.regularized = acc.regularized;
  return out;
}

}  // namespace detail

inline MaturitySweep scale(const MaturitySweep& s, double w) {
  MaturitySweep out = s;
  for (auto& [k, v] : out.values) v = {w * v.call, w * v.put, w * v.forward, w * v.zcb};
  return out;
}

inline void accumulate(MaturitySweep& total, const MaturitySweep& part, double w) {
  for (const auto& [k, v] : part.values) {
    auto& t = total.values[k];
    t.call += w * v.call;
    t.put += w * v.put;
    t.forward += w * v.forward;
    t.zcb += w * v.zcb;
  }
  total.path_count += part.path_count;
  total.truncation_bound += w * part.truncation_bound;
  total.mvn_error += part.mvn_error;
  total.regularized |= part.regularized;
}

/// Applies `fn(state_with_regimes)` over the regime posterior when the history is unobserved.
template <class Fn>
auto over_regime_history(const ValidatedModel& model, const MarketState& st, Fn&& fn) {
  if (st.t == 0 || st.regimes_known()) return fn(st);
  const auto post = regime_posterior(model, st);
  decltype(fn(st)) total{};
  bool first = true;
  for (std::size_t p = 0; p < post.paths.size(); ++p) {
    MarketState with = st;
    with.regimes = post.paths[p].states;
    auto part = fn(with);
    if (first) {
      total = scale(part, post.weights[p]);
      first = false;
    } else {
      accumulate(total, part, post.weights[p]);
    }
  }
  return total;
}

/// One regime-tree pass pricing every requested leg at every maturity.
inline MaturitySweep price_maturities(const ValidatedModel& model, const MarketState& st,
                                      const std::map<int, std::pair<MaxClaim, LegRequest>>& legs,
                                      const PricingOptions& opt = {}) {
  check_state(model, st);
  for (const auto& [k, cl] : legs) {
    if (k <= st.t) throw Error(Errc::SelectorOutOfWindow, "maturity must exceed valuation step");
    check_claim(cl.first, model.n_x());
  }
  return over_regime_history(model, st, [&](const MarketState& s) {
    return detail::sweep_known(model, s, legs, opt);
  });
}

namespace detail {

inline PriceResult single_leg(const ValidatedModel& model, const MarketState& st,
                              const MaxClaim& claim, LegRequest req, const PricingOptions& opt,
                              double MaturityValues::*field) {
  const auto sweep = price_maturities(model, st, {{claim.k, {claim, req}}}, opt);
  PriceResult r;
  r.value = sweep.values.at(claim.k).*field;
  r.path_count = sweep.path_count;
  r.truncation_bound = sweep.truncation_bound;
  r.mvn_tol = opt.mvn_tol;
  r.mvn_error = sweep.mvn_error;
  r.regularized = sweep.regularized;
  return r;
}

}  // namespace detail

/// (1/D_t) Ẽ[D_k | 𝒢_t].
inline PriceResult zcb_price(const ValidatedModel& model, const MarketState& st, int k,
                             const PricingOptions& opt = {}) {
  MaxClaim dummy{k, Vector::Ones(model.n_x()), 0.0};
  LegRequest req;
  req.zcb = true;
  return detail::single_leg(model, st, dummy, req, opt, &MaturityValues::zcb);
}

/// (1/D_t) Ẽ[D_k (M_k - G_k)⁺ | 𝒢_t].
inline PriceResult call_on_max(const ValidatedModel& model, const MarketState& st,
                               const MaxClaim& claim, const PricingOptions& opt = {}) {
  if (claim.guarantee <= 0.0) {
    throw Error(Errc::GuaranteeZeroInCall, "call on maximum needs G > 0; use forward_max");
  }
  LegRequest req;
  req.call = true;
  auto r = detail::single_leg(model, st, claim, req, opt, &MaturityValues::call);
  r.value = std::max(r.value, 0.0);
  return r;
}

/// (1/D_t) Ẽ[D_k (G_k - M_k)⁺ | 𝒢_t].
inline PriceResult put_on_max(const ValidatedModel& model, const MarketState& st,
                              const MaxClaim& claim, const PricingOptions& opt = {}) {
  LegRequest req;
  req.put = true;
  auto r = detail::single_leg(model, st, claim, req, opt, &MaturityValues::put);
  r.value = std::max(r.value, 0.0);
  return r;
}

/// (1/D_t) Ẽ[D_k M_k | 𝒢_t].
inline PriceResult forward_max(const ValidatedModel& model, const MarketState& st,
                               const MaxClaim& claim, const PricingOptions& opt = {}) {
  LegRequest req;
  req.forward = true;
  return detail::single_leg(model, st, claim, req, opt, &MaturityValues::forward);
}

}  // namespace maxlink
