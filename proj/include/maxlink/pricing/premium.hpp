#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/error.hpp"
#include "maxlink/pricing/options.hpp"

namespace maxlink {

enum class ProductKind { SegregatedTerm, SegregatedEndowment, UnitLinkedTerm, UnitLinkedEndowment };

inline constexpr std::array<ProductKind, 4> kAllProducts = {
    ProductKind::SegregatedTerm, ProductKind::SegregatedEndowment, ProductKind::UnitLinkedTerm,
    ProductKind::UnitLinkedEndowment};

inline std::string to_string(ProductKind k) {
  switch (k) {
    case ProductKind::SegregatedTerm: return "segregated_term";
    case ProductKind::SegregatedEndowment: return "segregated_endowment";
    case ProductKind::UnitLinkedTerm: return "unit_linked_term";
    case ProductKind::UnitLinkedEndowment: return "unit_linked_endowment";
  }
  return "unknown";
}

inline ProductKind product_kind_from_string(const std::string& s) {
  for (auto k : kAllProducts) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::ParseError, "unknown product kind '" + s + "'");
}

inline bool is_term(ProductKind k) {
  return k == ProductKind::SegregatedTerm || k == ProductKind::UnitLinkedTerm;
}
inline bool is_segregated(ProductKind k) {
  return k == ProductKind::SegregatedTerm || k == ProductKind::SegregatedEndowment;
}

/// Contract written at age x with horizon T, valued at step t. claims[k-1] is the claim at k.
struct ProductSpec {
  ProductKind kind = ProductKind::SegregatedEndowment;
  int x = 0;
  int t = 0;
  int T = 1;
  std::vector<MaxClaim> claims;
  bool alive = true;

  const MaxClaim& claim(int k) const {
    if (k < 1 || k > static_cast<int>(claims.size())) {
      throw Error(Errc::InvalidSpec, "no claim for maturity " + std::to_string(k));
    }
    return claims[k - 1];
  }

  /// Maturities whose claims enter the value at t.
  std::vector<int> maturities() const {
    if (!is_term(kind)) return {T};
    std::vector<int> ks;
    for (int k = t + 1; k <= T; ++k) ks.push_back(k);
    return ks;
  }
};

inline void check_product(const ProductSpec& p, int n_x) {
  if (p.T < 1 || p.t < 0 || p.t >= p.T) {
    throw Error(Errc::InvalidSpec, "valuation step must satisfy 0 <= t < T");
  }
  if (static_cast<int>(p.claims.size()) < p.T) {
    throw Error(Errc::InvalidSpec, "claims must cover maturities 1..T");
  }
  for (int k = 1; k <= p.T; ++k) {
    if (p.claims[k - 1].k != k) throw Error(Errc::InvalidSpec, "claim maturities out of order");
    check_claim(p.claims[k - 1], n_x);
  }
}

/// Tilted deferred-death and survival weights for a life aged x+t over the remaining horizon.
inline TiltedMortality remaining_mortality(const ProductSpec& p, const LifeTable& table,
                                           const MortalityTilt& tilt) {
  return tilted_mortality(table, p.x + p.t, p.T - p.t, tilt.tail(p.t));
}

/// Legs needed by a product at each of its maturities.
inline void request_legs(const ProductSpec& p, std::map<int, std::pair<MaxClaim, LegRequest>>& legs) {
  for (int k : p.maturities()) {
    auto& entry = legs[k];
    entry.first = p.claim(k);
    if (is_segregated(p.kind)) {
      entry.second.put = true;
    } else if (p.claim(k).guarantee > 0.0) {
      entry.second.call = true;
      entry.second.zcb = true;
    } else {
      entry.second.forward = true;
    }
  }
}

/// Value at k of the claim paid at k, in time-t money.
inline double sum_insured_value(const ProductSpec& p, int k, const MaturityValues& v,
                                const PricingOptions& opt) {
  const double g = p.claim(k).guarantee;
  if (is_segregated(p.kind)) return std::max(v.put, 0.0);
  if (g <= 0.0) return v.forward;
  return std::max(v.call, 0.0) + g * (opt.raw_guarantee_leg ? 1.0 : v.zcb);
}

inline PriceResult premium_from_sweep(const ProductSpec& p, const MaturitySweep& sweep,
                                      const TiltedMortality& mort, const PricingOptions& opt) {
  PriceResult r;
  r.path_count = sweep.path_count;
  r.truncation_bound = sweep.truncation_bound;
  r.mvn_tol = opt.mvn_tol;
  r.mvn_error = sweep.mvn_error;
  r.regularized = sweep.regularized;
  if (!p.alive) return r;
  if (is_term(p.kind)) {
    for (int k = p.t + 1; k <= p.T; ++k) {
      r.value += sum_insured_value(p, k, sweep.values.at(k), opt) * mort.deferred_death[k - p.t - 1];
    }
  } else {
    r.value = sum_insured_value(p, p.T, sweep.values.at(p.T), opt) * mort.survive_T;
  }
  return r;
}

/// Single premium at t of the product (value at t of the discounted benefit, in time-t money).
inline PriceResult premium(const ProductSpec& p, const ValidatedModel& model, const MarketState& st,
                           const LifeTable& table, const MortalityTilt& tilt = {},
                           const PricingOptions& opt = {}) {
  check_product(p, model.n_x());
  if (st.t != p.t) throw Error(Errc::DimensionMismatch, "market state and product disagree on t");
  const auto mort = remaining_mortality(p, table, tilt);
  if (!p.alive) {
    PriceResult r;
    r.mvn_tol = opt.mvn_tol;
    return r;
  }
  std::map<int, std::pair<MaxClaim, LegRequest>> legs;
  request_legs(p, legs);
  return premium_from_sweep(p, price_maturities(model, st, legs, opt), mort, opt);
}

/// All four products sharing one regime-tree pass. Claims and ages come from `base`.
inline std::map<ProductKind, PriceResult> premium_suite(const ProductSpec& base,
                                                        const ValidatedModel& model,
                                                        const MarketState& st, const LifeTable& table,
                                                        const MortalityTilt& tilt = {},
                                                        const PricingOptions& opt = {},
                                                        std::vector<ProductKind> kinds = {}) {
  if (kinds.empty()) kinds.assign(kAllProducts.begin(), kAllProducts.end());
  check_product(base, model.n_x());
  if (st.t != base.t) throw Error(Errc::DimensionMismatch, "market state and product disagree on t");
  const auto mort = remaining_mortality(base, table, tilt);
  std::map<ProductKind, PriceResult> out;
  std::map<int, std::pair<MaxClaim, LegRequest>> legs;
  for (auto k : kinds) {
    ProductSpec p = base;
    p.kind = k;
    request_legs(p, legs);
  }
  MaturitySweep sweep;
  if (base.alive) sweep = price_maturities(model, st, legs, opt);
  for (auto k : kinds) {
    ProductSpec p = base;
    p.kind = k;
    out[k] = premium_from_sweep(p, sweep, mort, opt);
  }
  return out;
}

/// Averages a conditional price over parameter draws. Returns mean and sample standard deviation.
struct DrawAverage {
  double mean = 0.0;
  double dispersion = 0.0;
  std::size_t draws = 0;
};

template <class Pricer>
DrawAverage bayesian_average(const std::vector<ValidatedModel>& draws, Pricer&& pricer) {
  if (draws.empty()) throw Error(Errc::DimensionMismatch, "at least one parameter draw is required");
  const auto& ref = draws.front();
  std::vector<double> values;
  values.reserve(draws.size());
  for (const auto& d : draws) {
    if (d.n_z() != ref.n_z() || d.n_x() != ref.n_x() || d.regimes() != ref.regimes() ||
        d.exog_dim() != ref.exog_dim() || d.lag_order() != ref.lag_order()) {
      throw Error(Errc::DimensionMismatch, "parameter draws disagree on the model skeleton");
    }
    values.push_back(pricer(d));
  }
  // Sorted summation makes the result independent of draw order.
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  DrawAverage out;
  out.draws = sorted.size();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  out.mean = sum / static_cast<double>(sorted.size());
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - out.mean) * (v - out.mean);
    out.dispersion = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  }
  return out;
}

}  // namespace maxlink
