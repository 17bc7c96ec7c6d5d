#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/measures/regime_tree.hpp"
#include "maxlink/msvar/model.hpp"
#include "maxlink/msvar/stacked.hpp"

namespace maxlink {

struct PosteriorWeights {
  std::vector<RegimePath> paths;
  std::vector<double> weights;
};

/// Log density of the observed block ȳ_t under the stacked law along `regimes`.
inline double stacked_log_density(const ValidatedModel& model, const MarketState& obs,
                                  const std::vector<int>& regimes, MeasureMode mode) {
  const MarketState origin;
  const GaussianLaw law = path_law(model, origin, regimes, mode);
  Vector x(law.mean.size());
  for (int m = 1; m <= obs.t; ++m) x.segment(law.offset(m), model.n()) = obs.y[m - 1];
  const auto chol = cholesky_regularized(law.cov);
  const Vector z = chol.lower.triangularView<Eigen::Lower>().solve(x - law.mean);
  const double logdet = 2.0 * chol.lower.diagonal().array().log().sum();
  const double d = static_cast<double>(x.size());
  return -0.5 * (z.squaredNorm() + logdet + d * std::log(2.0 * std::numbers::pi));
}

/// Posterior over s̄_t given ȳ_t for known coefficients: weight ∝ chain probability × stacked density.
inline PosteriorWeights regime_posterior(const ValidatedModel& model, const MarketState& obs,
                                         MeasureMode mode = MeasureMode::RiskNeutral) {
  check_state(model, obs);
  guard_path_count(model.regimes(), obs.t);
  PosteriorWeights out;
  if (obs.t == 0) {
    out.paths.push_back({1, {}, 1.0});
    out.weights.push_back(1.0);
    return out;
  }
  const int big_n = model.regimes();
  std::vector<double> logw;
  std::vector<int> idx(obs.t, 0);
  while (true) {
    const double chain = chain_probability(model, {}, idx);
    if (chain > 0.0) {
      out.paths.push_back({1, idx, chain});
      logw.push_back(std::log(chain) + stacked_log_density(model, obs, idx, mode));
    }
    int pos = obs.t - 1;
    while (pos >= 0 && ++idx[pos] == big_n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logw) mx = std::max(mx, l);
  double total = 0.0;
  for (double l : logw) total += std::exp(l - mx);
  for (double l : logw) out.weights.push_back(std::exp(l - mx) / total);
  return out;
}

}  // namespace maxlink
