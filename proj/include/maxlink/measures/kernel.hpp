#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "maxlink/msvar/model.hpp"
#include "maxlink/msvar/simulate.hpp"
#include "maxlink/msvar/stacked.hpp"

namespace maxlink {

/// θ_{t-1}(s̄_t) = Δ₀ψ_t + Σᵢ Δᵢy_{t-i} - α_t with the risk-neutral Δ's.
/// `prev` carries the history up to t-1; `sigma` is Σ_t.
inline Vector girsanov_kernel(const ValidatedModel& model, int s, const MarketState& prev,
                              const Matrix& sigma) {
  detail::expect_shape(sigma, model.n(), model.n(), "Sigma_t");
  const int m = prev.t + 1;
  const auto rn = effective_coefficients(model, s, MeasureMode::RiskNeutral);
  const auto ph = effective_coefficients(model, s, MeasureMode::Physical);
  auto lagged = [&](int i) -> const Vector& { return history_value(model, prev, m - i); };
  Vector theta = detail::step_mean(model, rn, m, lagged) - detail::step_mean(model, ph, m, lagged);
  theta -= 0.5 * sigma.diagonal();
  return theta;
}

/// L_1..L_T along an observed path y_1..y_T with regimes s_1..s_T.
inline std::vector<double> state_price_density(const ValidatedModel& model,
                                               std::span<const Vector> y,
                                               std::span<const int> regimes) {
  if (y.size() != regimes.size()) {
    throw Error(Errc::DimensionMismatch, "y and regime paths must have equal length");
  }
  const auto sigmas = covariance_sequence(model, regimes);
  MarketState prev;
  std::vector<double> out;
  double log_l = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const int s = regimes[r];
    const int m = prev.t + 1;
    const Vector theta = girsanov_kernel(model, s, prev, sigmas[r]);
    const auto ph = effective_coefficients(model, s, MeasureMode::Physical);
    auto lagged = [&](int i) -> const Vector& { return history_value(model, prev, m - i); };
    const Vector resid = y[r] - detail::step_mean(model, ph, m, lagged);
    const auto llt = cholesky_regularized(sigmas[r]).lower;
    const Vector a = llt.triangularView<Eigen::Lower>().solve(theta);
    const Vector b = llt.triangularView<Eigen::Lower>().solve(resid);
    log_l += a.dot(b) - 0.5 * a.squaredNorm();
    out.push_back(std::exp(log_l));
    prev.t = m;
    prev.y.push_back(y[r]);
    prev.regimes.push_back(s);
  }
  return out;
}

}  // namespace maxlink
