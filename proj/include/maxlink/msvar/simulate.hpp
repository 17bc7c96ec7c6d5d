#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "maxlink/msvar/model.hpp"
#include "maxlink/msvar/stacked.hpp"

namespace maxlink {

/// SplitMix64 finalizer; used to derive independent per-path seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `stream` of path `index` under a master seed.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

/// Counter-based stream: the k-th output is splitmix64(key + k·golden). Cheap to key per path,
/// unlike mt19937_64 whose 312-word state dominates short paths.
class PathRng {
 public:
  using result_type = std::uint64_t;
  explicit PathRng(std::uint64_t key = 0) : state_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return splitmix64(state_ += 0x9e3779b97f4a7c15ULL); }

 private:
  std::uint64_t state_;
};

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(PathRng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class Probs>
int draw_regime(PathRng& rng, const Probs& probs) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const auto last = static_cast<int>(probs.size()) - 1;
  for (int s = 0; s < last; ++s) {
    acc += probs(s);
    if (u < acc) return s;
  }
  return last;
}

/// Simulated continuation y_{t+1..t+steps} with its regimes.
struct SimulatedPath {
  RegimePath regimes;
  std::vector<Vector> y;
  std::vector<Matrix> sigma;  // filled only when requested
};

namespace detail {

// One step of the recursion. `lagged(i)` returns y_{m-i}.
template <class Lagged>
Vector step_mean(const ValidatedModel& model, const EffectiveCoefficients& c, int m,
                 const Lagged& lagged) {
  Vector mean = c.c0 * model.exog(m);
  for (int i = 1; i <= model.lag_order(); ++i) mean += c.lags[i - 1] * lagged(i);
  return mean;
}

}  // namespace detail

/// Path generator for one measure; caches per-regime coefficients and factors.
class Simulator {
 public:
  Simulator(const ValidatedModel& model, MeasureMode mode) : model_(&model), mode_(mode) {
    for (int s = 0; s < model.regimes(); ++s) {
      coeff_.push_back(effective_coefficients(model, s, mode));
      if (!model.is_garch()) {
        chol_.push_back(cholesky_regularized(model.sigma(s)).lower);
        half_diag_.push_back(0.5 * model.sigma(s).diagonal());
      }
    }
  }

  const ValidatedModel& model() const { return *model_; }
  MeasureMode mode() const { return mode_; }

  /// Continues from `st`. `eps_sign` = -1 gives the antithetic partner.
  SimulatedPath run(const MarketState& st, int steps, PathRng& eps_rng,
                    PathRng& regime_rng, double eps_sign = 1.0,
                    bool keep_sigma = false) const {
    const auto& model = *model_;
    std::normal_distribution<double> normal(0.0, 1.0);
    SimulatedPath out;
    out.regimes.start = st.t + 1;
    out.regimes.states.reserve(steps);
    out.y.reserve(steps);
    CovarianceRecursion rec(model);
    if (model.is_garch()) {
      if (!st.regimes_known()) {
        throw Error(Errc::DimensionMismatch, "GARCH simulation needs the regime history");
      }
      for (int s : st.regimes) (void)rec.next(s);
    }
    int prev = st.t > 0 && st.regimes_known() ? st.regimes.back() : -1;
    if (st.t > 0 && prev < 0) {
      throw Error(Errc::DimensionMismatch, "simulation from t > 0 needs the current regime");
    }
    const int n = model.n();
    Vector eps(n);
    for (int r = 0; r < steps; ++r) {
      const int m = st.t + 1 + r;
      const int s = prev < 0 ? draw_regime(regime_rng, model.spec().initial_dist)
                             : draw_regime(regime_rng, model.spec().transition.row(prev));
      out.regimes.chain_prob *= prev < 0 ? model.initial(s) : model.transition(prev, s);
      out.regimes.states.push_back(s);
      prev = s;
      auto lagged = [&](int i) -> const Vector& {
        const int j = m - i;
        if (j > st.t) return out.y[j - st.t - 1];
        return history_value(model, st, j);
      };
      Vector y = detail::step_mean(model, coeff_[s], m, lagged);
      for (int d = 0; d < n; ++d) eps(d) = eps_sign * normal(eps_rng);
      if (model.is_garch()) {
        const Matrix sigma = rec.next(s);
        if (mode_ == MeasureMode::RiskNeutral) y -= 0.5 * sigma.diagonal();
        y += cholesky_regularized(sigma).lower * eps;
        if (keep_sigma) out.sigma.push_back(sigma);
      } else {
        if (mode_ == MeasureMode::RiskNeutral) y -= half_diag_[s];
        y.noalias() += chol_[s] * eps;
        if (keep_sigma) out.sigma.push_back(model.sigma(s));
      }
      out.y.push_back(std::move(y));
    }
    return out;
  }

 private:
  const ValidatedModel* model_;
  MeasureMode mode_;
  std::vector<EffectiveCoefficients> coeff_;
  std::vector<Matrix> chol_;
  std::vector<Vector> half_diag_;
};

/// Physical-measure path y_1..y_T from the presample; bit-reproducible for a fixed seed.
inline SimulatedPath simulate_physical(const ValidatedModel& model, int horizon, std::uint64_t seed) {
  PathRng eps_rng(path_seed(seed, 1, 0));
  PathRng regime_rng(path_seed(seed, 2, 0));
  return Simulator(model, MeasureMode::Physical).run(MarketState{}, horizon, eps_rng, regime_rng);
}

}  // namespace maxlink
