#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/error.hpp"
#include "maxlink/msvar/simulate.hpp"
#include "maxlink/msvar/stacked.hpp"

namespace maxlink {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Lazy description of an ensemble of continuations of `state` up to step `end`.
/// Path p is a pure function of (seed, p), so any chunking or thread count gives the same paths.
struct Ensemble {
  const ValidatedModel* model = nullptr;
  MarketState state;
  int end = 1;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  MeasureMode mode = MeasureMode::RiskNeutral;
  unsigned threads = 1;
  bool antithetic = false;

  int steps() const { return end - state.t; }
};

/// Read-only view of one simulated path.
class PathView {
 public:
  PathView(const ValidatedModel& model, const MarketState& st, const SimulatedPath& path,
           std::size_t index, std::uint64_t life_seed)
      : model_(&model), st_(&st), path_(&path), index_(index), life_seed_(life_seed) {
    log_disc_.assign(path.y.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t r = 0; r < path.y.size(); ++r) {
      acc += y(st.t + static_cast<int>(r))(0);
      log_disc_[r + 1] = -acc;
    }
  }

  int t() const { return st_->t; }
  int end() const { return st_->t + static_cast<int>(path_->y.size()); }
  std::size_t index() const { return index_; }
  const SimulatedPath& path() const { return *path_; }

  /// y_m for m <= end (observed history for m <= t).
  const Vector& y(int m) const {
    if (m > st_->t) return path_->y[m - st_->t - 1];
    return history_value(*model_, *st_, m);
  }
  int regime(int m) const { return path_->regimes.states[m - st_->t - 1]; }

  /// D_m / D_t.
  double discount(int m) const { return std::exp(log_disc_[m - st_->t]); }
  /// Undiscounted price of asset i (0-based) at step m.
  double price(int i, int m) const { return std::exp(y(m)(model_->n_z() + i)); }
  /// Price discounted back to t: (D_m/D_t) x_{i,m}.
  double discounted_price(int i, int m) const { return discount(m) * price(i, m); }

  /// Independent stream for lifetimes or other auxiliary draws.
  PathRng aux_rng() const { return PathRng(life_seed_); }

  /// MarketState at step m (t <= m <= end) along this path.
  MarketState state_at(int m) const {
    MarketState s = *st_;
    for (int j = st_->t + 1; j <= m; ++j) {
      s.y.push_back(y(j));
      s.regimes.push_back(regime(j));
    }
    s.t = m;
    return s;
  }

 private:
  const ValidatedModel* model_;
  const MarketState* st_;
  const SimulatedPath* path_;
  std::size_t index_;
  std::uint64_t life_seed_;
  std::vector<double> log_disc_;
};

/// Curtate death year in 1..H under the given (tilted) mortality, or 0 for survival past H.
inline int sample_death_year(PathRng& rng, const TiltedMortality& mort) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < mort.deferred_death.size(); ++k) {
    acc += mort.deferred_death[k];
    if (u < acc) return static_cast<int>(k) + 1;
  }
  return 0;
}

namespace detail {

inline constexpr std::size_t kChunkPaths = 8192;

// Running mean / M2 (Welford), merged with Chan's formula.
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double tot = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / tot;
    m2 += o.m2 + d * d * n * o.n / tot;
    n = tot;
  }
  McEstimate estimate() const {
    McEstimate e;
    e.mean = mean;
    e.n_paths = static_cast<std::size_t>(n);
    e.std_error = n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return e;
  }
};

}  // namespace detail

/// Calls `fn(path_view)` for every path; `fn` returns a vector of outputs.
/// Results are reduced chunk by chunk in path order, independent of the thread count.
inline std::vector<McEstimate> mc_reduce(const Ensemble& ens, std::size_t outputs,
                                         const std::function<void(const PathView&, double*)>& fn) {
  if (!ens.model) throw Error(Errc::InvalidSpec, "ensemble has no model");
  if (ens.end <= ens.state.t) throw Error(Errc::InvalidSpec, "ensemble horizon must exceed t");
  check_state(*ens.model, ens.state);
  const ValidatedModel& model = *ens.model;
  const Simulator sim(model, ens.mode);
  MarketState st = ens.state;
  const std::size_t chunks = (ens.n_paths + detail::kChunkPaths - 1) / detail::kChunkPaths;
  std::vector<std::vector<detail::Moments>> results(chunks,
                                                    std::vector<detail::Moments>(outputs));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(chunks);

  auto worker = [&]() {
    std::vector<double> buf(outputs);
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::size_t lo = c * detail::kChunkPaths;
        const std::size_t hi = std::min(ens.n_paths, lo + detail::kChunkPaths);
        for (std::size_t p = lo; p < hi; ++p) {
          const std::size_t stream = ens.antithetic ? p / 2 : p;
          const double sign = ens.antithetic && (p % 2 == 1) ? -1.0 : 1.0;
          PathRng eps_rng(path_seed(ens.seed, 1, stream));
          PathRng regime_rng(path_seed(ens.seed, 2, stream));
          const auto path = sim.run(st, ens.steps(), eps_rng, regime_rng, sign);
          const PathView view(model, st, path, p, path_seed(ens.seed, 3, p));
          fn(view, buf.data());
          for (std::size_t o = 0; o < outputs; ++o) {
            if (!std::isfinite(buf[o])) {
              throw Error(Errc::NonFinitePayoff, "payoff is not finite on path " + std::to_string(p));
            }
            results[c][o].add(buf[o]);
          }
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(ens.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<detail::Moments> total(outputs);
  for (const auto& chunk : results) {
    for (std::size_t o = 0; o < outputs; ++o) total[o].merge(chunk[o]);
  }
  std::vector<McEstimate> out;
  for (const auto& m : total) out.push_back(m.estimate());
  return out;
}

using Payoff = std::function<double(const PathView&)>;

/// Sample means and standard errors of several payoffs over one ensemble.
inline std::vector<McEstimate> mc_price_many(const Ensemble& ens, const std::vector<Payoff>& payoffs) {
  return mc_reduce(ens, payoffs.size(), [&](const PathView& v, double* out) {
    for (std::size_t i = 0; i < payoffs.size(); ++i) out[i] = payoffs[i](v);
  });
}

/// Ensemble mean of a (discounted) payoff.
inline McEstimate mc_price(const Ensemble& ens, const Payoff& payoff) {
  return mc_price_many(ens, {payoff}).front();
}

/// Writes `path,step,regime,y0,...` rows for the first `max_paths` paths.
inline void dump_ensemble_csv(const Ensemble& ens, std::ostream& out, std::size_t max_paths) {
  const ValidatedModel& model = *ens.model;
  const Simulator sim(model, ens.mode);
  out << "path,step,regime";
  for (int d = 0; d < model.n(); ++d) out << ",y" << d;
  out << '\n';
  const auto old = out.precision(17);
  const std::size_t count = std::min(max_paths, ens.n_paths);
  for (std::size_t p = 0; p < count; ++p) {
    const std::size_t stream = ens.antithetic ? p / 2 : p;
    const double sign = ens.antithetic && (p % 2 == 1) ? -1.0 : 1.0;
    PathRng eps_rng(path_seed(ens.seed, 1, stream));
    PathRng regime_rng(path_seed(ens.seed, 2, stream));
    const auto path = sim.run(ens.state, ens.steps(), eps_rng, regime_rng, sign);
    for (std::size_t r = 0; r < path.y.size(); ++r) {
      out << p << ',' << ens.state.t + 1 + static_cast<int>(r) << ',' << path.regimes.states[r];
      for (int d = 0; d < model.n(); ++d) out << ',' << path.y[r](d);
      out << '\n';
    }
  }
  out.precision(old);
}

}  // namespace maxlink
