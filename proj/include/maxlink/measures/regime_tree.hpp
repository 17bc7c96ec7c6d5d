#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/msvar/stacked.hpp"

namespace maxlink {

/// Paths with chain probability below this are pruned; their mass is reported.
inline constexpr double kPruneThreshold = 1e-15;
inline constexpr double kMaxPaths = 1e6;

struct TreeStats {
  std::size_t path_count = 0;
  double truncation_bound = 0.0;
};

inline void guard_path_count(int regimes, int depth) {
  if (depth > 0 && depth * std::log(static_cast<double>(regimes)) > std::log(kMaxPaths) + 1e-9) {
    throw Error(Errc::PathExplosion, std::to_string(regimes) + "^" + std::to_string(depth) +
                                         " regime paths exceed the enumeration limit");
  }
}

/// Depth-first walk over future regime paths s_{t+1..end}. For each node whose
/// end step is listed in `visit`, calls visit_fn(k, future, chain_prob, law) with
/// the conditional law of (y_{t+1}, ..., y_k). Visit order is deterministic.
template <class Visitor>
TreeStats walk_regime_tree(const ValidatedModel& model, const MarketState& st, std::vector<int> visit,
                           MeasureMode mode, Visitor&& visit_fn) {
  check_state(model, st);
  std::sort(visit.begin(), visit.end());
  visit.erase(std::unique(visit.begin(), visit.end()), visit.end());
  TreeStats stats;
  if (visit.empty()) return stats;
  if (visit.front() <= st.t) throw Error(Errc::SelectorOutOfWindow, "maturity must exceed t");
  if (st.t > 0 && !st.regimes_known()) {
    throw Error(Errc::DimensionMismatch, "regime tree from t > 0 needs the current regime");
  }
  const int end = visit.back();
  guard_path_count(model.regimes(), end - st.t);

  CovarianceRecursion root(model);
  if (model.is_garch()) {
    for (int s : st.regimes) (void)root.next(s);
  }
  std::vector<int> future;
  std::vector<Matrix> sigmas;
  const int big_n = model.regimes();

  auto recurse = [&](auto&& self, int prev, double prob, const CovarianceRecursion& rec) -> void {
    const int step = st.t + static_cast<int>(future.size());
    if (std::binary_search(visit.begin(), visit.end(), step) && step > st.t) {
      const GaussianLaw law = conditional_law(
          model, build_stacked_system(model, st, future, sigmas, mode), st);
      visit_fn(step, std::span<const int>(future), prob, law);
      ++stats.path_count;
    }
    if (step == end) return;
    for (int s = 0; s < big_n; ++s) {
      const double p = prev < 0 ? model.initial(s) : model.transition(prev, s);
      if (p == 0.0) continue;
      const double child = prob * p;
      if (child < kPruneThreshold) {
        stats.truncation_bound += child;
        continue;
      }
      CovarianceRecursion next = rec;
      future.push_back(s);
      sigmas.push_back(next.next(s));
      self(self, s, child, next);
      future.pop_back();
      sigmas.pop_back();
    }
  };
  recurse(recurse, st.t > 0 ? st.regimes.back() : -1, 1.0, root);
  return stats;
}

}  // namespace maxlink
