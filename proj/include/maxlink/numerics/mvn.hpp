#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/numerics/linalg.hpp"
#include "maxlink/numerics/normal.hpp"

namespace maxlink {

/// P[Z <= upper] for Z ~ Normal(mean, cov), to absolute accuracy `tol`.
struct OrthantQuery {
  Vector upper;
  Vector mean;
  Matrix cov;
  double tol = 1e-6;
};

struct MvnOptions {
  // Use the lattice rule even where a closed form exists (dimension 1 and 2).
  bool force_qmc = false;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  int shifts = 12;
  std::size_t max_points = std::size_t{1} << 18;
};

struct MvnResult {
  double value = 0.0;
  // Three standard errors over the random shifts; zero for closed forms.
  double error = 0.0;
  bool regularized = false;
  std::size_t evaluations = 0;
};

namespace detail {

inline constexpr std::array<int, 12> kLatticePrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Cholesky factor with Genz-Bretz variable prioritization: at each stage the
// coordinate with the smallest conditional probability goes first.
struct PrioritizedFactor {
  Matrix c;
  Vector b;
};

inline PrioritizedFactor prioritize(Matrix s, Vector b) {
  const Eigen::Index d = b.size();
  Matrix c = Matrix::Zero(d, d);
  Vector y = Vector::Zero(d);
  constexpr double tiny = 1e-300;
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index best = i;
    double best_prob = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = i; j < d; ++j) {
      double var = s(j, j);
      double shift = 0.0;
      for (Eigen::Index l = 0; l < i; ++l) {
        var -= c(j, l) * c(j, l);
        shift += c(j, l) * y(l);
      }
      const double sd = std::sqrt(std::max(var, tiny));
      const double prob = norm_cdf((b(j) - shift) / sd);
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      s.row(i).swap(s.row(best));
      s.col(i).swap(s.col(best));
      c.row(i).swap(c.row(best));
      std::swap(b(i), b(best));
    }
    double var = s(i, i);
    double shift = 0.0;
    for (Eigen::Index l = 0; l < i; ++l) {
      var -= c(i, l) * c(i, l);
      shift += c(i, l) * y(l);
    }
    const double cii = std::sqrt(std::max(var, tiny));
    c(i, i) = cii;
    for (Eigen::Index r = i + 1; r < d; ++r) {
      double v = s(r, i);
      for (Eigen::Index l = 0; l < i; ++l) v -= c(r, l) * c(i, l);
      c(r, i) = v / cii;
    }
    const double z = (b(i) - shift) / cii;
    const double p = norm_cdf(z);
    y(i) = p > 1e-300 ? -norm_pdf(z) / p : z;
  }
  return {std::move(c), std::move(b)};
}

// Separation-of-variables integrand on [0,1]^(d-1).
inline double sov_integrand(const PrioritizedFactor& f, const double* w, double* scratch) {
  const Eigen::Index d = f.b.size();
  double e = norm_cdf(f.b(0) / f.c(0, 0));
  double value = e;
  for (Eigen::Index i = 1; i < d; ++i) {
    if (value == 0.0) return 0.0;
    scratch[i - 1] = norm_quantile(w[i - 1] * e);
    double s = 0.0;
    for (Eigen::Index l = 0; l < i; ++l) s += f.c(i, l) * scratch[l];
    e = norm_cdf((f.b(i) - s) / f.c(i, i));
    value *= e;
  }
  return value;
}

// Randomized Richtmyer lattice with baker's transform and antithetic pairs.
inline MvnResult lattice_estimate(const PrioritizedFactor& f, double tol, const MvnOptions& opt) {
  const auto d = static_cast<std::size_t>(f.b.size());
  const std::size_t dims = d - 1;
  if (dims > kLatticePrimes.size()) {
    throw Error(Errc::DimensionMismatch, "dimension above supported maximum");
  }
  std::vector<double> q(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    const double r = std::sqrt(static_cast<double>(kLatticePrimes[k]));
    q[k] = r - std::floor(r);
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto shifts = static_cast<std::size_t>(opt.shifts);
  std::vector<double> u(shifts * dims);
  for (auto& v : u) v = unif(rng);

  std::vector<double> w(dims), wa(dims), scratch(d);
  std::vector<double> sums(shifts, 0.0), estimates(shifts);
  MvnResult out;
  // Lattice points 1..N are a prefix of 1..2N, so each doubling only adds the new half.
  std::size_t done = 0;
  for (std::size_t points = 512;; points *= 2) {
    for (std::size_t s = 0; s < shifts; ++s) {
      double acc = 0.0;
      for (std::size_t j = done + 1; j <= points; ++j) {
        for (std::size_t k = 0; k < dims; ++k) {
          double x = static_cast<double>(j) * q[k] + u[s * dims + k];
          x -= std::floor(x);
          x = std::abs(2.0 * x - 1.0);
          w[k] = x;
          wa[k] = 1.0 - x;
        }
        acc += 0.5 * (sov_integrand(f, w.data(), scratch.data()) +
                      sov_integrand(f, wa.data(), scratch.data()));
      }
      sums[s] += acc;
      estimates[s] = sums[s] / static_cast<double>(points);
    }
    out.evaluations = 2 * points * shifts;
    done = points;
    const double mean =
        std::accumulate(estimates.begin(), estimates.end(), 0.0) / static_cast<double>(shifts);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    const double se = std::sqrt(ss / static_cast<double>(shifts * (shifts - 1)));
    out.value = mean;
    out.error = 3.0 * se;
    if (out.error <= tol || points >= opt.max_points) break;
  }
  return out;
}

}  // namespace detail

/// Multivariate normal CDF. Dimension 1 uses Φ, dimension 2 the bivariate
/// Drezner-Wesolowsky-Genz formula, higher dimensions a randomized
/// quasi-Monte-Carlo separation-of-variables rule with a fixed seed.
/// Coordinates with +inf upper limits are marginalized out exactly.
inline MvnResult mvn_cdf(const OrthantQuery& q, const MvnOptions& opt = {}) {
  const Eigen::Index dim = q.upper.size();
  if (q.mean.size() != dim || q.cov.rows() != dim || q.cov.cols() != dim) {
    throw Error(Errc::DimensionMismatch, "orthant query dimensions disagree");
  }
  if (!(q.tol > 0.0 && q.tol <= 1e-2)) {
    throw Error(Errc::InvalidSpec, "mvn tolerance must lie in (0, 1e-2]");
  }
  if (dim > 10) throw Error(Errc::DimensionMismatch, "mvn_cdf supports at most 10 dimensions");

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::isnan(q.upper(i)) || std::isnan(q.mean(i))) {
      throw Error(Errc::InvalidSpec, "NaN in orthant query");
    }
    if (q.upper(i) == -std::numeric_limits<double>::infinity()) return {};
    if (q.upper(i) != std::numeric_limits<double>::infinity()) keep.push_back(i);
  }
  const auto d = static_cast<Eigen::Index>(keep.size());
  MvnResult out;
  if (d == 0) {
    out.value = 1.0;
    return out;
  }
  Vector b(d);
  Matrix s(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    b(i) = q.upper(keep[i]) - q.mean(keep[i]);
    for (Eigen::Index j = 0; j < d; ++j) s(i, j) = q.cov(keep[i], keep[j]);
  }
  s = 0.5 * (s + s.transpose()).eval();
  out.regularized = cholesky_regularized(s).regularized;
  if (out.regularized) s.diagonal().array() += kCovarianceJitter;

  if (d == 1 && !opt.force_qmc) {
    out.value = norm_cdf(b(0) / std::sqrt(s(0, 0)));
    return out;
  }
  if (d == 2 && !opt.force_qmc) {
    const double s0 = std::sqrt(s(0, 0));
    const double s1 = std::sqrt(s(1, 1));
    out.value = bvn_cdf(b(0) / s0, b(1) / s1, s(0, 1) / (s0 * s1));
    return out;
  }
  if (d == 1) {
    // A one-dimensional lattice has no free variables; the SOV integrand is exact.
    out.value = norm_cdf(b(0) / std::sqrt(s(0, 0)));
    return out;
  }
  const auto factor = detail::prioritize(std::move(s), std::move(b));
  const bool flag = out.regularized;
  out = detail::lattice_estimate(factor, q.tol, opt);
  out.regularized = flag;
  out.value = std::clamp(out.value, 0.0, 1.0);
  return out;
}

}  // namespace maxlink
