#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace maxlink {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal quantile; arguments are clamped into the open unit interval.
inline double norm_quantile(double p) {
  constexpr double lo = std::numeric_limits<double>::min();
  p = std::clamp(p, lo, 1.0 - std::numeric_limits<double>::epsilon() / 2);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace detail {

// Upper bivariate tail P[X > dh, Y > dk] for standard normals with correlation r.
// Drezner-Wesolowsky with Gauss-Legendre refinements, double precision.
inline double bvn_upper(double dh, double dk, double r) {
  static constexpr double w[3][10] = {
      {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
      {0.4717533638651177e-01, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659,
       0.2334925365383547, 0.2491470458134029},
      {0.1761400713915212e-01, 0.4060142980038694e-01, 0.6267204833410906e-01,
       0.8327674157670475e-01, 0.1019301198172404, 0.1181945319615184, 0.1316886384491766,
       0.1420961093183821, 0.1491729864726037, 0.1527533871307259}};
  static constexpr double x[3][10] = {
      {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
      {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171,
       -0.3678314989981802, -0.1252334085114692},
      {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
       -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
       -0.2277858511416451, -0.7652652113349733e-01}};
  constexpr double twopi = 2.0 * std::numbers::pi;

  int ng = 2;
  int lg = 10;
  if (std::abs(r) < 0.3) {
    ng = 0;
    lg = 3;
  } else if (std::abs(r) < 0.75) {
    ng = 1;
    lg = 6;
  }

  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (x[ng][i] + 1) / 2);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1 - sn * sn));
      sn = std::sin(asr * (-x[ng][i] + 1) / 2);
      bvn += w[ng][i] * std::exp((sn * hk - hs) / (1 - sn * sn));
    }
    return bvn * asr / (2 * twopi) + norm_cdf(-h) * norm_cdf(-k);
  }

  if (r < 0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1) {
    const double as = (1 - r) * (1 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4 - hk) / 8;
    const double d = (12 - hk) / 16;
    bvn = a * std::exp(-(bs / as + hk) / 2) *
          (1 - c * (bs - as) * (1 - d * bs / 5) / 3 + c * d * as * as / 5);
    if (hk > -160) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2) * std::sqrt(twopi) * norm_cdf(-b / a) * b *
             (1 - c * bs * (1 - d * bs / 5) / 3);
    }
    a /= 2;
    for (int i = 0; i < lg; ++i) {
      double xs = (a * (x[ng][i] + 1)) * (a * (x[ng][i] + 1));
      double rs = std::sqrt(1 - xs);
      bvn += a * w[ng][i] *
             (std::exp(-bs / (2 * xs) - hk / (1 + rs)) / rs -
              std::exp(-(bs / xs + hk) / 2) * (1 + c * xs * (1 + d * xs)));
      xs = as * (-x[ng][i] + 1) * (-x[ng][i] + 1) / 4;
      rs = std::sqrt(1 - xs);
      bvn += a * w[ng][i] * std::exp(-(bs / xs + hk) / 2) *
             (std::exp(-hk * (1 - rs) / (2 * (1 + rs))) / rs - (1 + c * xs * (1 + d * xs)));
    }
    bvn = -bvn / twopi;
  }
  if (r > 0) return bvn + norm_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0) {
      bvn += norm_cdf(k) - norm_cdf(h);
    } else {
      bvn += norm_cdf(-h) - norm_cdf(-k);
    }
  }
  return bvn;
}

}  // namespace detail

/// P[X <= h, Y <= k] for standard bivariate normal with correlation r.
inline double bvn_cdf(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == -inf || k == -inf) return 0.0;
  if (h == inf) return norm_cdf(k);
  if (k == inf) return norm_cdf(h);
  r = std::clamp(r, -1.0, 1.0);
  return std::clamp(detail::bvn_upper(-h, -k, r), 0.0, 1.0);
}

}  // namespace maxlink
