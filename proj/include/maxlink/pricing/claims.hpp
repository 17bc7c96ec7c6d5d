#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "maxlink/error.hpp"
#include "maxlink/numerics/linalg.hpp"

namespace maxlink {

/// M_k = max_i w_{i,k} x_{i,k} against guarantee G_k at maturity k.
struct MaxClaim {
  int k = 1;
  Vector weights;
  double guarantee = 0.0;
};

inline void check_claim(const MaxClaim& c, int n_x) {
  if (c.weights.size() != n_x) {
    throw Error(Errc::DimensionMismatch, "claim needs one weight per asset");
  }
  for (Eigen::Index i = 0; i < c.weights.size(); ++i) {
    if (!(c.weights(i) > 0.0) || !std::isfinite(c.weights(i))) {
      throw Error(Errc::InvalidSpec, "claim weights must be positive");
    }
  }
  if (!(c.guarantee >= 0.0) || !std::isfinite(c.guarantee)) {
    throw Error(Errc::InvalidSpec, "guarantee must be nonnegative");
  }
}

enum class OptionKind { Call, Put, Forward };

/// {L x̃_k ≤ b}: asset i attains the maximum (and the call/put is in the money).
struct EventGeometry {
  int i = 0;
  OptionKind kind = OptionKind::Call;
  Matrix L;
  Vector b;
};

/// Rows x̃_j - x̃_i ≤ ln(w_i/w_j) for j ≠ i, then -x̃_i ≤ ln(w_i/G) (call) or
/// x̃_i ≤ ln(G/w_i) (put). Forward events keep the comparison rows only.
inline EventGeometry event_geometry(const MaxClaim& claim, int i, OptionKind kind) {
  const auto nx = static_cast<int>(claim.weights.size());
  if (i < 0 || i >= nx) throw Error(Errc::DimensionMismatch, "asset index out of range");
  if (kind == OptionKind::Call && claim.guarantee <= 0.0) {
    throw Error(Errc::GuaranteeZeroInCall, "call on maximum needs G > 0; use forward_max");
  }
  const int rows = kind == OptionKind::Forward ? nx - 1 : nx;
  EventGeometry g;
  g.i = i;
  g.kind = kind;
  g.L = Matrix::Zero(rows, nx);
  g.b = Vector::Zero(rows);
  int r = 0;
  for (int j = 0; j < nx; ++j) {
    if (j == i) continue;
    g.L(r, j) = 1.0;
    g.L(r, i) = -1.0;
    g.b(r) = std::log(claim.weights(i) / claim.weights(j));
    ++r;
  }
  const double wi = claim.weights(i);
  if (kind == OptionKind::Call) {
    g.L(r, i) = -1.0;
    g.b(r) = std::log(wi / claim.guarantee);
  } else if (kind == OptionKind::Put) {
    g.L(r, i) = 1.0;
    g.b(r) = claim.guarantee > 0.0 ? std::log(claim.guarantee / wi)
                                   : -std::numeric_limits<double>::infinity();
  }
  return g;
}

}  // namespace maxlink
