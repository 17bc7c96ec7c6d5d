#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>

#include "maxlink/error.hpp"

namespace maxlink {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Diagonal jitter applied to near-singular covariances before factorization.
inline constexpr double kCovarianceJitter = 1e-12;

/// Dense symmetric matrix with checked invariants (square, finite, symmetric to 1e-12 relative).
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw Error(Errc::DimensionMismatch, "symmetric matrix must be square");
    }
    if (!m_.allFinite()) {
      throw Error(Errc::InvalidSpec, "symmetric matrix has non-finite entries");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(Errc::InvalidSpec, "matrix is not symmetric");
    }
  }

  /// Symmetrizes a computed matrix, absorbing rounding asymmetry.
  static SymMatrix symmetrized(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw Error(Errc::DimensionMismatch, "symmetric matrix must be square");
    }
    return SymMatrix(Matrix(0.5 * (m + m.transpose())));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

namespace detail {

// Returns false on a non-positive pivot; `l` is then partially filled.
inline bool try_cholesky(const Matrix& m, Matrix& l) {
  const Eigen::Index n = m.rows();
  l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0)) return false;
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / d;
    }
  }
  return true;
}

}  // namespace detail

/// Lower Cholesky factor L with L Lᵀ = m. Throws NotPositiveDefinite on any pivot <= 0.
inline Matrix cholesky_lower(const SymMatrix& m) {
  Matrix l;
  if (!detail::try_cholesky(m.matrix(), l)) {
    throw Error(Errc::NotPositiveDefinite, "Cholesky pivot is not positive");
  }
  return l;
}

struct CholeskyResult {
  Matrix lower;
  bool regularized = false;
};

/// Cholesky factor that retries once with kCovarianceJitter on the diagonal.
/// Genuinely indefinite matrices still throw NotPositiveDefinite.
inline CholeskyResult cholesky_regularized(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(Errc::DimensionMismatch, "Cholesky of non-square matrix");
  CholeskyResult out;
  if (detail::try_cholesky(m, out.lower)) return out;
  Matrix jittered = m;
  jittered.diagonal().array() += kCovarianceJitter;
  if (!detail::try_cholesky(jittered, out.lower)) {
    throw Error(Errc::NotPositiveDefinite, "matrix is not positive semidefinite");
  }
  out.regularized = true;
  return out;
}

/// Half-vectorization: lower triangle stacked column by column.
inline Vector vech(const SymMatrix& m) {
  const Eigen::Index n = m.dim();
  Vector v(n * (n + 1) / 2);
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) v(pos++) = m(i, j);
  }
  return v;
}

inline Matrix unvech(const Vector& v) {
  const auto len = static_cast<double>(v.size());
  const auto n = static_cast<Eigen::Index>(std::llround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (n * (n + 1) / 2 != v.size()) {
    throw Error(Errc::DimensionMismatch,
                "length " + std::to_string(v.size()) + " is not a triangular number");
  }
  Matrix m(n, n);
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      m(i, j) = v(pos);
      m(j, i) = v(pos);
      ++pos;
    }
  }
  return m;
}

/// Block unit-lower-triangular matrix: identity diagonal blocks plus sparse sub-diagonal blocks.
/// Block (row, lag) sits at block column row - lag.
struct BlockLowerSystem {
  int blocks = 0;
  int block_dim = 0;
  std::map<std::pair<int, int>, Matrix> sub_blocks;

  Eigen::Index size() const { return static_cast<Eigen::Index>(blocks) * block_dim; }

  void set(int row, int lag, Matrix block) {
    if (lag < 1 || lag > row || row >= blocks) {
      throw Error(Errc::DimensionMismatch, "sub-block outside the lower triangle");
    }
    if (block.rows() != block_dim || block.cols() != block_dim) {
      throw Error(Errc::DimensionMismatch, "sub-block has wrong shape");
    }
    sub_blocks[{row, lag}] = std::move(block);
  }
};

/// Forward substitution for Ψ X = rhs, column by column. No inverse is formed.
inline Matrix solve_unit_block_lower(const BlockLowerSystem& sys, const Matrix& rhs) {
  if (rhs.rows() != sys.size()) {
    throw Error(Errc::DimensionMismatch, "right-hand side has " + std::to_string(rhs.rows()) +
                                             " rows, system has " + std::to_string(sys.size()));
  }
  const int d = sys.block_dim;
  Matrix x = rhs;
  // Entries are ordered by (row, lag); rows are processed in increasing order.
  for (int r = 0; r < sys.blocks; ++r) {
    auto it = sys.sub_blocks.lower_bound({r, 0});
    for (; it != sys.sub_blocks.end() && it->first.first == r; ++it) {
      const int c = r - it->first.second;
      x.middleRows(static_cast<Eigen::Index>(r) * d, d).noalias() -=
          it->second * x.middleRows(static_cast<Eigen::Index>(c) * d, d);
    }
  }
  return x;
}

inline Vector solve_unit_block_lower(const BlockLowerSystem& sys, const Vector& rhs) {
  Matrix m = solve_unit_block_lower(sys, Matrix(rhs));
  return m.col(0);
}

/// Ψ x by explicit block multiplication.
inline Vector apply_block_lower(const BlockLowerSystem& sys, const Vector& x) {
  if (x.size() != sys.size()) throw Error(Errc::DimensionMismatch, "vector length mismatch");
  const int d = sys.block_dim;
  Vector out = x;
  for (const auto& [key, block] : sys.sub_blocks) {
    const auto [r, lag] = key;
    out.segment(static_cast<Eigen::Index>(r) * d, d) +=
        block * x.segment(static_cast<Eigen::Index>(r - lag) * d, d);
  }
  return out;
}

inline Matrix to_dense(const BlockLowerSystem& sys) {
  const int d = sys.block_dim;
  Matrix m = Matrix::Identity(sys.size(), sys.size());
  for (const auto& [key, block] : sys.sub_blocks) {
    const auto [r, lag] = key;
    m.block(static_cast<Eigen::Index>(r) * d, static_cast<Eigen::Index>(r - lag) * d, d, d) = block;
  }
  return m;
}

}  // namespace maxlink
