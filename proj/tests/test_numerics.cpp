#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"

using namespace maxlink;

namespace {

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::ParseError;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(Cholesky, IdentityIsItsOwnFactor) {
  EXPECT_TRUE(cholesky_lower(SymMatrix(Matrix::Identity(2, 2))).isApprox(Matrix::Identity(2, 2)));
}

TEST(Cholesky, TwoByTwoClosedForm) {
  const Matrix l = cholesky_lower(SymMatrix(mat2(4, 2, 2, 5)));
  EXPECT_TRUE(l.isApprox(mat2(2, 0, 1, 2), 1e-14));
}

TEST(Cholesky, NegativePivotRejected) {
  EXPECT_EQ(error_code([] { cholesky_lower(SymMatrix(mat2(1, 2, 2, 1))); }), Errc::NotPositiveDefinite);
}

TEST(Cholesky, RoundTripOnRandomLowerFactors) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> pos(0.2, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 6;
    Matrix l = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < i; ++j) l(i, j) = z(rng);
      l(i, i) = pos(rng);
    }
    const Matrix back = cholesky_lower(SymMatrix::symmetrized(l * l.transpose()));
    EXPECT_LE((back - l).norm(), 1e-8 * l.norm()) << "trial " << trial;
  }
}

TEST(Cholesky, ReconstructsInput) {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 6; ++d) {
    const Matrix m = fixtures::random_spd(d, rng);
    const Matrix l = cholesky_lower(SymMatrix(m));
    EXPECT_LE((l * l.transpose() - m).norm(), 1e-10 * m.norm());
    EXPECT_TRUE(l.isLowerTriangular());
    EXPECT_GT(l.diagonal().minCoeff(), 0.0);
  }
}

TEST(Cholesky, RegularizedFlagsSingularInput) {
  const auto r = cholesky_regularized(mat2(1, 1, 1, 1));
  EXPECT_TRUE(r.regularized);
  EXPECT_FALSE(cholesky_regularized(Matrix::Identity(3, 3)).regularized);
  EXPECT_EQ(error_code([] { cholesky_regularized(mat2(1, 2, 2, 1)); }), Errc::NotPositiveDefinite);
}

TEST(SymMatrixType, RejectsAsymmetryAndNonSquare) {
  EXPECT_EQ(error_code([] { SymMatrix(mat2(1, 0.5, 0.4, 1)); }), Errc::InvalidSpec);
  EXPECT_EQ(error_code([] { SymMatrix(Matrix::Zero(2, 3)); }), Errc::DimensionMismatch);
}

TEST(Vech, ColumnStackedLowerTriangle) {
  const Vector v = vech(SymMatrix(mat2(1, 2, 2, 3)));
  ASSERT_EQ(v.size(), 3);
  EXPECT_EQ(v(0), 1);
  EXPECT_EQ(v(1), 2);
  EXPECT_EQ(v(2), 3);
}

TEST(Vech, ThreeByThreeOrdering) {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  Vector expect(6);
  expect << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(vech(SymMatrix(m)), expect);
}

TEST(Vech, RoundTripRandom) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = fixtures::random_spd(3, rng);
    const SymMatrix s = SymMatrix::symmetrized(m);
    EXPECT_EQ(unvech(vech(s)), s.matrix());
  }
}

TEST(Vech, NonTriangularLengthRejected) {
  EXPECT_EQ(error_code([] { unvech(Vector::Zero(4)); }), Errc::DimensionMismatch);
}

TEST(BlockLower, IdentityWithoutSubBlocks) {
  BlockLowerSystem sys{3, 2, {}};
  Vector rhs(6);
  rhs << 1, -2, 3, 0.5, 7, -1;
  EXPECT_EQ(solve_unit_block_lower(sys, rhs), rhs);
}

TEST(BlockLower, ChainMatchesDenseSolve) {
  Matrix a(2, 2);
  a << 0.5, 0.2, -0.3, 0.9;
  BlockLowerSystem sys{3, 2, {}};
  sys.set(1, 1, -a);
  sys.set(2, 1, -a);
  Vector rhs(6);
  rhs << 1, 2, 3, 4, 5, 6;
  const Vector x = solve_unit_block_lower(sys, rhs);
  const Vector dense = to_dense(sys).partialPivLu().solve(rhs);
  EXPECT_LE((x - dense).norm(), 1e-12);
  // Hand recursion: x1 = r1, x_m = r_m + A x_{m-1}.
  Vector x1 = rhs.segment(0, 2);
  Vector x2 = rhs.segment(2, 2) + a * x1;
  Vector x3 = rhs.segment(4, 2) + a * x2;
  EXPECT_LE((x.segment(4, 2) - x3).norm(), 1e-14);
}

TEST(BlockLower, WrongLengthRejected) {
  BlockLowerSystem sys{2, 2, {}};
  EXPECT_EQ(error_code([&] { solve_unit_block_lower(sys, Vector(Vector::Zero(3))); }), Errc::DimensionMismatch);
  EXPECT_EQ(error_code([&] { sys.set(0, 1, Matrix::Zero(2, 2)); }), Errc::DimensionMismatch);
}

TEST(BlockLower, SolveThenMultiplyReproducesRhs) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int blocks = 2 + trial % 4;
    const int d = 1 + trial % 3;
    BlockLowerSystem sys{blocks, d, {}};
    for (int r = 1; r < blocks; ++r) {
      for (int lag = 1; lag <= std::min(r, 2); ++lag) {
        Matrix b(d, d);
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) b(i, j) = 0.4 * z(rng);
        }
        sys.set(r, lag, b);
      }
    }
    Vector rhs(sys.size());
    for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = z(rng);
    const Vector back = apply_block_lower(sys, solve_unit_block_lower(sys, rhs));
    EXPECT_LE((back - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
  }
}

TEST(Normal, CdfAndQuantileAgree) {
  EXPECT_DOUBLE_EQ(norm_cdf(0.0), 0.5);
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.975, 1 - 1e-8}) {
    EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-13 + 1e-12 * p);
  }
}

TEST(Mvn, OneDimensionalSymmetry) {
  const auto r = mvn_cdf({Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1)});
  EXPECT_NEAR(r.value, 0.5, 1e-6);
}

TEST(Mvn, IndependentQuadrant) {
  const auto r = mvn_cdf({Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2)});
  EXPECT_NEAR(r.value, 0.25, 1e-6);
}

TEST(Mvn, CorrelatedQuadrant) {
  const auto r = mvn_cdf({Vector::Zero(2), Vector::Zero(2), mat2(1, 0.5, 0.5, 1)});
  EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-6);
}

TEST(Mvn, QuadrantFormulaAcrossCorrelations) {
  for (double rho : {-0.999, -0.9, -0.5, 0.0, 0.3, 0.8, 0.999}) {
    const auto r = mvn_cdf({Vector::Zero(2), Vector::Zero(2), mat2(1, rho, rho, 1)});
    EXPECT_NEAR(r.value, 0.25 + std::asin(rho) / (2 * std::numbers::pi), 1e-10) << rho;
  }
}

TEST(Mvn, TrivariateOrthantByQuasiMonteCarlo) {
  // P[Z <= 0] for equicorrelated Z is 1/8 + 3 asin(rho) / (4 pi).
  for (double rho : {-0.3, 0.2, 0.5, 0.9}) {
    Matrix c = Matrix::Constant(3, 3, rho);
    c.diagonal().setOnes();
    const auto r = mvn_cdf({Vector::Zero(3), Vector::Zero(3), c, 1e-6});
    EXPECT_NEAR(r.value, 0.125 + 3 * std::asin(rho) / (4 * std::numbers::pi), 1e-6) << rho;
  }
}

TEST(Mvn, FourDimensionalOrthantByQuasiMonteCarlo) {
  // Equicorrelation 1/2: P = 1/5.
  Matrix c = Matrix::Constant(4, 4, 0.5);
  c.diagonal().setOnes();
  const auto r = mvn_cdf({Vector::Zero(4), Vector::Zero(4), c, 1e-6});
  EXPECT_NEAR(r.value, 0.2, 1e-6);
}

TEST(Mvn, ForcedLatticeMatchesBivariateFormula) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  MvnOptions qmc;
  qmc.force_qmc = true;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix c = fixtures::random_spd(2, rng);
    Vector up(2), mu(2);
    up << z(rng), z(rng);
    mu << 0.3 * z(rng), 0.3 * z(rng);
    const double exact = mvn_cdf({up, mu, c}).value;
    EXPECT_NEAR(mvn_cdf({up, mu, c, 1e-6}, qmc).value, exact, 2e-6) << trial;
  }
}

TEST(Mvn, DeterministicForFixedSeed) {
  std::mt19937_64 rng(23);
  const Matrix c = fixtures::random_spd(4, rng);
  Vector up(4);
  up << 0.1, -0.2, 0.5, 1.0;
  const OrthantQuery q{up, Vector::Zero(4), c, 1e-5};
  EXPECT_EQ(mvn_cdf(q).value, mvn_cdf(q).value);
}

TEST(Mvn, MonotoneInEachUpperLimit) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> step(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 3;
    const Matrix c = fixtures::random_spd(d, rng);
    Vector up(d), mu(d);
    for (int i = 0; i < d; ++i) {
      up(i) = z(rng);
      mu(i) = 0.5 * z(rng);
    }
    const double tol = 1e-5;
    const double base = mvn_cdf({up, mu, c, tol}).value;
    const int coord = trial % d;
    Vector up2 = up;
    up2(coord) += step(rng);
    const double bumped = mvn_cdf({up2, mu, c, tol}).value;
    EXPECT_GE(bumped, base - 2 * tol) << "trial " << trial;
  }
}

TEST(Mvn, Limits) {
  std::mt19937_64 rng(31);
  const double inf = std::numeric_limits<double>::infinity();
  for (int d = 1; d <= 4; ++d) {
    const Matrix c = fixtures::random_spd(d, rng);
    const auto all = mvn_cdf({Vector::Constant(d, inf), Vector::Zero(d), c});
    EXPECT_NEAR(all.value, 1.0, 1e-6);
    const auto big = mvn_cdf({Vector::Constant(d, 60.0), Vector::Zero(d), c, 1e-6});
    EXPECT_NEAR(big.value, 1.0, 1e-6);
    Vector low = Vector::Constant(d, 1.0);
    low(d - 1) = -inf;
    EXPECT_EQ(mvn_cdf({low, Vector::Zero(d), c}).value, 0.0);
    low(d - 1) = -60.0;
    EXPECT_NEAR(mvn_cdf({low, Vector::Zero(d), c, 1e-6}).value, 0.0, 1e-6);
  }
}

TEST(Mvn, InfiniteCoordinatesMarginalizeExactly) {
  Matrix c(3, 3);
  c << 1, 0.5, 0.2, 0.5, 1, 0.1, 0.2, 0.1, 1;
  Vector up(3);
  up << 0.0, std::numeric_limits<double>::infinity(), 0.0;
  const auto r = mvn_cdf({up, Vector::Zero(3), c});
  EXPECT_NEAR(r.value, 0.25 + std::asin(0.2) / (2 * std::numbers::pi), 1e-12);
}

TEST(Mvn, ErrorsOnBadInput) {
  EXPECT_EQ(error_code([] { mvn_cdf({Vector::Zero(2), Vector::Zero(3), Matrix::Identity(2, 2)}); }),
            Errc::DimensionMismatch);
  EXPECT_EQ(error_code([] { mvn_cdf({Vector::Zero(2), Vector::Zero(2), mat2(1, 2, 2, 1)}); }),
            Errc::NotPositiveDefinite);
}

TEST(Mvn, SingularCovarianceIsRegularizedAndFlagged) {
  const auto r = mvn_cdf({Vector::Zero(2), Vector::Zero(2), mat2(1, 1, 1, 1)});
  EXPECT_TRUE(r.regularized);
  EXPECT_NEAR(r.value, 0.5, 1e-4);
}
