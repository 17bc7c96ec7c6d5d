#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace maxlink;
using fixtures::claim;

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

LifeTable immortal_table(int min_age, int len) {
  std::vector<double> q(static_cast<std::size_t>(len), 0.0);
  q.back() = 1.0;
  return LifeTable(min_age, q);
}

ValidatedModel independent_pair(double scale = 1.0) {
  Matrix s(3, 3);
  s << 1e-6, 0, 0, 0, 0.04, 0, 0, 0, 0.09;
  return validate_spec(fixtures::flat_spec(2, 0.02, scale * s));
}

ValidatedModel one_asset(double var) {
  Matrix s(2, 2);
  s << 1e-14, 0, 0, var;
  return validate_spec(fixtures::flat_spec(1, 0.02, s));
}

MarketState observed(const ValidatedModel& m, Vector y) {
  MarketState st;
  st.t = 1;
  st.y.push_back(std::move(y));
  st.regimes.push_back(0);
  (void)m;
  return st;
}

}  // namespace

TEST(CrossMoment, CurrentTimeIsProduct) {
  const auto st = fixtures::r2_state_t1();
  const Vector xb = discounted_prices(fixtures::r2(), st);
  EXPECT_NEAR(cross_moment(fixtures::r2(), st, 0, 1, 1, 1), xb(0) * xb(1), 1e-15);
  EXPECT_NEAR(cross_moment(fixtures::r2(), st, 1, 1, 1, 3), xb(1) * xb(1), 1e-14);
}

TEST(CrossMoment, IndependentAssetsFactor) {
  const auto m = independent_pair();
  const Vector xb = discounted_prices(m, MarketState{});
  EXPECT_NEAR(cross_moment(m, MarketState{}, 0, 3, 1, 2), xb(0) * xb(1), 1e-14);
  EXPECT_NEAR(cross_moment(m, MarketState{}, 0, 2, 0, 3), xb(0) * xb(0) * std::exp(2 * 0.04), 1e-13);
}

TEST(CrossMoment, MatchesMonteCarlo) {
  const auto& m = fixtures::r2();
  const auto st = fixtures::r2_state_t1();
  const double d2 = std::pow(discount_factor(m, st), 2);
  const auto mc = mc_price_many(fixtures::ensemble(m, st, 3, 200000),
                                {[](const PathView& v) { return v.discounted_price(0, 2) * v.discounted_price(1, 3); },
                                 [](const PathView& v) { return v.discounted_price(1, 3) * v.discounted_price(1, 3); }});
  EXPECT_LT(fixtures::z_score(cross_moment(m, st, 0, 2, 1, 3) / d2, mc[0]), 4.0);
  EXPECT_LT(fixtures::z_score(cross_moment(m, st, 1, 3, 1, 3) / d2, mc[1]), 4.0);
}

TEST(CrossMoment, RejectsPastTimes) {
  EXPECT_EQ(error_code([] { cross_moment(fixtures::r2(), fixtures::r2_state_t1(), 0, 0, 1, 2); }),
            Errc::SelectorOutOfWindow);
}

TEST(Omega, ScalarLognormal) {
  const auto m = one_asset(0.04);
  const auto st = observed(m, (Vector(2) << 0.02, 0.4).finished());
  const double xb = discounted_prices(m, st)(0);
  EXPECT_NEAR(omega(m, st)(0, 0), xb * xb * std::expm1(0.04), 1e-14);
}

TEST(Omega, VanishesWithVolatility) {
  const auto m = one_asset(1e-14);
  EXPECT_LT(omega(m, MarketState{})(0, 0), 1e-13);
}

TEST(Omega, PositiveSemidefiniteAndMatchesMonteCarlo) {
  const auto& m = fixtures::r2();
  for (const auto& st : {MarketState{}, fixtures::r2_state_t1()}) {
    const Matrix om = omega(m, st);
    EXPECT_EQ(om, om.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(om);
    EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
    const Vector x = discounted_prices(m, st) / discount_factor(m, st);
    const int t1 = st.t + 1;
    const auto mc = mc_reduce(fixtures::ensemble(m, st, t1, 200000), 3, [&](const PathView& v, double* out) {
      const double a = v.discounted_price(0, t1) - x(0);
      const double b = v.discounted_price(1, t1) - x(1);
      out[0] = a * a;
      out[1] = a * b;
      out[2] = b * b;
    });
    const double d2 = std::pow(discount_factor(m, st), 2);
    EXPECT_LT(fixtures::z_score(om(0, 0) / d2, mc[0]), 4.0);
    EXPECT_LT(fixtures::z_score(om(0, 1) / d2, mc[1]), 4.0);
    EXPECT_LT(fixtures::z_score(om(1, 1) / d2, mc[2]), 4.0);
  }
}

TEST(RVector, ZeroGuaranteeSegregatedIsZero) {
  const Vector r = sum_insured_cross_expectation(fixtures::r2(), MarketState{}, claim(2, 0.0),
                                                 SumInsuredKind::Segregated);
  EXPECT_EQ(r, Vector::Zero(2));
}

TEST(RVector, MatchesMonteCarlo) {
  const auto& m = fixtures::r2();
  const auto c = claim(2, 1.05);
  const Vector rs = sum_insured_cross_expectation(m, MarketState{}, c, SumInsuredKind::Segregated);
  const Vector ru = sum_insured_cross_expectation(m, MarketState{}, c, SumInsuredKind::UnitLinked);
  const auto put = option_payoff(c, OptionKind::Put);
  const auto mc = mc_reduce(fixtures::ensemble(m, MarketState{}, 2, 300000), 4, [&](const PathView& v, double* out) {
    const double qs = put(v);
    const double qu = v.discount(2) * std::max(path_max(v, c), c.guarantee);
    for (int j = 0; j < 2; ++j) {
      out[j] = qs * v.discounted_price(j, 1);
      out[2 + j] = qu * v.discounted_price(j, 1);
    }
  });
  for (int j = 0; j < 2; ++j) {
    EXPECT_LT(fixtures::z_score(rs(j), mc[j]), 4.0) << j << " " << rs(j) << " " << mc[j].mean;
    EXPECT_LT(fixtures::z_score(ru(j), mc[2 + j]), 4.0) << j << " " << ru(j) << " " << mc[2 + j].mean;
  }
}

TEST(Lambda, ImmortalTermProductsVanish) {
  const auto table = immortal_table(60, 5);
  for (auto kind : {ProductKind::SegregatedTerm, ProductKind::UnitLinkedTerm}) {
    const auto p = fixtures::r2_product(kind, 0, 3);
    const double v = premium(p, fixtures::r2(), MarketState{}, table).value;
    EXPECT_EQ(v, 0.0);
    EXPECT_EQ(lambda_vector(p, fixtures::r2(), MarketState{}, table, {}, v), Vector::Zero(2));
  }
}

TEST(Lambda, ZeroGuaranteeSegregatedVanishes) {
  auto p = fixtures::r2_product(ProductKind::SegregatedEndowment, 0, 2);
  for (auto& c : p.claims) c.guarantee = 0.0;
  const auto rep = hedge(p, fixtures::r2(), MarketState{}, fixtures::table3());
  EXPECT_EQ(rep.lambda, Vector::Zero(2));
  EXPECT_EQ(rep.position.h, Vector::Zero(2));
  EXPECT_EQ(rep.position.h0, 0.0);
}

TEST(Lambda, MatchesMonteCarloCovariance) {
  const auto& m = fixtures::r2();
  const auto st = fixtures::r2_state_t1();
  const double d2 = std::pow(discount_factor(m, st), 2);
  const Vector x = asset_prices(m, st);
  for (auto kind : {ProductKind::SegregatedTerm, ProductKind::UnitLinkedEndowment}) {
    const auto p = fixtures::r2_product(kind, 1, 2);
    const double v = premium(p, m, st, fixtures::table3()).value;
    const Vector lam = lambda_vector(p, m, st, fixtures::table3(), {}, v);
    const auto next = analytic_next_value(p, m, fixtures::table3(), {});
    const auto mc = mc_reduce(fixtures::ensemble(m, st, 2, 200000), 2, [&](const PathView& pv, double* out) {
      const double nv = next(pv);
      for (int j = 0; j < 2; ++j) out[j] = nv * (pv.discounted_price(j, 2) - x(j));
    });
    for (int j = 0; j < 2; ++j) EXPECT_LT(fixtures::z_score(lam(j) / d2, mc[j]), 4.0) << to_string(kind) << j;
  }
}

TEST(Strategy, ZeroLambdaHoldsCash) {
  Matrix om(2, 2);
  om << 2.0, 0.3, 0.3, 1.0;
  const auto pos = strategy(om, Vector::Zero(2), 1.25, Vector::Ones(2));
  EXPECT_EQ(pos.h, Vector::Zero(2));
  EXPECT_EQ(pos.h0, 1.25);
}

TEST(Strategy, ScalarRatio) {
  const auto pos = strategy(Matrix::Constant(1, 1, 0.5), Vector::Constant(1, 0.2), 1.0, Vector::Constant(1, 2.0));
  EXPECT_NEAR(pos.h(0), 0.4, 1e-15);
}

TEST(Strategy, ValueIdentityIsBitExact) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 4;
    const Matrix om = fixtures::random_spd(d, rng);
    Vector lam(d), x(d);
    for (int i = 0; i < d; ++i) {
      lam(i) = u(rng);
      x(i) = std::exp(u(rng));
    }
    const double value = std::exp(u(rng));
    const auto pos = strategy(om, lam, value, x);
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += pos.h(i) * x(i);
    // Exact equality is reachable whenever the cash leg is no larger than the value.
    if (std::abs(pos.h0) <= std::abs(value)) {
      EXPECT_TRUE(value_identity_holds(pos, x));
    } else {
      EXPECT_LE(std::abs(dot + pos.h0 - value), std::abs(pos.h0) * 0x1.0p-52);
    }
    EXPECT_LT((om * pos.h - lam).norm(), 1e-10 * (1.0 + lam.norm()));
  }
}

TEST(Strategy, SingularOmegaFallsBack) {
  Matrix om(2, 2);
  om << 1.0, 1.0, 1.0, 1.0;
  const auto pos = strategy(om, Vector::Ones(2), 1.0, Vector::Ones(2));
  EXPECT_TRUE(pos.singular_omega);
  EXPECT_NEAR(pos.h(0), 0.5, 1e-12);
  EXPECT_TRUE(value_identity_holds(pos, Vector::Ones(2)));
  EXPECT_EQ(error_code([] { strategy(Matrix::Identity(2, 2), Vector::Ones(3), 1.0, Vector::Ones(2)); }),
            Errc::DimensionMismatch);
}

TEST(Hedge, LinearClaimIsReplicatedByTheAsset) {
  // An immortal unit-linked endowment with no guarantee pays w x_T: hold w units.
  const auto table = immortal_table(60, 5);
  for (double scale : {0.25, 1.0, 4.0}) {
    const auto m = one_asset(0.04 * scale);
    ProductSpec p;
    p.kind = ProductKind::UnitLinkedEndowment;
    p.x = 60;
    p.T = 3;
    for (int k = 1; k <= 3; ++k) p.claims.push_back(MaxClaim{k, Vector::Constant(1, 1.5), 0.0});
    const auto rep = hedge(p, m, MarketState{}, table);
    EXPECT_NEAR(rep.premium, 1.5, 1e-12);
    EXPECT_NEAR(rep.position.h(0), 1.5, 1e-9) << scale;
    EXPECT_NEAR(rep.position.h0, 0.0, 1e-9);
  }
}

TEST(Hedge, SensitivityGrowsWithGuarantee) {
  const auto& m = fixtures::r2();
  auto lo = fixtures::r2_product(ProductKind::SegregatedEndowment, 0, 2);
  auto hi = lo;
  for (auto& c : hi.claims) c.guarantee *= 1.3;
  const Vector hl = hedge(lo, m, MarketState{}, fixtures::table3()).position.h;
  const Vector hh = hedge(hi, m, MarketState{}, fixtures::table3()).position.h;
  EXPECT_LT(hl.sum(), 0.0);
  EXPECT_LT(hh.sum(), hl.sum());
}

TEST(Hedge, ResidualOrthogonalToAssetMoves) {
  const auto& m = fixtures::r2();
  for (auto kind : kAllProducts) {
    const auto p = fixtures::r2_product(kind, 0, 2);
    const auto rep = hedge(p, m, MarketState{}, fixtures::table3());
    const auto& pos = rep.position;
    const double dot = pos.h.dot(asset_prices(m, MarketState{}));
    if (std::abs(pos.h0) <= std::abs(pos.V)) {
      EXPECT_TRUE(value_identity_holds(pos, asset_prices(m, MarketState{})));
    } else {
      EXPECT_LE(std::abs(dot + pos.h0 - pos.V), std::abs(pos.h0) * 0x1.0p-51);
    }
    const auto ens = fixtures::ensemble(m, MarketState{}, 2, 20000);
    const auto next = analytic_next_value(p, m, fixtures::table3(), {});
    const auto res = mc_hedge_residual(ens, rep.position.h, rep.premium, next);
    for (const auto& r : res) EXPECT_LT(std::abs(r.mean), 4.0 * r.std_error) << to_string(kind);
  }
}

TEST(Hedge, DiscountedLedgerScalesCash) {
  const auto& m = fixtures::r2();
  const auto st = fixtures::r2_state_t1();
  const auto p = fixtures::r2_product(ProductKind::UnitLinkedEndowment, 1, 2);
  const auto a = hedge(p, m, st, fixtures::table3());
  const auto b = hedge(p, m, st, fixtures::table3(), {}, {}, true);
  EXPECT_EQ(a.position.h, b.position.h);
  EXPECT_NEAR(b.position.h0, discount_factor(m, st) * a.position.h0, 1e-12);
  EXPECT_TRUE(value_identity_holds(b.position, discounted_prices(m, st)));
}
