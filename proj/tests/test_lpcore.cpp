#include "lpq/lpcore.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lpq;

namespace {

// ||m|| from L_p(w_in) to L_p(w_out) by random search.
double searched_operator_norm(const Mat& m, const Vec& w_in, const Vec& w_out, double p,
                              unsigned seed = 3)
{
  return oracle::maximize(
      static_cast<int>(m.cols()),
      [&](const Vec& x) {
        const double d = oracle::weighted_p_norm(x, w_in, p);
        return d > 0 ? oracle::weighted_p_norm(m * x, w_out, p) / d : 0.0;
      },
      seed, 60, 300);
}

} // namespace

TEST(LpCore, NormValues)
{
  auto x = MeasureSpace::unit_atoms(2);
  EXPECT_NEAR(LpVector(x, 2.0, Vec::Unit(2, 0)).norm(), 1.0, 1e-15);
  EXPECT_NEAR(lp_norm(LpVector(x, 2.0, (Vec(2) << 3, 4).finished())), 5.0, 1e-12);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const LpVector v(x, 1.5, gaussian_vec(rng, 2));
    const double lam = gaussian_vec(rng, 1)(0);
    EXPECT_NEAR((v * lam).norm(), std::abs(lam) * v.norm(), 1e-12);
  }
}

TEST(LpCore, NormMatchesOracleOnWeightedSpaces)
{
  auto x = MeasureSpace::make({{"a", 0.2}, {"b", 1.3}}, 3, 0.4);
  Rng rng(9);
  for (double p : {1.0, 1.5, 2.0, 3.0, 7.0})
    for (int t = 0; t < 20; ++t) {
      const Vec c = gaussian_vec(rng, 5);
      EXPECT_NEAR(LpVector(x, p, c).norm(), oracle::weighted_p_norm(c, x->weights(), p), 1e-12);
      EXPECT_NEAR(LpFunctional(x, p, c).norm(), oracle::weighted_q_norm(c, x->weights(), p),
                  1e-12);
    }
}

TEST(LpCore, Holder)
{
  auto x = MeasureSpace::make({{"a", 0.7}}, 4, 0.3);
  Rng rng(17);
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (int t = 0; t < 1000; ++t) {
      const LpVector v(x, p, gaussian_vec(rng, 5));
      const LpFunctional f(x, p, gaussian_vec(rng, 5));
      EXPECT_LE(std::abs(f(v)), f.norm() * v.norm() + 1e-9);
    }
}

TEST(LpCore, OperatorNormIdentityAndPermutation)
{
  auto x = MeasureSpace::unit_atoms(4, 0.5);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    auto id = operator_norm(LpOperator::identity(x), p);
    EXPECT_NEAR(id.lower, 1.0, 1e-12);
    EXPECT_NEAR(id.upper, 1.0, 1e-12);
    Mat perm = Mat::Zero(4, 4);
    perm(1, 0) = perm(2, 1) = perm(3, 2) = perm(0, 3) = 1.0;
    auto pe = operator_norm(LpOperator(x, perm), p);
    EXPECT_NEAR(pe.lower, 1.0, 1e-9);
    EXPECT_NEAR(pe.upper, 1.0, 1e-9);
  }
}

TEST(LpCore, OperatorNormClosedFormsAtOneAndTwo)
{
  auto dom = MeasureSpace::from_weights((Vec(3) << 0.5, 1.0, 2.0).finished());
  auto cod = MeasureSpace::from_weights((Vec(4) << 0.25, 1.0, 3.0, 1.5).finished());
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const Mat m = gaussian_mat(rng, 4, 3);
    const LpOperator a(dom, cod, m);
    // p = 1: max over columns of sum_i w_out_i |m_ij| / w_in_j
    double col = 0.0;
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i)
        s += cod->weight(i) * std::abs(m(i, j));
      col = std::max(col, s / dom->weight(j));
    }
    auto e1 = operator_norm(a, 1.0);
    EXPECT_NEAR(e1.lower, col, 1e-12);
    EXPECT_NEAR(e1.upper, col, 1e-12);
    // p = 2: largest eigenvalue of the weighted Gram problem
    Mat g = m.transpose() * cod->weights().asDiagonal() * m;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(g, Mat(dom->weights().asDiagonal()));
    const double s2 = std::sqrt(es.eigenvalues().maxCoeff());
    auto e2 = operator_norm(a, 2.0);
    EXPECT_NEAR(e2.lower, s2, 1e-9);
    EXPECT_NEAR(e2.upper, s2, 1e-9);
  }
}

TEST(LpCore, RankOneOperatorNorm)
{
  auto x = MeasureSpace::from_weights((Vec(3) << 0.5, 1.0, 2.0).finished());
  Rng rng(2);
  for (double p : {1.5, 3.0}) {
    for (int t = 0; t < 5; ++t) {
      const LpVector xi(x, p, gaussian_vec(rng, 3));
      const LpFunctional f(x, p, gaussian_vec(rng, 3));
      const Mat m = xi.coeffs * f.euclidean().transpose();
      const double closed = f.norm() * xi.norm();
      const double searched = searched_operator_norm(m, x->weights(), x->weights(), p);
      EXPECT_NEAR(searched, closed, 1e-6 * closed);
      auto est = operator_norm(LpOperator(x, m), p);
      EXPECT_NEAR(est.lower, closed, 1e-6 * closed);
      EXPECT_NEAR(est.upper, closed, 1e-6 * closed);
    }
  }
}

TEST(LpCore, GeneralBracketsContainSearchedValue)
{
  auto x = MeasureSpace::from_weights((Vec(3) << 0.5, 1.0, 2.0).finished());
  Rng rng(8);
  for (double p : {1.5, 3.0})
    for (int t = 0; t < 6; ++t) {
      const Mat m = gaussian_mat(rng, 3, 3);
      const auto est = operator_norm(LpOperator(x, m), p);
      const double searched = searched_operator_norm(m, x->weights(), x->weights(), p, 40 + t);
      EXPECT_TRUE(est.valid());
      EXPECT_LE(searched, est.upper * (1 + 1e-9));
      EXPECT_GE(est.lower, searched * (1 - 1e-6));
    }
}

TEST(LpCore, BlockStructureIsExploited)
{
  auto x = MeasureSpace::unit_atoms(4);
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = 3.0;
  m.block(2, 2, 2, 2) << 1, 1, 1, -1;
  for (double p : {1.5, 3.0}) {
    auto est = operator_norm(LpOperator(x, m), p);
    EXPECT_NEAR(est.lower, 3.0, 1e-12);
    EXPECT_NEAR(est.upper, 3.0, 1e-12);
  }
}

TEST(LpCore, ProperProjections)
{
  auto x = MeasureSpace::make({{"a", 1.0}}, 4, 0.25);
  auto full = proper_projection(x, MeasurableSubset::full(x));
  EXPECT_TRUE(full.matrix.isIdentity());
  MeasurableSubset z(x, {0, 2}), zp(x, {1, 4});
  auto pz = proper_projection(x, z), pzp = proper_projection(x, zp);
  EXPECT_EQ(pz.tag, OperatorTag::ProperProjection);
  EXPECT_EQ((pz.matrix * pzp.matrix).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((pzp.matrix * pz.matrix).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((pz.matrix * pz.matrix - pz.matrix).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LpCore, SpanProjectionAveragesOnFullSpace)
{
  auto x = MeasureSpace::make({}, 4, 0.25);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    auto proj = span_projection(x, {MeasurableSubset::full(x)}, p);
    const Vec eta = (Vec(4) << 1, 2, 3, 6).finished();
    const Vec avg = proj.matrix * eta;
    for (int i = 0; i < 4; ++i)
      EXPECT_NEAR(avg(i), 3.0, 1e-12);
    EXPECT_LE(operator_norm(proj, p).upper, 1.0 + 1e-6);
  }
}

TEST(LpCore, SpanProjectionProperties)
{
  auto x = MeasureSpace::make({{"a", 0.6}, {"b", 1.4}}, 6, 0.2);
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto fam = random_disjoint_family(x, 1 + seed % 4, seed);
      auto proj = span_projection(x, fam, p);
      EXPECT_LE((proj.matrix * proj.matrix - proj.matrix).cwiseAbs().maxCoeff(), 1e-12);
      for (const auto& z : fam) {
        const Vec chi = normalized_indicator(x, z, p).coeffs;
        EXPECT_LE((proj.matrix * chi - chi).cwiseAbs().maxCoeff(), 1e-12);
      }
      EXPECT_LE(operator_norm(proj, p).upper, 1.0 + 1e-6);
      Rng rng(seed);
      for (int t = 0; t < 100; ++t) {
        const Vec eta = gaussian_vec(rng, 8);
        EXPECT_LE(oracle::weighted_p_norm(proj.matrix * eta, x->weights(), p),
                  oracle::weighted_p_norm(eta, x->weights(), p) + 1e-9);
      }
    }
  MeasurableSubset a(x, {0, 1}), b(x, {1, 2});
  EXPECT_THROW(span_projection(x, {a, b}, 2.0), error);
}

TEST(LpCore, SampledOperatorFamilies)
{
  auto x = MeasureSpace::make({{"a", 0.5}}, 4, 0.25);
  Rng rng(4);
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (int t = 0; t < 30; ++t) {
      auto iso = random_operator(x, p, OperatorFamily::Isometry, rng);
      const Vec v = gaussian_vec(rng, 5);
      EXPECT_NEAR(oracle::weighted_p_norm(iso.matrix * v, x->weights(), p),
                  oracle::weighted_p_norm(v, x->weights(), p), 1e-12);
      auto proj = random_operator(x, p, OperatorFamily::Projection, rng);
      EXPECT_LE(operator_norm(proj, p).upper, 1.0 + 1e-6);
    }
  EXPECT_EQ(family_for_trial(0), OperatorFamily::Random);
  EXPECT_EQ(family_for_trial(4), OperatorFamily::RankOne);
}
