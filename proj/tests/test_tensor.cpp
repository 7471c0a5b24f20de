#include "lpq/tensor.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lpq;

namespace {

TensorModel small_model(double p, Norm e, Norm f, std::size_t ydim = 3, std::size_t copies = 8)
{
  auto x = MeasureSpace::from_weights((Vec(2) << 0.5, 1.5).finished());
  auto y = MeasureSpace::from_weights(Vec::LinSpaced(static_cast<Index>(ydim), 0.5, 2.0));
  return TensorModel::make(QuantizedSpace::min(x, p, std::move(e)),
                           QuantizedSpace::min(x, p, std::move(f)), y, copies);
}

UpperOptions quick(int budget = 20, int restarts = 2)
{
  UpperOptions o;
  o.budget = budget;
  o.restarts = restarts;
  return o;
}

} // namespace

TEST(Tensor, DecomposeReproducesElement)
{
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    auto m = small_model(p, Norm::lr(2, 1.0), Norm::lr(2, kInf));
    Rng rng = derive_rng(3, static_cast<std::uint64_t>(p * 10));
    const Mat u = gaussian_mat(rng, 3, 4);
    const auto rep = decompose(m, u);
    EXPECT_LE(rep.terms.size(), 6u);
    EXPECT_LT((value(m, rep) - u).cwiseAbs().maxCoeff(), 1e-11);
    const auto best = tensor_norm_upper(m, u, quick());
    EXPECT_LT((value(m, best.rep) - u).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(cost(m, best.rep).cost, best.value, 1e-12 * best.value);
  }
}

TEST(Tensor, ScalarFactorsGiveLpNorm)
{
  const double p = 1.5;
  auto m = small_model(p, Norm::lr(1, 1.0), Norm::lr(1, 2.0), 4);
  const Mat u = (Vec(4) << 1.0, -2.0, 0.5, 3.0).finished();
  const auto r = tensor_norm(m, u, {1, 2, quick(), 2, 7});
  const double exact = oracle::weighted_p_norm(u.col(0), m.y->weights(), p);
  EXPECT_NEAR(r.estimate.lower, exact, 1e-9 * exact);
  EXPECT_NEAR(r.estimate.upper, exact, 1e-9 * exact);
}

TEST(Tensor, ElementaryTensorIsCrossNorm)
{
  for (double p : {1.0, 2.0, 3.0}) {
    auto m = small_model(p, Norm::lr(2, 1.0), Norm::lr(2, kInf));
    const Vec xi = (Vec(3) << 1.0, -0.5, 2.0).finished();
    const Vec x = (Vec(2) << 0.3, -1.2).finished(), y = (Vec(2) << 2.0, 0.7).finished();
    Mat u(3, 4);
    for (Index s = 0; s < 3; ++s)
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          u(s, i * 2 + j) = xi(s) * x(i) * y(j);
    const double expect =
        oracle::weighted_p_norm(xi, m.y->weights(), p) * x.lpNorm<1>() * y.lpNorm<Eigen::Infinity>();
    const auto r = tensor_norm(m, u, {1, 2, quick(), 4, 1});
    EXPECT_NEAR(r.estimate.upper, expect, 1e-9 * expect) << p;
    EXPECT_NEAR(r.estimate.lower, expect, 1e-6 * expect) << p;
  }
}

TEST(Tensor, BracketIsSoundOnRandomElements)
{
  auto m = small_model(1.5, Norm::lr(2, 1.0), Norm::lr(2, 3.0));
  for (int t = 0; t < 5; ++t) {
    Rng rng = derive_rng(11, static_cast<std::uint64_t>(t));
    const Mat u = gaussian_mat(rng, 3, 4);
    const auto r = tensor_norm(m, u, {4, 8, quick(), 4, static_cast<std::uint64_t>(t)});
    EXPECT_TRUE(r.estimate.valid(1e-9));
    EXPECT_GT(r.estimate.lower, 0.0);
    // the norm dominates the injective-type scalar bound and is dominated
    // by the sum of elementary norms of the decomposition
    EXPECT_LE(r.estimate.upper, cost(m, decompose(m, u)).cost * (1 + 1e-12));
  }
}

TEST(Tensor, UpperIsMonotoneInBudget)
{
  auto m = small_model(3.0, Norm::lr(2, 1.0), Norm::lr(2, 2.0));
  Rng rng = derive_rng(5, 0);
  const Mat u = gaussian_mat(rng, 3, 4);
  double prev = kInf;
  for (int b : {0, 5, 20, 60}) {
    const double v = tensor_norm_upper(m, u, quick(b, 2)).value;
    EXPECT_LE(v, prev * (1 + 1e-12));
    prev = v;
  }
}

TEST(Tensor, TraceIsRunningMinimum)
{
  auto m = small_model(1.5, Norm::lr(2, 1.0), Norm::lr(2, 2.0));
  Rng rng = derive_rng(6, 0);
  const Mat u = gaussian_mat(rng, 3, 4);
  const auto r = tensor_norm(m, u, {1, 6, quick(), 2, 3});
  ASSERT_EQ(r.trace.size(), 6u);
  EXPECT_TRUE(std::isinf(r.trace.front().second));
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    EXPECT_LE(r.trace[i].second, r.trace[i - 1].second);
  EXPECT_EQ(r.trace.back().second, r.estimate.upper);
  ASSERT_EQ(r.route, "induced-by-J");
  EXPECT_LT((value(r.model, r.best_rep) - j_rows(u, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Tensor, InsufficientCopiesIsReported)
{
  auto m = small_model(2.0, Norm::lr(2, 1.0), Norm::lr(2, 1.0), 3, 1);
  Rng rng = derive_rng(1, 1);
  EXPECT_THROW(decompose(m, gaussian_mat(rng, 3, 4)), error);
  EXPECT_THROW(decompose(m, Mat::Ones(2, 4)), error);
}

TEST(Tensor, WorkersDoNotChangeResult)
{
  auto m = small_model(1.5, Norm::lr(2, 1.0), Norm::lr(2, 2.0));
  Rng rng = derive_rng(8, 0);
  const Mat u = gaussian_mat(rng, 3, 4);
  TensorOptions o{2, 6, quick(), 2, 9, 1};
  const auto a = tensor_norm(m, u, o);
  o.workers = 4;
  const auto b = tensor_norm(m, u, o);
  EXPECT_EQ(a.estimate.upper, b.estimate.upper);
  EXPECT_EQ(a.estimate.lower, b.estimate.lower);
}

TEST(Tensor, VectorValuedIdentityCertificate)
{
  const double p = 2.0;
  auto x = MeasureSpace::unit_atoms(2);
  auto y = MeasureSpace::unit_atoms(2);
  auto e = QuantizedSpace::vector_valued(x, p, Norm::lr(2, p));
  auto m = TensorModel::make(e, e, y, 8);
  Rng rng = derive_rng(2, 2);
  const Mat u = gaussian_mat(rng, 2, 4);
  const auto c = identity_vv_certificate(m);
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(c->bound(m, u), u.norm(), 1e-12);
  const auto r = tensor_norm(m, u, {1, 8, quick(40, 4), 2, 1});
  EXPECT_GE(r.estimate.lower, u.norm() * (1 - 1e-12));
  EXPECT_TRUE(r.estimate.valid(1e-9));
  auto mn = TensorModel::make(QuantizedSpace::min(x, p, Norm::lr(2, 1.0)), e, y);
  EXPECT_FALSE(identity_vv_certificate(mn).has_value());
}

TEST(Tensor, JRouteAgreesWithDirectRoute)
{
  auto x = MeasureSpace::unit_atoms(2);
  auto y = MeasureSpace::make({}, 2, 1.0, true);
  auto m = TensorModel::make(QuantizedSpace::min(x, 2.0, Norm::lr(2, 1.0)),
                             QuantizedSpace::min(x, 2.0, Norm::lr(2, 1.0)), y);
  Rng rng = derive_rng(4, 4);
  const Mat u = gaussian_mat(rng, 2, 4);
  TensorOptions o{1, 8, quick(30, 2), 4, 2};
  const auto direct = tensor_norm(m, u, o);
  o.force_j_route = true;
  const auto viaj = tensor_norm(m, u, o);
  EXPECT_EQ(direct.route, "direct");
  EXPECT_EQ(viaj.route, "induced-by-J");
  EXPECT_LE(direct.estimate.lower, viaj.estimate.upper * (1 + 1e-9));
  EXPECT_LE(viaj.estimate.lower, direct.estimate.upper * (1 + 1e-9));
}

TEST(Tensor, FactorizationChainIsConsistentForScalarFactors)
{
  auto x = MeasureSpace::unit_atoms(2);
  auto y = MeasureSpace::unit_atoms(2);
  auto m = TensorModel::make(QuantizedSpace::min(x, 2.0, Norm::lr(1, 2.0)),
                             QuantizedSpace::min(x, 2.0, Norm::lr(1, 2.0)), y);
  const auto cert = scalar_certificate(m, Vec::Ones(1), Vec::Ones(1));
  ASSERT_TRUE(cert.has_value());
  const auto rep = universal_factorization_check(m, *cert, 8, 1);
  EXPECT_TRUE(rep.consistent);
  EXPECT_NEAR(rep.rho.upper, 1.0, 1e-12);
  EXPECT_NEAR(rep.R.lower, 1.0, 1e-9);
  const auto zero = scalar_certificate(m, Vec::Zero(1), Vec::Ones(1));
  EXPECT_FALSE(zero.has_value());
}
