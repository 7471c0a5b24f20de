#include "lpq/quantization.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lpq;

namespace {

Mat hadamard2() { return (Mat(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0); }

std::vector<HostPtr> cross_hosts(const SpacePtr& x, double p)
{
  const Norm e = Norm::lr((Vec(2) << 1.0, 0.5).finished(), 1.0);
  auto vv = QuantizedSpace::vector_valued(x, p, e);
  return {QuantizedSpace::min(x, p, e), QuantizedSpace::max(x, p, e), vv,
          QuantizedSpace::standard_extension(QuantizedSpace::min(x, p, e), 3),
          QuantizedSpace::induced(QuantizedSpace::standard_extension(vv, 2))};
}

} // namespace

TEST(Quantization, CrossNormOnElementaryTensors)
{
  auto x = MeasureSpace::make({{"a", 0.5}}, 2, 0.25);
  Rng rng(1);
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (const auto& h : cross_hosts(x, p))
      for (int t = 0; t < 10; ++t) {
        const auto n = static_cast<Index>(h->base()->dim());
        Vec xi = gaussian_vec(rng, n);
        xi /= Norm::lp_base(h->base()->weights(), p).norm(xi);
        const Vec v = gaussian_vec(rng, 2);
        const auto est = amplified_norm(AmplifiedElement::elementary(h, xi, v));
        EXPECT_NEAR(est.upper, h->underlying().norm(v), 1e-9) << h->describe();
        EXPECT_NEAR(est.lower, h->underlying().norm(v), 1e-6) << h->describe();
      }
}

TEST(Quantization, VectorValuedClosedForm)
{
  auto x = MeasureSpace::unit_atoms(2);
  const Norm e = Norm::lr(2, 1.0);
  auto h = QuantizedSpace::vector_valued(x, 2.0, e);
  const Vec a = (Vec(2) << 1, -2).finished(), b = (Vec(2) << 0.5, 3).finished();
  Mat u(2, 2);
  u.row(0) = a.transpose();
  u.row(1) = b.transpose();
  const auto est = amplified_norm(AmplifiedElement(h, u));
  EXPECT_NEAR(est.lower, std::sqrt(9.0 + 12.25), 1e-12);
  EXPECT_NEAR(est.upper, std::sqrt(9.0 + 12.25), 1e-12);
}

TEST(Quantization, MaxDominatesMin)
{
  auto x = MeasureSpace::from_weights((Vec(2) << 0.7, 1.3).finished());
  Rng rng(2);
  for (double p : {1.5, 2.0, 3.0}) {
    const Norm e = Norm::lr(2, 1.0);
    auto mn = QuantizedSpace::min(x, p, e), mx = QuantizedSpace::max(x, p, e);
    for (int t = 0; t < 200 / 3 + 1; ++t) {
      const Mat u = gaussian_mat(rng, 2, 2);
      const auto a = amplified_norm(*mn, u), b = amplified_norm(*mx, u);
      EXPECT_GE(b.lower, a.lower - 1e-6);
      EXPECT_GE(b.upper, a.upper - 1e-6);
    }
  }
}

TEST(Quantization, TensorHostRejectsDirectNorm)
{
  auto x = MeasureSpace::unit_atoms(2);
  auto e = QuantizedSpace::min(x, 2.0, Norm::lr(2, 2.0));
  auto t = QuantizedSpace::tensor(e, e, x);
  EXPECT_THROW(amplified_norm(AmplifiedElement(t, Mat::Zero(2, 4))), error);
}

TEST(Quantization, ModuleAction)
{
  auto x = MeasureSpace::from_weights((Vec(3) << 0.5, 1.0, 2.0).finished());
  auto h = QuantizedSpace::min(x, 1.5, Norm::lr(2, 3.0));
  Rng rng(3);
  const AmplifiedElement u(h, gaussian_mat(rng, 3, 2));
  EXPECT_EQ((module_action(LpOperator::identity(x), u).coeffs - u.coeffs).norm(), 0.0);

  const LpVector xi(x, 1.5, gaussian_vec(rng, 3));
  const LpFunctional f(x, 1.5, gaussian_vec(rng, 3));
  const LpOperator rank_one(x, xi.coeffs * f.euclidean().transpose());
  const Mat expected = xi.coeffs * functional_action(f, u).transpose();
  EXPECT_LE((module_action(rank_one, u).coeffs - expected).cwiseAbs().maxCoeff(), 1e-12);

  const auto proj = proper_projection(x, MeasurableSubset(x, {1}));
  const Mat pu = module_action(proj, u).coeffs;
  EXPECT_EQ(pu.row(0).norm(), 0.0);
  EXPECT_EQ(pu.row(2).norm(), 0.0);
  EXPECT_EQ((pu.row(1) - u.coeffs.row(1)).norm(), 0.0);
  EXPECT_EQ(module_action(proj, u).support(), (std::vector<std::size_t>{1}));

  auto other = MeasureSpace::unit_atoms(2);
  EXPECT_THROW(module_action(LpOperator::identity(other), u), error);
}

TEST(Quantization, ExtensionDualNorm)
{
  auto x = MeasureSpace::unit_atoms(1);
  const LpFunctional f1(x, 2.0, Vec::Constant(1, 3.0)), f2(x, 2.0, Vec::Constant(1, 4.0));
  EXPECT_NEAR(extension_dual_norm({f1}), 3.0, 1e-12);
  EXPECT_NEAR(extension_dual_norm({f1, f2}), 5.0, 1e-12);
}

TEST(Quantization, ExtensionDualNormMatchesPairingSearch)
{
  auto x = MeasureSpace::from_weights((Vec(2) << 0.5, 1.5).finished());
  Rng rng(6);
  for (double p : {1.5, 2.0, 3.0})
    for (int t = 0; t < 3; ++t) {
      std::vector<LpFunctional> fs;
      for (int m = 0; m < 2; ++m)
        fs.emplace_back(x, p, gaussian_vec(rng, 2));
      const double searched = oracle::maximize(4, [&](const Vec& v) {
        double pair = 0.0, mass = 0.0;
        for (int m = 0; m < 2; ++m) {
          const Vec vm = v.segment(2 * m, 2);
          for (int i = 0; i < 2; ++i)
            pair += x->weight(i) * fs[m].coeffs(i) * vm(i);
          mass += std::pow(oracle::weighted_p_norm(vm, x->weights(), p), p);
        }
        return mass > 0 ? std::abs(pair) / std::pow(mass, 1.0 / p) : 0.0;
      });
      EXPECT_NEAR(extension_dual_norm(fs), searched, 1e-4 * searched);
    }
}

TEST(Quantization, NearLForMinAndVectorValued)
{
  auto x = MeasureSpace::make({{"a", 0.5}}, 2, 0.25);
  SuiteOptions opt;
  opt.trials = 1000;
  opt.seed = 5;
  for (double p : {1.5, 2.0}) {
    for (const auto& h : {QuantizedSpace::min(x, p, Norm::lr(2, 1.0)),
                          QuantizedSpace::vector_valued(x, p, Norm::lr(2, 1.0))}) {
      const auto rep = near_L_check(h, opt);
      EXPECT_TRUE(rep.passed) << h->describe() << " worst " << rep.worst_ratio;
      EXPECT_LE(rep.worst_ratio, 1.0 + 1e-6);
    }
  }
}

TEST(Quantization, VectorValuedHadamardWitness)
{
  // l_2^2(l_1^2): the identity-shaped u against the normalised Hadamard
  // matrix gives ||u|| = sqrt 2 and ||a.u|| = 2, ratio sqrt 2.
  auto x = MeasureSpace::unit_atoms(2);
  auto h = QuantizedSpace::vector_valued(x, 2.0, Norm::lr(2, 1.0));
  const AmplifiedElement u(h, Mat::Identity(2, 2));
  const LpOperator a(x, hadamard2());
  EXPECT_NEAR(operator_norm(a, 2.0).upper, 1.0, 1e-12);
  EXPECT_NEAR(amplified_norm(u).upper, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(amplified_norm(module_action(a, u)).upper, 2.0, 1e-12);

  // four atoms with E = l_1^4 reach ratio 2
  auto x4 = MeasureSpace::unit_atoms(4);
  auto h4 = QuantizedSpace::vector_valued(x4, 2.0, Norm::lr(4, 1.0));
  Mat h44(4, 4);
  h44 << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
  const AmplifiedElement u4(h4, Mat::Identity(4, 4));
  const LpOperator a4(x4, h44 / 2.0);
  const double ratio = amplified_norm(module_action(a4, u4)).upper /
                       (operator_norm(a4, 2.0).upper * amplified_norm(u4).upper);
  EXPECT_NEAR(ratio, 2.0, 1e-12);
}

TEST(Quantization, ContractibilitySuites)
{
  auto x = MeasureSpace::unit_atoms(2);
  SuiteOptions opt;
  opt.trials = 1000;
  opt.seed = 9;
  auto mn = QuantizedSpace::min(x, 2.0, Norm::lr(2, 1.0));
  EXPECT_TRUE(contractibility_suite(mn, opt).passed);
  auto vv = QuantizedSpace::vector_valued(x, 2.0, Norm::lr(2, 1.0));
  const auto bad = contractibility_suite(vv, opt);
  EXPECT_FALSE(bad.passed);
  EXPECT_GE(bad.worst_ratio, std::sqrt(2.0) - 1e-9);
  EXPECT_TRUE(contractibility_suite(vv, opt, {}, true).passed);
}

TEST(Quantization, DiamondCrossIdentityAndBilinearity)
{
  auto x = MeasureSpace::make({{"a", 0.3}}, 2, 0.6);
  Rng rng(10);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const auto d = DiamondOp::canonical(x, p);
    EXPECT_EQ(d.target()->dim(), DiamondOp::cantor_extent(3));
    for (int t = 0; t < 200; ++t) {
      const LpVector xi(x, p, gaussian_vec(rng, 3)), eta(x, p, gaussian_vec(rng, 3));
      const Vec prod = d.apply(xi.coeffs, eta.coeffs);
      EXPECT_NEAR(oracle::weighted_p_norm(prod, d.target()->weights(), p),
                  xi.norm() * eta.norm(), 1e-9 * (1 + xi.norm() * eta.norm()));
    }
  }
  const auto d = DiamondOp::canonical(x, 2.0);
  const Norm e = Norm::lr(2, 2.0), f = Norm::lr(3, 1.0);
  auto he = QuantizedSpace::min(x, 2.0, e);
  auto hf = QuantizedSpace::min(x, 2.0, f);
  const AmplifiedElement u(he, gaussian_mat(rng, 3, 2)), u2(he, gaussian_mat(rng, 3, 2));
  const AmplifiedElement v(hf, gaussian_mat(rng, 3, 3));
  const Mat lhs = diamond(d, u + u2, v).coeffs;
  const Mat rhs = diamond(d, u, v).coeffs + diamond(d, u2, v).coeffs;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);

  const Vec xi = gaussian_vec(rng, 3), eta = gaussian_vec(rng, 3);
  const Vec a = gaussian_vec(rng, 2), b = gaussian_vec(rng, 3);
  const Mat elem = diamond(d, AmplifiedElement::elementary(he, xi, a),
                           AmplifiedElement::elementary(hf, eta, b))
                       .coeffs;
  Vec ab(6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      ab(i * 3 + j) = a(i) * b(j);
  EXPECT_LE((elem - d.apply(xi, eta) * ab.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Quantization, DiamondOverflowAndInjectivity)
{
  auto x = MeasureSpace::unit_atoms(3);
  auto small = MeasureSpace::unit_atoms(9);
  try {
    DiamondOp::canonical(x, small, 2.0);
    FAIL();
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("diamond overflow"), std::string::npos);
  }
  std::vector<std::size_t> pairing(9, 0);
  EXPECT_THROW(DiamondOp(x, MeasureSpace::unit_atoms(20), 2.0, pairing), error);
}

TEST(Quantization, JQMaps)
{
  auto x = MeasureSpace::from_weights((Vec(2) << 0.5, 2.0).finished());
  auto h = QuantizedSpace::min(x, 1.5, Norm::lr(2, 1.0));
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const AmplifiedElement u(h, gaussian_mat(rng, 2, 2));
    const auto ju = j_map(u, 3);
    EXPECT_EQ((q_map(ju).coeffs - u.coeffs).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(amplified_norm(ju).upper, amplified_norm(u).upper, 1e-12);
    const AmplifiedElement ubar(ju.host, gaussian_mat(rng, 6, 2));
    EXPECT_LE(amplified_norm(q_map(ubar)).upper, amplified_norm(ubar).lower + 1e-12);
  }
  const LpVector xi(x, 2.0, gaussian_vec(rng, 2));
  EXPECT_EQ((q_map(j_map(xi, 4)).coeffs - xi.coeffs).norm(), 0.0);
  EXPECT_NEAR(j_map(xi, 4).norm(), xi.norm(), 1e-14);
}

TEST(Quantization, BarDiamond)
{
  auto x = MeasureSpace::from_weights((Vec(2) << 0.5, 1.5).finished());
  const double p = 1.5;
  const auto d = DiamondOp::canonical(x, p);
  auto he = QuantizedSpace::min(x, p, Norm::lr(2, 1.0));
  auto hf = QuantizedSpace::min(x, p, Norm::lr(2, kInf));
  Rng rng(13);
  const AmplifiedElement u(he, gaussian_mat(rng, 2, 2)), v(hf, gaussian_mat(rng, 2, 2));
  const auto bar = bar_diamond(d, j_map(u, 3), j_map(v, 3));
  EXPECT_EQ(bar.coeffs.rows(), static_cast<Index>(3 * d.target()->dim()));
  const Mat back = q_rows(bar.coeffs, d.target()->dim());
  EXPECT_LE((back - diamond(d, u, v).coeffs).cwiseAbs().maxCoeff(), 1e-12);

  Mat second = Mat::Zero(6, 2);
  second.middleRows(2, 2) = u.coeffs;
  const AmplifiedElement in_copy2(j_map(u, 3).host, second);
  EXPECT_EQ(bar_diamond(d, in_copy2, j_map(v, 3)).coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Quantization, AmplifiedOperators)
{
  auto x = MeasureSpace::unit_atoms(2);
  const Norm e = Norm::lr(2, 1.0), f = Norm::lr(2, kInf);
  auto he = QuantizedSpace::min(x, 2.0, e);
  auto hf = QuantizedSpace::min(x, 2.0, f);
  const auto id = amplify_operator(Mat::Identity(2, 2), he, he);
  EXPECT_TRUE(id.norm.contains(1.0, 1e-12));
  EXPECT_LE(id.norm.width(), 1e-6);
  const auto twice = amplify_operator(2.0 * Mat::Identity(2, 2), he, he);
  EXPECT_TRUE(twice.norm.contains(2.0, 1e-9));

  Rng rng(14);
  for (int t = 0; t < 10; ++t) {
    const Mat phi = gaussian_mat(rng, 2, 2);
    const double grid = oracle::maximize_planar([&](const Vec& v) { return f.norm(phi * v) / e.norm(v); });
    const auto amp = amplify_operator(phi, he, hf);
    EXPECT_NEAR(amp.norm.lower, grid, 1e-4 * grid);
    EXPECT_NEAR(amp.norm.upper, grid, 1e-4 * grid);
    // left-module morphism
    const AmplifiedElement u(he, gaussian_mat(rng, 2, 2));
    const LpOperator a(x, gaussian_mat(rng, 2, 2));
    EXPECT_LE((amp.apply(module_action(a, u)).coeffs - module_action(a, amp.apply(u)).coeffs)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}
