#pragma once

#include "lpq/measure.hpp"
#include "lpq/norms.hpp"

#include <functional>
#include <numeric>
#include <optional>

namespace lpq {

/// Element of L_p(X) for a finite model X.
struct LpVector
{
  SpacePtr space;
  double p = 2.0;
  Vec coeffs;

  LpVector(SpacePtr s, double p_, Vec c) : space(std::move(s)), p(p_), coeffs(std::move(c))
  {
    require_exponent(p);
    if (static_cast<std::size_t>(coeffs.size()) != space->dim())
      throw error("LpVector: coefficient count does not match space dimension");
  }

  double norm() const
  {
    return lr_norm(space->weights().array().pow(1.0 / p).matrix().cwiseProduct(coeffs), p);
  }

  LpVector operator+(const LpVector& o) const
  {
    check_compatible(o);
    return {space, p, coeffs + o.coeffs};
  }
  LpVector operator*(double s) const { return {space, p, coeffs * s}; }

private:
  void check_compatible(const LpVector& o) const
  {
    if (o.p != p || !o.space->same_as(*space))
      throw error("LpVector arithmetic across different spaces or exponents");
  }
};

inline double lp_norm(const LpVector& v) { return v.norm(); }

/// Element of L_p(X)* = L_q(X); pairs with vectors through sum w_i f_i x_i.
struct LpFunctional
{
  SpacePtr space;
  double p = 2.0; // exponent of the primal space
  Vec coeffs;

  LpFunctional(SpacePtr s, double p_, Vec c) : space(std::move(s)), p(p_), coeffs(std::move(c))
  {
    require_exponent(p);
    if (static_cast<std::size_t>(coeffs.size()) != space->dim())
      throw error("LpFunctional: coefficient count does not match space dimension");
  }

  double q() const { return conjugate_exponent(p); }

  double norm() const
  {
    const double qq = q();
    if (std::isinf(qq))
      return coeffs.cwiseAbs().maxCoeff();
    return lr_norm(space->weights().array().pow(1.0 / qq).matrix().cwiseProduct(coeffs), qq);
  }

  double operator()(const LpVector& v) const
  {
    if (static_cast<std::size_t>(v.coeffs.size()) != space->dim())
      throw error("LpFunctional applied to a vector of another space");
    return (space->weights().array() * coeffs.array() * v.coeffs.array()).sum();
  }

  /// Coefficients for the plain Euclidean pairing.
  Vec euclidean() const { return space->weights().cwiseProduct(coeffs); }

  static LpFunctional from_euclidean(SpacePtr s, double p, const Vec& y)
  {
    Vec f = y.cwiseQuotient(s->weights());
    return {std::move(s), p, std::move(f)};
  }
};

enum class OperatorTag
{
  None,
  ProperProjection,
  ProperIsometry,
};

/// Bounded operator between finite L_p models, acting on coefficient
/// vectors: (a x)_i = sum_j m_ij x_j.
struct LpOperator
{
  SpacePtr domain;
  SpacePtr codomain;
  Mat matrix;
  OperatorTag tag = OperatorTag::None;
  std::optional<MeasurableSubset> subset; // support of a proper projection / isometry image

  LpOperator(SpacePtr dom, SpacePtr cod, Mat m, OperatorTag t = OperatorTag::None)
      : domain(std::move(dom)), codomain(std::move(cod)), matrix(std::move(m)), tag(t)
  {
    if (static_cast<std::size_t>(matrix.cols()) != domain->dim() ||
        static_cast<std::size_t>(matrix.rows()) != codomain->dim())
      throw error("LpOperator: matrix shape " + std::to_string(matrix.rows()) + "x" +
                  std::to_string(matrix.cols()) + " does not match spaces");
  }

  LpOperator(SpacePtr space, Mat m) : LpOperator(space, space, std::move(m)) {}

  static LpOperator identity(const SpacePtr& space)
  {
    const auto n = static_cast<Index>(space->dim());
    return {space, space, Mat::Identity(n, n)};
  }

  bool square() const { return domain->dim() == codomain->dim(); }

  LpVector apply(const LpVector& x) const
  {
    if (static_cast<std::size_t>(x.coeffs.size()) != domain->dim())
      throw error("LpOperator applied to a vector of the wrong dimension");
    return {codomain, x.p, matrix * x.coeffs};
  }

  LpOperator compose(const LpOperator& inner) const
  {
    if (inner.codomain->dim() != domain->dim())
      throw error("LpOperator composition: shape mismatch");
    return {inner.domain, codomain, matrix * inner.matrix};
  }
};

struct OperatorNormOptions
{
  int restarts = 32;
  std::uint64_t seed = 0x5eedu;
  int iterations = 200;
};

namespace detail {

// l_p unit vector dual to y (for the plain l_p norm).
inline Vec lp_dual_direction(const Vec& y, double p)
{
  const double m = y.cwiseAbs().maxCoeff();
  Vec g = Vec::Zero(y.size());
  if (m == 0.0)
    return g;
  if (p == 1.0) {
    for (Index i = 0; i < y.size(); ++i)
      g(i) = y(i) > 0 ? 1.0 : (y(i) < 0 ? -1.0 : 0.0);
    return g;
  }
  const Vec ys = y / m;
  for (Index i = 0; i < y.size(); ++i)
    g(i) = (ys(i) >= 0 ? 1.0 : -1.0) * std::pow(std::abs(ys(i)), p - 1.0);
  return g / lr_norm(g, conjugate_exponent(p));
}

struct Block
{
  std::vector<Index> rows, cols;
};

// Connected components of the bipartite row/column graph of nonzeros.
inline std::vector<Block> blocks(const Mat& m)
{
  const Index R = m.rows(), C = m.cols();
  std::vector<Index> parent(static_cast<std::size_t>(R + C));
  for (Index i = 0; i < R + C; ++i)
    parent[static_cast<std::size_t>(i)] = i;
  std::function<Index(Index)> find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < C; ++j)
      if (m(i, j) != 0.0)
        parent[static_cast<std::size_t>(find(i))] = find(R + j);
  std::vector<Block> out;
  std::vector<Index> slot(static_cast<std::size_t>(R + C), -1);
  auto touch = [&](Index node) -> Block& {
    const Index r = find(node);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<Index>(out.size());
      out.emplace_back();
    }
    return out[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])];
  };
  for (Index i = 0; i < R; ++i)
    if (m.row(i).cwiseAbs().maxCoeff() > 0.0)
      touch(i).rows.push_back(i);
  for (Index j = 0; j < C; ++j)
    if (m.col(j).cwiseAbs().maxCoeff() > 0.0)
      touch(R + j).cols.push_back(j);
  return out;
}

struct BlockBracket
{
  double lower = 0.0, upper = 0.0;
  std::string tag;
};

// Plain l_p -> l_p bracket of a dense block.
inline BlockBracket lp_block_bracket(const Mat& B, const Mat& m, const Vec& w_in,
                                     const Vec& w_out, double p, Rng* rng,
                                     const OperatorNormOptions& opt)
{
  BlockBracket out;
  if (p == 1.0) {
    out.lower = out.upper = B.cwiseAbs().colwise().sum().maxCoeff();
    out.tag = "exact:max-column";
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (p == 2.0) {
    out.lower = out.upper = sv(0);
    out.tag = "exact:spectral";
    return out;
  }
  const double q = conjugate_exponent(p);
  if (sv.size() == 1 || sv(1) <= 1e-14 * sv(0)) {
    out.lower = out.upper =
        sv(0) * lr_norm(svd.matrixU().col(0), p) * lr_norm(svd.matrixV().col(0), q);
    out.tag = "exact:rank-one";
    return out;
  }
  // upper: Riesz-Thorin between the weighted L_1 and L_inf endpoints
  double n1 = 0.0;
  for (Index j = 0; j < m.cols(); ++j)
    n1 = std::max(n1, (w_out.array() * m.col(j).cwiseAbs().array()).sum() / w_in(j));
  const double ninf = m.cwiseAbs().rowwise().sum().maxCoeff();
  double upper = std::pow(n1, 1.0 / p) * std::pow(ninf, 1.0 - 1.0 / p);
  std::string tag = "riesz-thorin";
  const double cin = std::pow(static_cast<double>(B.cols()), std::max(0.0, 0.5 - 1.0 / p));
  const double cout = std::pow(static_cast<double>(B.rows()), std::max(0.0, 1.0 / p - 0.5));
  if (cin * cout * sv(0) < upper) {
    upper = cin * cout * sv(0);
    tag = "dimension-factor";
  }
  double ranksum = 0.0;
  for (Index r = 0; r < sv.size(); ++r)
    ranksum += sv(r) * lr_norm(svd.matrixU().col(r), p) * lr_norm(svd.matrixV().col(r), q);
  if (ranksum < upper) {
    upper = ranksum;
    tag = "rank-sum";
  }
  out.upper = upper;
  out.tag = tag;
  if (!rng)
    return out;

  // lower: Boyd's power-type iteration with restarts
  double lower = 0.0;
  for (Index j = 0; j < B.cols(); ++j)
    lower = std::max(lower, lr_norm(B.col(j), p));
  auto boyd = [&](Vec x) {
    const double xn = lr_norm(x, p);
    if (!(xn > 0.0))
      return;
    x /= xn;
    double val = lr_norm(B * x, p);
    for (int it = 0; it < opt.iterations; ++it) {
      const Vec y = B * x;
      if (y.cwiseAbs().maxCoeff() == 0.0)
        break;
      const Vec z = B.transpose() * lp_dual_direction(y, p);
      if (z.cwiseAbs().maxCoeff() == 0.0)
        break;
      Vec xn2 = lp_dual_direction(z, q);
      const double nv = lr_norm(B * xn2, p);
      x = std::move(xn2);
      if (nv <= val * (1.0 + 1e-14)) {
        val = std::max(val, nv);
        break;
      }
      val = nv;
    }
    lower = std::max(lower, val);
  };
  boyd(svd.matrixV().col(0));
  for (int r = 0; r < opt.restarts; ++r)
    boyd(gaussian_vec(*rng, B.cols()));
  out.lower = std::min(lower, upper);
  out.tag += "; boyd-power(" + std::to_string(opt.restarts) + ")";
  return out;
}

} // namespace detail

/// Bracket on the norm of m : L_p(w_in) -> L_p(w_out). With rng == nullptr
/// only the upper bound is meaningful (lower is left at the exact value or 0).
inline NormEstimate operator_norm_matrix(const Mat& m, const Vec& w_in, const Vec& w_out,
                                         double p, Rng* rng,
                                         const OperatorNormOptions& opt = {})
{
  require_exponent(p);
  if (m.cols() != w_in.size() || m.rows() != w_out.size())
    throw error("operator_norm: shape mismatch");
  NormEstimate est;
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0)
    return NormEstimate::exact(0.0, "zero");
  std::string tags;
  for (const auto& b : detail::blocks(m)) {
    Mat sub(static_cast<Index>(b.rows.size()), static_cast<Index>(b.cols.size()));
    Vec wi(sub.cols()), wo(sub.rows());
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      wo(static_cast<Index>(i)) = w_out(b.rows[i]);
      for (std::size_t j = 0; j < b.cols.size(); ++j)
        sub(static_cast<Index>(i), static_cast<Index>(j)) = m(b.rows[i], b.cols[j]);
    }
    for (std::size_t j = 0; j < b.cols.size(); ++j)
      wi(static_cast<Index>(j)) = w_in(b.cols[j]);
    Mat B = sub;
    for (Index i = 0; i < B.rows(); ++i)
      B.row(i) *= std::pow(wo(i), 1.0 / p);
    for (Index j = 0; j < B.cols(); ++j)
      B.col(j) /= std::pow(wi(j), 1.0 / p);
    const auto bb = detail::lp_block_bracket(B, sub, wi, wo, p, rng, opt);
    est.lower = std::max(est.lower, bb.lower);
    if (bb.upper >= est.upper) {
      est.upper = bb.upper;
      tags = bb.tag;
    }
  }
  est.lower = std::min(est.lower, est.upper);
  est.method_tags = {tags};
  return est;
}

inline double operator_norm_upper(const Mat& m, const Vec& w_in, const Vec& w_out, double p)
{
  return operator_norm_matrix(m, w_in, w_out, p, nullptr).upper;
}

/// Bracket on ||a|| as an operator L_p(domain) -> L_p(codomain).
inline NormEstimate operator_norm(const LpOperator& a, double p,
                                  const OperatorNormOptions& opt = {})
{
  Rng rng = derive_rng(opt.seed, 0x0b);
  return operator_norm_matrix(a.matrix, a.domain->weights(), a.codomain->weights(), p, &rng,
                              opt);
}

/// Multiplication by the indicator of Z.
inline LpOperator proper_projection(const SpacePtr& space, const MeasurableSubset& z)
{
  if (z.space()->dim() != space->dim())
    throw error("proper_projection: subset belongs to another space");
  LpOperator op(space, space, Mat(z.indicator().asDiagonal()), OperatorTag::ProperProjection);
  op.subset = z;
  return op;
}

/// chi(Z) / mu(Z)^{1/p}: the normalised characteristic function of Z.
inline LpVector normalized_indicator(const SpacePtr& space, const MeasurableSubset& z, double p)
{
  require_exponent(p);
  if (z.is_empty() || !(z.measure() > 0.0))
    throw error("degenerate subset: normalized indicator of a zero-measure set");
  if (z.space()->dim() != space->dim())
    throw error("normalized_indicator: subset belongs to another space");
  return {space, p, z.indicator() * std::pow(z.measure(), -1.0 / p)};
}

/// Norm-one projection onto span{chi_hat(Z_k)}:
///   P(eta) = sum_k <xi_k, eta> chi_hat(Z_k),  xi_k = chi(Z_k) / mu(Z_k)^{1/q}.
inline LpOperator span_projection(const SpacePtr& space,
                                  const std::vector<MeasurableSubset>& family, double p)
{
  require_exponent(p);
  if (family.empty())
    throw error("span_projection needs at least one subset");
  if (!pairwise_disjoint(family))
    throw error("span_projection: subsets overlap");
  const auto n = static_cast<Index>(space->dim());
  Mat m = Mat::Zero(n, n);
  const Vec& w = space->weights();
  for (const auto& z : family) {
    const Vec chi_hat = normalized_indicator(space, z, p).coeffs;
    // q-normalised dual indicator, in weighted-pairing coefficients
    const double q = conjugate_exponent(p);
    const double dual_scale = std::isinf(q) ? 1.0 : std::pow(z.measure(), -1.0 / q);
    const Vec xi = z.indicator() * dual_scale;
    m += chi_hat * w.cwiseProduct(xi).transpose();
  }
  return {space, space, m};
}

/// Range projection of an operator whose image is a coordinate subspace.
inline LpOperator range_projection(const LpOperator& iso)
{
  Vec chi = Vec::Zero(iso.matrix.rows());
  for (Index i = 0; i < iso.matrix.rows(); ++i)
    if (iso.matrix.row(i).cwiseAbs().maxCoeff() > 0.0)
      chi(i) = 1.0;
  return {iso.codomain, iso.codomain, Mat(chi.asDiagonal()), OperatorTag::ProperProjection};
}

/// I_j : L_p(base) -> L_p(copies), placing the base into copy j. Weights
/// agree, so each I_j is an isometry for every p.
inline std::vector<LpOperator> copy_isometries(const CopiedSpace& cs)
{
  std::vector<LpOperator> out;
  const auto d = static_cast<Index>(cs.base()->dim());
  for (std::size_t k = 0; k < cs.copies(); ++k) {
    Mat m = Mat::Zero(static_cast<Index>(cs.dim()), d);
    m.block(static_cast<Index>(k) * d, 0, d, d).setIdentity();
    LpOperator op(cs.base(), cs.space(), std::move(m), OperatorTag::ProperIsometry);
    std::vector<std::size_t> idx;
    for (Index i = 0; i < d; ++i)
      idx.push_back(cs.index(k, static_cast<std::size_t>(i)));
    op.subset = MeasurableSubset(cs.space(), std::move(idx));
    out.push_back(std::move(op));
  }
  return out;
}

/// Structured operator families used by the sampling suites.
enum class OperatorFamily
{
  Random,
  Projection,
  Isometry,
  RankOne,
  Hadamard,
};

/// Random : projection : isometry : rank-one in proportion 2:1:1:1.
inline OperatorFamily family_for_trial(std::size_t trial)
{
  static constexpr OperatorFamily cycle[] = {OperatorFamily::Random, OperatorFamily::Random,
                                             OperatorFamily::Projection,
                                             OperatorFamily::Isometry, OperatorFamily::RankOne};
  return cycle[trial % 5];
}

inline std::string to_string(OperatorFamily f)
{
  switch (f) {
  case OperatorFamily::Random: return "random";
  case OperatorFamily::Projection: return "projection";
  case OperatorFamily::Isometry: return "isometry";
  case OperatorFamily::RankOne: return "rank-one";
  case OperatorFamily::Hadamard: return "hadamard";
  }
  return "unknown";
}

/// Permutation of equal-weight coordinates with random signs; an isometry
/// of L_p for every p.
inline Mat random_isometry_matrix(const Vec& w, Rng& rng)
{
  const Index n = w.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  Mat m = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (used[static_cast<std::size_t>(i)])
      continue;
    std::vector<Index> cls;
    for (Index j = i; j < n; ++j)
      if (!used[static_cast<std::size_t>(j)] && w(j) == w(i)) {
        cls.push_back(j);
        used[static_cast<std::size_t>(j)] = true;
      }
    std::vector<Index> img = cls;
    std::shuffle(img.begin(), img.end(), rng);
    for (std::size_t k = 0; k < cls.size(); ++k)
      m(img[k], cls[k]) = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  }
  return m;
}

inline LpOperator random_operator(const SpacePtr& space, double p, OperatorFamily fam, Rng& rng)
{
  const auto n = static_cast<Index>(space->dim());
  const Vec& w = space->weights();
  switch (fam) {
  case OperatorFamily::Random:
    return {space, space, gaussian_mat(rng, n, n) / std::sqrt(static_cast<double>(n))};
  case OperatorFamily::Projection: {
    if (uniform01(rng) < 0.5) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < space->dim(); ++i)
        if (uniform01(rng) < 0.5)
          idx.push_back(i);
      if (idx.empty())
        idx.push_back(uniform_index(rng, space->dim()));
      return proper_projection(space, MeasurableSubset(space, std::move(idx)));
    }
    const std::size_t k = 1 + uniform_index(rng, space->dim());
    return span_projection(space, random_disjoint_family(space, k, rng()), p);
  }
  case OperatorFamily::Isometry:
    return {space, space, random_isometry_matrix(w, rng), OperatorTag::ProperIsometry};
  case OperatorFamily::RankOne: {
    const Vec xi = gaussian_vec(rng, n);
    const Vec f = gaussian_vec(rng, n);
    return {space, space, xi * w.cwiseProduct(f).transpose()};
  }
  case OperatorFamily::Hadamard: {
    Mat m = Mat::Identity(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (w(i) == w(j)) {
          const double r = 1.0 / std::sqrt(2.0);
          m(i, i) = r;
          m(i, j) = r;
          m(j, i) = r;
          m(j, j) = -r;
          return {space, space, m};
        }
    return {space, space, m};
  }
  }
  throw error("unknown operator family");
}

} // namespace lpq
