#pragma once

#include "lpq/common.hpp"

#include <numbers>
#include <optional>
#include <sstream>
#include <variant>

namespace lpq {

/// Finite-dimensional norms used for underlying spaces E and for the base
/// L_p norm itself. The family is closed under duality (Euclidean pairing),
/// which the injective/projective brackets rely on.
class Norm
{
public:
  /// ||x|| = || scale .* x ||_r
  struct ScaledLr
  {
    Vec scale;
    double r;
  };
  /// Symmetric planar polygon; `vertices` and `normals` are 2 x k in angular
  /// order, with <normal_k, x> <= 1 the facets of the unit ball.
  struct Polygon
  {
    Mat vertices;
    Mat normals;
  };
  /// ||x|| = sqrt(x' G x)
  struct Ellipsoid
  {
    Mat gram;
    Mat inverse;
  };

  /// Weighted l_r: (sum w_i |x_i|^r)^{1/r}, or max w_i |x_i| for r = inf.
  static Norm lr(const Vec& weights, double r)
  {
    if (!(r >= 1.0))
      throw error("l_r norm needs r >= 1");
    if (weights.size() == 0 || (weights.array() <= 0.0).any())
      throw error("l_r norm needs positive weights");
    if (std::isinf(r))
      return Norm(ScaledLr{weights, r});
    return Norm(ScaledLr{weights.array().pow(1.0 / r).matrix(), r});
  }

  static Norm lr(Index dim, double r) { return lr(Vec::Ones(dim), r); }

  static Norm scaled(Vec scale, double r) { return Norm(ScaledLr{std::move(scale), r}); }

  /// Base norm of L_p over a measure with the given weights.
  static Norm lp_base(const Vec& weights, double p)
  {
    require_exponent(p);
    return lr(weights, p);
  }

  /// Polygon with vertices {+-v_j}; `half` is 2 x m.
  static Norm polygon(const Mat& half)
  {
    if (half.rows() != 2 || half.cols() < 2)
      throw error("polygon norm needs at least two planar generating vertices");
    const Index m = half.cols();
    std::vector<std::pair<double, Vec>> pts;
    for (Index j = 0; j < m; ++j) {
      Vec v = half.col(j);
      if (v.norm() == 0.0)
        throw error("polygon vertex at the origin");
      pts.emplace_back(std::atan2(v(1), v(0)), v);
      pts.emplace_back(std::atan2(-v(1), -v(0)), -v);
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const Index k = static_cast<Index>(pts.size());
    Mat verts(2, k), normals(2, k);
    for (Index j = 0; j < k; ++j)
      verts.col(j) = pts[static_cast<std::size_t>(j)].second;
    for (Index j = 0; j < k; ++j) {
      Eigen::Matrix2d sys;
      sys.row(0) = verts.col(j).transpose();
      sys.row(1) = verts.col((j + 1) % k).transpose();
      if (std::abs(sys.determinant()) < 1e-14)
        throw error("polygon vertices must be distinct and not collinear with the origin");
      normals.col(j) = sys.partialPivLu().solve(Eigen::Vector2d::Ones());
    }
    for (Index j = 0; j < k; ++j)
      for (Index i = 0; i < k; ++i)
        if (normals.col(j).dot(verts.col(i)) > 1.0 + 1e-12)
          throw error("polygon vertices do not form a convex symmetric ball");
    return Norm(Polygon{verts, normals});
  }

  static Norm ellipsoid(const Mat& gram)
  {
    if (gram.rows() != gram.cols() || gram.rows() == 0)
      throw error("ellipsoid norm needs a square Gram matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gram + gram.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw error("ellipsoid Gram matrix must be positive definite");
    return Norm(Ellipsoid{gram, gram.inverse()});
  }

  Index dim() const
  {
    return std::visit(
        [](const auto& n) -> Index {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>)
            return n.scale.size();
          else if constexpr (std::is_same_v<T, Polygon>)
            return 2;
          else
            return n.gram.rows();
        },
        impl_);
  }

  double norm(const Vec& x) const
  {
    check_dim(x);
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>)
            return lr_norm(n.scale.cwiseProduct(x), n.r);
          else if constexpr (std::is_same_v<T, Polygon>)
            return std::max(0.0, (n.normals.transpose() * x).maxCoeff());
          else
            return std::sqrt(std::max(0.0, x.dot(n.gram * x)));
        },
        impl_);
  }

  double operator()(const Vec& x) const { return norm(x); }

  Norm dual() const
  {
    return std::visit(
        [](const auto& n) -> Norm {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>)
            return Norm(ScaledLr{n.scale.cwiseInverse(), conjugate_exponent(n.r)});
          else if constexpr (std::is_same_v<T, Polygon>)
            return Norm(Polygon{n.normals, n.vertices});
          else
            return Norm(Ellipsoid{n.inverse, n.gram});
        },
        impl_);
  }

  double dual_norm(const Vec& y) const { return dual().norm(y); }

  /// A maximiser of <y, b> over the unit ball.
  Vec support(const Vec& y) const
  {
    check_dim(y);
    return std::visit(
        [&](const auto& n) -> Vec {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>)
            return scaled_support(n, y);
          else if constexpr (std::is_same_v<T, Polygon>) {
            Index best = 0;
            (n.vertices.transpose() * y).maxCoeff(&best);
            return n.vertices.col(best);
          } else {
            const double s = std::sqrt(std::max(0.0, y.dot(n.inverse * y)));
            if (s == 0.0)
              return unit_direction(0);
            return n.inverse * y / s;
          }
        },
        impl_);
  }

  /// Norming functional of x: dual norm 1 and <f, x> = ||x||.
  Vec norming(const Vec& x) const { return dual().support(x); }

  /// Extreme points of the unit ball, one per +- pair, when finitely many
  /// and at most `limit` of them.
  std::optional<std::vector<Vec>> ball_vertices(std::size_t limit = 1u << 14) const
  {
    const Index d = dim();
    if (d == 1)
      return std::vector<Vec>{unit_direction(0)};
    return std::visit(
        [&](const auto& n) -> std::optional<std::vector<Vec>> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>) {
            std::vector<Vec> out;
            if (n.r == 1.0) {
              for (Index i = 0; i < d; ++i) {
                Vec e = Vec::Zero(d);
                e(i) = 1.0 / n.scale(i);
                out.push_back(e);
              }
              return out;
            }
            if (std::isinf(n.r)) {
              if (d > 62 || (std::size_t{1} << (d - 1)) > limit)
                return std::nullopt;
              const std::size_t count = std::size_t{1} << (d - 1);
              for (std::size_t mask = 0; mask < count; ++mask) {
                Vec v(d);
                v(0) = 1.0 / n.scale(0);
                for (Index i = 1; i < d; ++i)
                  v(i) = ((mask >> (i - 1)) & 1u ? -1.0 : 1.0) / n.scale(i);
                out.push_back(v);
              }
              return out;
            }
            return std::nullopt;
          } else if constexpr (std::is_same_v<T, Polygon>) {
            std::vector<Vec> out;
            for (Index j = 0; j < n.vertices.cols() / 2; ++j)
              out.push_back(n.vertices.col(j));
            return out;
          } else {
            return std::nullopt;
          }
        },
        impl_);
  }

  /// G with ||x||^2 = x' G x, for Euclidean-type norms.
  std::optional<Mat> gram() const
  {
    return std::visit(
        [](const auto& n) -> std::optional<Mat> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>) {
            if (n.r == 2.0)
              return Mat(n.scale.array().square().matrix().asDiagonal());
            return std::nullopt;
          } else if constexpr (std::is_same_v<T, Ellipsoid>)
            return n.gram;
          else
            return std::nullopt;
        },
        impl_);
  }

  /// ||x|| depends only on |x_i| and is monotone in them.
  bool absolute() const { return std::holds_alternative<ScaledLr>(impl_); }

  const ScaledLr* as_lr() const { return std::get_if<ScaledLr>(&impl_); }

  std::string describe() const
  {
    std::ostringstream os;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ScaledLr>)
            os << "l_" << n.r << "^" << n.scale.size();
          else if constexpr (std::is_same_v<T, Polygon>)
            os << "polygon(" << n.vertices.cols() << " vertices)";
          else
            os << "ellipsoid^" << n.gram.rows();
        },
        impl_);
    return os.str();
  }

private:
  using Impl = std::variant<ScaledLr, Polygon, Ellipsoid>;
  explicit Norm(Impl impl) : impl_(std::move(impl)) {}

  void check_dim(const Vec& x) const
  {
    if (x.size() != dim())
      throw error("norm of dimension " + std::to_string(dim()) + " applied to a vector of size " +
                  std::to_string(x.size()));
  }

  Vec unit_direction(Index i) const
  {
    Vec e = Vec::Zero(dim());
    e(i) = 1.0;
    return e / norm(e);
  }

  Vec scaled_support(const ScaledLr& n, const Vec& y) const
  {
    const Vec z = y.cwiseQuotient(n.scale);
    const double zmax = z.cwiseAbs().maxCoeff();
    if (zmax == 0.0)
      return unit_direction(0);
    Vec c = Vec::Zero(z.size());
    if (n.r == 1.0) {
      Index i = 0;
      z.cwiseAbs().maxCoeff(&i);
      c(i) = z(i) > 0 ? 1.0 : -1.0;
    } else if (std::isinf(n.r)) {
      for (Index i = 0; i < z.size(); ++i)
        c(i) = z(i) >= 0 ? 1.0 : -1.0;
    } else {
      const double q = conjugate_exponent(n.r);
      const Vec zs = z / zmax;
      for (Index i = 0; i < z.size(); ++i)
        c(i) = (zs(i) >= 0 ? 1.0 : -1.0) * std::pow(std::abs(zs(i)), q - 1.0);
      c /= lr_norm(c, n.r);
    }
    return c.cwiseQuotient(n.scale);
  }

  Impl impl_;
};

/// Result of maximising |a' M b| over a in the dual ball of A and b in the
/// dual ball of B, i.e. the injective norm of M in A (x) B.
struct BilinearMax
{
  NormEstimate estimate;
  Vec alpha;
  Vec beta;
};

namespace detail {

// sup of the convex function h over the dual ball of a planar norm B,
// bounded from above through a circumscribed polygon with `sides` facets.
template <class H>
double planar_dual_ball_bound(const Norm& B, H&& h, int sides = 4096)
{
  std::vector<Eigen::Vector2d> dirs(static_cast<std::size_t>(sides));
  std::vector<double> rhs(static_cast<std::size_t>(sides));
  for (int k = 0; k < sides; ++k) {
    const double t = 2.0 * std::numbers::pi * k / sides;
    dirs[static_cast<std::size_t>(k)] = {std::cos(t), std::sin(t)};
    rhs[static_cast<std::size_t>(k)] = B.norm(Vec(dirs[static_cast<std::size_t>(k)]));
  }
  double best = 0.0;
  for (int k = 0; k < sides; ++k) {
    const auto k1 = static_cast<std::size_t>((k + 1) % sides);
    const auto k0 = static_cast<std::size_t>(k);
    Eigen::Matrix2d sys;
    sys.row(0) = dirs[k0].transpose();
    sys.row(1) = dirs[k1].transpose();
    const Eigen::Vector2d v = sys.inverse() * Eigen::Vector2d(rhs[k0], rhs[k1]);
    best = std::max(best, h(Vec(v)));
  }
  return best;
}

inline Mat sqrt_spd(const Mat& g)
{
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

} // namespace detail

inline BilinearMax injective_norm(const Mat& M, const Norm& A, const Norm& B, Rng& rng,
                                  int restarts = 32)
{
  if (M.rows() != A.dim() || M.cols() != B.dim())
    throw error("injective_norm: shape mismatch");
  BilinearMax res;
  res.alpha = A.norming(Vec::Unit(A.dim(), 0));
  res.beta = B.norming(Vec::Unit(B.dim(), 0));
  if (M.cwiseAbs().maxCoeff() == 0.0) {
    res.estimate = NormEstimate::exact(0.0, "zero");
    return res;
  }

  // lower: alternating maximisation over (alpha, beta)
  double lower = 0.0;
  auto climb = [&](Vec beta) {
    const double bn = B.dual_norm(beta);
    if (!(bn > 0.0))
      return;
    beta /= bn;
    double val = -1.0;
    Vec alpha;
    for (int it = 0; it < 200; ++it) {
      alpha = A.norming(M * beta);
      const Vec y = M.transpose() * alpha;
      beta = B.norming(y);
      const double nv = std::abs(alpha.dot(M * beta));
      if (nv <= val * (1.0 + 1e-15))
        break;
      val = nv;
    }
    if (val > lower) {
      lower = val;
      res.alpha = alpha;
      res.beta = beta;
    }
  };
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  climb(svd.matrixV().col(0));
  for (Index i = 0; i < B.dim(); ++i)
    climb(Vec::Unit(B.dim(), i));
  for (int r = 0; r < restarts; ++r)
    climb(gaussian_vec(rng, B.dim()));

  // upper bounds
  double upper = kInf;
  std::vector<std::string> tags{"alternating-max(" + std::to_string(restarts) + ")"};
  bool exact = false;
  auto take = [&](double v, const char* tag, bool is_exact) {
    if (v < upper) {
      upper = v;
      tags.resize(1);
      tags.emplace_back(tag);
    }
    exact = exact || is_exact;
  };

  const Norm Bd = B.dual();
  const Norm Ad = A.dual();
  if (auto verts = Bd.ball_vertices()) {
    double best = 0.0;
    for (const auto& v : *verts) {
      const double val = A.norm(M * v);
      if (val > best) {
        best = val;
        if (val > lower) {
          lower = val;
          res.beta = v;
          res.alpha = A.norming(M * v);
        }
      }
    }
    take(best, "dual-ball-vertices", true);
  } else if (auto verts2 = Ad.ball_vertices()) {
    double best = 0.0;
    for (const auto& v : *verts2) {
      const double val = B.norm(M.transpose() * v);
      if (val > best) {
        best = val;
        if (val > lower) {
          lower = val;
          res.alpha = v;
          res.beta = B.norming(M.transpose() * v);
        }
      }
    }
    take(best, "dual-ball-vertices", true);
  } else if (auto ga = A.gram(), gb = B.gram(); ga && gb) {
    const Mat T = detail::sqrt_spd(*ga) * M * detail::sqrt_spd(*gb);
    Eigen::JacobiSVD<Mat> s2(T);
    take(s2.singularValues()(0), "spectral", true);
  }

  if (!exact) {
    double nuclear = 0.0;
    for (Index r = 0; r < svd.singularValues().size(); ++r)
      nuclear += svd.singularValues()(r) * A.norm(svd.matrixU().col(r)) *
                 B.norm(svd.matrixV().col(r));
    take(nuclear, "nuclear-bound", false);
    if (A.absolute()) {
      Vec rn(M.rows());
      for (Index s = 0; s < M.rows(); ++s)
        rn(s) = B.norm(M.row(s).transpose());
      take(A.norm(rn), "row-bound", false);
    }
    if (B.absolute()) {
      Vec cn(M.cols());
      for (Index i = 0; i < M.cols(); ++i)
        cn(i) = A.norm(M.col(i));
      take(B.norm(cn), "column-bound", false);
    }
    if (B.dim() == 2)
      take(detail::planar_dual_ball_bound(B, [&](const Vec& b) { return A.norm(M * b); }),
           "circumscribed-polygon", false);
    else if (A.dim() == 2)
      take(detail::planar_dual_ball_bound(
               A, [&](const Vec& a) { return B.norm(M.transpose() * a); }),
           "circumscribed-polygon", false);
  }

  res.estimate.upper = upper;
  res.estimate.lower = exact ? upper : std::min(lower, upper);
  res.estimate.method_tags = std::move(tags);
  return res;
}

/// Projective norm of M in A (x) B: inf sum ||a_r|| ||b_r|| over decompositions.
inline NormEstimate projective_norm(const Mat& M, const Norm& A, const Norm& B, Rng& rng,
                                    int restarts = 32)
{
  if (M.rows() != A.dim() || M.cols() != B.dim())
    throw error("projective_norm: shape mismatch");
  if (M.cwiseAbs().maxCoeff() == 0.0)
    return NormEstimate::exact(0.0, "zero");

  const std::string cap = "decomposition-length<=" + std::to_string(M.rows() * M.cols());
  double upper = kInf;
  std::string upper_tag;
  auto take_upper = [&](double v, const char* tag) {
    if (v < upper) {
      upper = v;
      upper_tag = tag;
    }
  };
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  {
    double nuclear = 0.0;
    for (Index r = 0; r < svd.singularValues().size(); ++r)
      nuclear += svd.singularValues()(r) * A.norm(svd.matrixU().col(r)) *
                 B.norm(svd.matrixV().col(r));
    take_upper(nuclear, "svd-decomposition");
  }
  double rows = 0.0, cols = 0.0;
  for (Index s = 0; s < M.rows(); ++s)
    rows += A.norm(Vec::Unit(M.rows(), s)) * B.norm(M.row(s).transpose());
  for (Index i = 0; i < M.cols(); ++i)
    cols += B.norm(Vec::Unit(M.cols(), i)) * A.norm(M.col(i));
  take_upper(rows, "row-decomposition");
  take_upper(cols, "column-decomposition");

  // lower: duality against injective-dual witnesses
  const Norm Ad = A.dual();
  const Norm Bd = B.dual();
  double lower = 0.0;
  std::string lower_tag;
  auto take_lower = [&](const Mat& W, const char* tag) {
    const double pairing = std::abs((W.array() * M.array()).sum());
    if (pairing == 0.0)
      return;
    const double inj = injective_norm(W, Ad, Bd, rng, restarts / 4 + 1).estimate.upper;
    if (inj > 0.0 && pairing / inj > lower) {
      lower = pairing / inj;
      lower_tag = tag;
    }
  };
  {
    const auto inj = injective_norm(M, A, B, rng, restarts);
    const double v = std::abs(inj.alpha.dot(M * inj.beta));
    if (v > lower) {
      lower = v;
      lower_tag = "injective-witness";
    }
  }
  if (auto ga = A.gram(), gb = B.gram(); ga && gb) {
    const Mat sa = detail::sqrt_spd(*ga), sb = detail::sqrt_spd(*gb);
    Eigen::JacobiSVD<Mat> s2(sa * M * sb, Eigen::ComputeThinU | Eigen::ComputeThinV);
    take_upper(s2.singularValues().sum(), "trace-norm");
    take_lower(sa * s2.matrixU() * s2.matrixV().transpose() * sb, "trace-dual");
  }
  {
    Vec rn(M.rows());
    Mat W(M.rows(), M.cols());
    for (Index s = 0; s < M.rows(); ++s)
      rn(s) = B.norm(M.row(s).transpose());
    const Vec c = A.norming(rn);
    for (Index s = 0; s < M.rows(); ++s)
      W.row(s) = c(s) * B.norming(M.row(s).transpose()).transpose();
    take_lower(W, "row-dual");
  }
  {
    Vec cn(M.cols());
    Mat W(M.rows(), M.cols());
    for (Index i = 0; i < M.cols(); ++i)
      cn(i) = A.norm(M.col(i));
    const Vec c = B.norming(cn);
    for (Index i = 0; i < M.cols(); ++i)
      W.col(i) = c(i) * A.norming(M.col(i));
    take_lower(W, "column-dual");
  }
  NormEstimate est;
  est.upper = upper;
  est.lower = std::min(lower, upper);
  if (upper - est.lower <= 1e-13 * std::max(1.0, upper))
    est.lower = upper;
  est.method_tags = {upper_tag, "duality:" + lower_tag, cap};
  return est;
}

} // namespace lpq
