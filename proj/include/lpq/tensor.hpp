#pragma once

#include "lpq/quantization.hpp"

#include <future>
#include <optional>

namespace lpq {

/// Data fixing the finite model of the p-convex tensor product:
/// E, F hosts over X, a diamond X x X -> T, N copies of T routed through
/// disjoint isometries I_k, and the space Y on which elements U live.
struct TensorModel
{
  HostPtr e, f;
  DiamondOp diamond;
  std::size_t copies = 8;
  SpacePtr y;

  static TensorModel make(HostPtr e, HostPtr f, SpacePtr y, std::size_t copies = 8)
  {
    if (!e->base()->same_as(*f->base()))
      throw error("tensor factors must live over the same base space");
    if (e->p() != f->p())
      throw error("tensor factors must share the exponent p");
    auto d = DiamondOp::canonical(e->base(), e->p());
    return {std::move(e), std::move(f), std::move(d), copies, std::move(y)};
  }

  double p() const { return e->p(); }
  Index de() const { return e->underlying_dim(); }
  Index df() const { return f->underlying_dim(); }
  Index dim_t() const { return static_cast<Index>(diamond.target()->dim()); }
  Index dim_x() const { return static_cast<Index>(e->base()->dim()); }
  CopiedSpace work() const { return CopiedSpace(diamond.target(), copies); }

  TensorModel with_copies(std::size_t n) const
  {
    TensorModel m = *this;
    m.copies = n;
    return m;
  }
  TensorModel with_y(SpacePtr space) const
  {
    TensorModel m = *this;
    m.y = std::move(space);
    return m;
  }

  HostPtr host() const { return QuantizedSpace::tensor(e, f, y); }

  void check_element(const Mat& u) const
  {
    if (static_cast<std::size_t>(u.rows()) != y->dim() || u.cols() != de() * df())
      throw error("tensor element of shape " + std::to_string(u.rows()) + "x" +
                  std::to_string(u.cols()) + " does not fit L(Y)(E (x) F) with dim Y = " +
                  std::to_string(y->dim()) + ", dim E (x) F = " + std::to_string(de() * df()));
  }
};

struct RepTerm
{
  std::size_t copy = 0;
  Mat u; // over X, dim X x dim E
  Mat v; // over X, dim X x dim F
};

/// U = a . sum_k I_k (u_k <> v_k), with a : L_p(N x T) -> L_p(Y).
struct Representation
{
  Mat a;
  std::vector<RepTerm> terms;
  /// Certified upper bound on ||a|| when known better than the generic
  /// bracket (block structure, products).
  std::optional<double> a_norm_bound;
};

/// Rows of u <> v placed into copy k of N x T, stacked over all terms.
inline Mat stacked_products(const TensorModel& m, const std::vector<RepTerm>& terms)
{
  const Index dt = m.dim_t();
  Mat w = Mat::Zero(dt * static_cast<Index>(m.copies), m.de() * m.df());
  for (const auto& t : terms) {
    if (t.copy >= m.copies)
      throw error("representation term routed to copy " + std::to_string(t.copy) +
                  " but only " + std::to_string(m.copies) + " copies exist");
    w.middleRows(static_cast<Index>(t.copy) * dt, dt) += m.diamond.apply(t.u, t.v);
  }
  return w;
}

inline Mat value(const TensorModel& m, const Representation& r)
{
  std::vector<bool> used(m.copies, false);
  for (const auto& t : r.terms) {
    if (t.copy < m.copies && used[t.copy])
      throw error("representation uses copy " + std::to_string(t.copy) + " twice");
    if (t.copy < m.copies)
      used[t.copy] = true;
  }
  if (r.terms.empty())
    return Mat::Zero(static_cast<Index>(m.y->dim()), m.de() * m.df());
  return r.a * stacked_products(m, r.terms);
}

struct CostParts
{
  double a_norm = 0.0;
  double terms = 0.0;
  double cost = 0.0;
};

namespace detail {

inline double term_weight(const TensorModel& m, const RepTerm& t, const AmpOptions& amp)
{
  return amplified_norm(*m.e, t.u, amp).upper * amplified_norm(*m.f, t.v, amp).upper;
}

inline double a_norm_upper(const TensorModel& m, const Mat& a)
{
  return operator_norm_upper(a, m.work().space()->weights(), m.y->weights(), m.p());
}

inline double combine(double a_norm, const std::vector<double>& tw, double p)
{
  double s = 0.0;
  for (double t : tw)
    s += std::pow(t, p);
  return a_norm * std::pow(s, 1.0 / p);
}

} // namespace detail

/// upper||a|| * (sum_k ||u_k||^p ||v_k||^p)^{1/p}
inline CostParts cost(const TensorModel& m, const Representation& r, const AmpOptions& amp = {})
{
  CostParts c;
  if (r.terms.empty())
    return c;
  c.a_norm = r.a_norm_bound ? *r.a_norm_bound : detail::a_norm_upper(m, r.a);
  double s = 0.0;
  for (const auto& t : r.terms)
    s += std::pow(detail::term_weight(m, t, amp), m.p());
  c.terms = std::pow(s, 1.0 / m.p());
  c.cost = c.a_norm * c.terms;
  return c;
}

/// Expansion of U into terms xi (x) x (x) y from two nested SVDs, each term
/// routed through its own copy.
inline Representation decompose(const TensorModel& m, const Mat& U)
{
  m.check_element(U);
  const double p = m.p();
  const Index ny = U.rows(), de = m.de(), df = m.df(), dt = m.dim_t();
  Representation rep;
  rep.a = Mat::Zero(ny, dt * static_cast<Index>(m.copies));
  if (U.cwiseAbs().maxCoeff() == 0.0)
    return rep;

  const Vec wy = m.y->weights().array().pow(1.0 / p).matrix();
  const Mat scaled = wy.asDiagonal() * U;
  Eigen::JacobiSVD<Mat> outer(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double top = outer.singularValues()(0);

  struct Piece
  {
    Vec xi;
    Vec x, y;
  };
  std::vector<Piece> pieces;
  for (Index r = 0; r < outer.singularValues().size(); ++r) {
    const double s = outer.singularValues()(r);
    if (s <= 1e-13 * top)
      break;
    const Vec xi = outer.matrixU().col(r).cwiseQuotient(wy) * s;
    Mat mr(de, df);
    for (Index i = 0; i < de; ++i)
      mr.row(i) = outer.matrixV().col(r).segment(i * df, df).transpose();
    Eigen::JacobiSVD<Mat> inner(mr, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (Index j = 0; j < inner.singularValues().size(); ++j) {
      const double t = inner.singularValues()(j);
      if (t <= 1e-13 * inner.singularValues()(0))
        break;
      Vec x = inner.matrixU().col(j), y = inner.matrixV().col(j);
      const double nx = m.e->underlying().norm(x), ny2 = m.f->underlying().norm(y);
      pieces.push_back({xi * (t * nx * ny2), x / nx, y / ny2});
    }
  }
  if (pieces.size() > m.copies)
    throw error("insufficient copies: the decomposition needs " + std::to_string(pieces.size()) +
                " terms but the model has " + std::to_string(m.copies) + " copies");

  // nu = chi_hat of the first coordinate of X; tau = nu <> nu has norm one
  const Index nx = m.dim_x();
  const Vec nu = Vec::Unit(nx, 0) / std::pow(m.e->base()->weight(0), 1.0 / p);
  const Index hit = static_cast<Index>(m.diamond.index(0, 0));
  const double tau = m.diamond.apply(nu, nu)(hit);
  const Norm ly = Norm::lp_base(m.y->weights(), p);
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& pc = pieces[k];
    const double tk = ly.norm(pc.xi);
    const double root = std::sqrt(tk);
    rep.terms.push_back({k, root * nu * pc.x.transpose(), root * nu * pc.y.transpose()});
    rep.a.col(static_cast<Index>(k) * dt + hit) = pc.xi / (tk * tau);
  }
  return rep;
}

struct UpperOptions
{
  int budget = 50;    // proposals per chain
  int restarts = 64;  // independent chains started from the decomposition
  std::uint64_t seed = 0;
  AmpOptions amp{0, 0};
};

struct UpperResult
{
  double value = 0.0;
  Representation rep;
  double seed_cost = 0.0;
  int accepted = 0;
};

namespace detail {

// Least-norm a with a W = U; empty when U is not in the row space of W.
inline std::optional<Mat> refit(const Mat& W, const Mat& U)
{
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(W.transpose());
  Mat a = cod.solve(U.transpose()).transpose();
  const double res = (a * W - U).cwiseAbs().maxCoeff();
  if (!(res <= 1e-12 * (1.0 + U.cwiseAbs().maxCoeff())))
    return std::nullopt;
  return a;
}

} // namespace detail

/// Cost minimisation over representations, started from decompose(U).
/// Every chain follows a seed-determined proposal sequence and only accepts
/// improvements, so the result is non-increasing in the budget.
inline UpperResult tensor_norm_upper(const TensorModel& m, const Mat& U,
                                     const UpperOptions& opt = {})
{
  UpperResult out;
  out.rep = decompose(m, U);
  if (out.rep.terms.empty())
    return out;
  const double p = m.p();
  const Index dt = m.dim_t();
  out.seed_cost = cost(m, out.rep, opt.amp).cost;
  out.value = out.seed_cost;

  for (int chain = 0; chain < opt.restarts && opt.budget > 0; ++chain) {
    Rng rng = derive_rng(opt.seed, 0x7000 + static_cast<std::uint64_t>(chain));
    Representation cur = out.rep.terms.size() ? decompose(m, U) : out.rep;
    std::vector<double> tw;
    for (const auto& t : cur.terms)
      tw.push_back(detail::term_weight(m, t, opt.amp));
    double a_norm = detail::a_norm_upper(m, cur.a);
    double best = detail::combine(a_norm, tw, p);
    double step = 0.3;
    const std::size_t nterms = cur.terms.size();
    for (int it = 0; it < opt.budget; ++it) {
      const double move = uniform01(rng);
      Representation cand = cur;
      std::vector<double> ctw = tw;
      double ca = a_norm;
      if (move < 0.55) {
        // perturb one factor of one term, then refit a
        const std::size_t k = uniform_index(rng, nterms);
        auto& t = cand.terms[k];
        Mat& target = uniform01(rng) < 0.5 ? t.u : t.v;
        const double scale = std::max(1e-12, target.norm());
        target += step * scale * gaussian_mat(rng, target.rows(), target.cols()) /
                  std::sqrt(static_cast<double>(target.size()));
        auto a = detail::refit(stacked_products(m, cand.terms), U);
        if (!a)
          continue;
        cand.a = *a;
        ctw[k] = detail::term_weight(m, t, opt.amp);
        ca = detail::a_norm_upper(m, cand.a);
      } else if (move < 0.85) {
        // move a inside the affine set {a : a W = U}
        const Mat W = stacked_products(m, cand.terms);
        Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeFullU);
        Index rank = 0;
        const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        for (Index i = 0; i < svd.singularValues().size(); ++i)
          if (svd.singularValues()(i) > 1e-12 * smax)
            ++rank;
        const Mat basis = svd.matrixU().leftCols(rank);
        Mat g = gaussian_mat(rng, cand.a.rows(), cand.a.cols());
        g -= (g * basis) * basis.transpose();
        const double scale = std::max(1e-12, cand.a.norm());
        cand.a += step * scale * g / std::sqrt(static_cast<double>(g.size()));
        if ((cand.a * W - U).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + U.cwiseAbs().maxCoeff()))
          continue;
        ca = detail::a_norm_upper(m, cand.a);
      } else {
        // rescale one term against its block of a
        const std::size_t k = uniform_index(rng, nterms);
        const double s = std::exp(step * gaussian_vec(rng, 1)(0));
        cand.terms[k].u *= s;
        cand.terms[k].v *= s;
        cand.a.middleCols(static_cast<Index>(cand.terms[k].copy) * dt, dt) /= s * s;
        ctw[k] = tw[k] * s * s;
        ca = detail::a_norm_upper(m, cand.a);
      }
      const double c = detail::combine(ca, ctw, p);
      if (c < best * (1.0 - 1e-12)) {
        best = c;
        cur = std::move(cand);
        tw = std::move(ctw);
        a_norm = ca;
        step = std::min(1.0, step * 1.3);
        ++out.accepted;
      } else {
        step = std::max(1e-4, step * 0.97);
      }
    }
    if (best < out.value) {
      // re-evaluate from scratch so the reported cost is exactly cost(rep)
      const double exact = cost(m, cur, opt.amp).cost;
      if (exact < out.value) {
        out.value = exact;
        out.rep = std::move(cur);
      }
    }
  }
  return out;
}

/// A bilinear map rho : E x F -> G given by its linear map R on E (x) F
/// (rows: coordinates of G, columns: i * dim F + j), with a verified bound
/// on ||rho_inf||.
struct LowerCertificate
{
  enum class Type
  {
    Scalar,
    IdentityVectorValued,
  };
  Type type = Type::Scalar;
  Vec f, g;        // scalar certificates: functionals on E and F
  Mat rho;         // R as a matrix
  Norm target = Norm::lr(1, 1.0);
  double verified_amp_bound = 0.0;
  std::vector<std::string> method_tags;

  /// ||R_inf(U)|| in L_p(Y)G.
  double image_norm(const TensorModel& m, const Mat& U) const
  {
    const Mat img = U * rho.transpose();
    Vec rows(img.rows());
    for (Index s = 0; s < img.rows(); ++s)
      rows(s) = target.norm(img.row(s).transpose());
    return Norm::lp_base(m.y->weights(), m.p()).norm(rows);
  }

  double bound(const TensorModel& m, const Mat& U) const
  {
    if (!(verified_amp_bound > 0.0))
      return 0.0;
    return image_norm(m, U) / verified_amp_bound;
  }
};

namespace detail {

inline Vec kron(const Vec& a, const Vec& b)
{
  Vec out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Sampled check of ||(id (x) f) u||_p <= ||f||_* upper||u|| on a host.
inline bool functional_bound_holds(const HostPtr& h, const Vec& f, double fnorm, Rng& rng,
                                   int samples)
{
  const auto n = static_cast<Index>(h->base()->dim());
  const Norm base = h->base_norm();
  for (int s = 0; s < samples; ++s) {
    Mat u = gaussian_mat(rng, n, h->underlying_dim());
    if (s == 0)
      u = Vec::Unit(n, 0) * h->underlying().support(f).transpose();
    AmpOptions amp{4, rng()};
    const double lhs = base.norm(u * f);
    const double rhs = fnorm * amplified_norm(*h, u, amp).upper;
    if (lhs > rhs * (1.0 + 1e-9) + 1e-12)
      return false;
  }
  return true;
}

} // namespace detail

/// Scalar certificate (x, y) -> f(x) g(y) into the one-dimensional L-space,
/// verified on samples; nullopt when the bound cannot be verified.
inline std::optional<LowerCertificate> scalar_certificate(const TensorModel& m, const Vec& f,
                                                          const Vec& g, std::uint64_t seed = 0)
{
  if (f.size() != m.de() || g.size() != m.df())
    throw error("scalar certificate: functional dimensions do not match E and F");
  LowerCertificate c;
  c.type = LowerCertificate::Type::Scalar;
  c.f = f;
  c.g = g;
  c.rho = detail::kron(f, g).transpose();
  const double fn = m.e->underlying().dual_norm(f), gn = m.f->underlying().dual_norm(g);
  c.verified_amp_bound = fn * gn;
  c.method_tags = {"scalar f(x)g(y)", "bound: ||f||*||g||*"};
  if (!(c.verified_amp_bound > 0.0))
    return std::nullopt;
  Rng rng = derive_rng(seed, 0x9c);
  if (!detail::functional_bound_holds(m.e, f, fn, rng, 16) ||
      !detail::functional_bound_holds(m.f, g, gn, rng, 16))
    return std::nullopt;
  c.method_tags.emplace_back("verified: sampled functional bounds");
  return c;
}

/// Identity into the vector-valued structure L_p(Y; l_p(E (x) F)); offered
/// only for vector-valued hosts with weighted l_p underlying norms, where
/// the bound ||theta_inf|| = 1 holds exactly.
inline std::optional<LowerCertificate> identity_vv_certificate(const TensorModel& m,
                                                               std::uint64_t seed = 0)
{
  const auto* le = m.e->underlying().as_lr();
  const auto* lf = m.f->underlying().as_lr();
  if (m.e->kind() != Kind::VectorValued || m.f->kind() != Kind::VectorValued || !le || !lf ||
      le->r != m.p() || lf->r != m.p())
    return std::nullopt;
  LowerCertificate c;
  c.type = LowerCertificate::Type::IdentityVectorValued;
  const Index d = m.de() * m.df();
  c.rho = Mat::Identity(d, d);
  c.target = Norm::scaled(detail::kron(le->scale, lf->scale), m.p());
  c.verified_amp_bound = 1.0;
  c.method_tags = {"identity into vector-valued l_p(E (x) F)"};
  // theta contractivity on samples: ||u <> v|| <= ||u|| ||v||
  Rng rng = derive_rng(seed, 0x9d);
  const TensorModel mt = m.with_y(m.diamond.target());
  for (int s = 0; s < 16; ++s) {
    const Mat u = gaussian_mat(rng, m.dim_x(), m.de()), v = gaussian_mat(rng, m.dim_x(), m.df());
    const double lhs = c.image_norm(mt, m.diamond.apply(u, v));
    const double rhs = amplified_norm(*m.e, u).upper * amplified_norm(*m.f, v).upper;
    if (lhs > rhs * (1.0 + 1e-9))
      return std::nullopt;
  }
  c.method_tags.emplace_back("verified: sampled theta contractivity");
  return c;
}

/// Scalar certificate maximising ||(id (x) f (x) g) U|| / (||f||* ||g||*)
/// by alternating maximisation.
inline std::optional<LowerCertificate> best_scalar_certificate(const TensorModel& m, const Mat& U,
                                                               int restarts = 8,
                                                               std::uint64_t seed = 0)
{
  m.check_element(U);
  const Index de = m.de(), df = m.df(), ny = U.rows();
  const Norm ly = Norm::lp_base(m.y->weights(), m.p());
  const Norm& E = m.e->underlying();
  const Norm& F = m.f->underlying();
  Rng rng = derive_rng(seed, 0x9e);
  auto contract_g = [&](const Vec& g) {
    Mat a(ny, de);
    for (Index s = 0; s < ny; ++s)
      for (Index i = 0; i < de; ++i)
        a(s, i) = U.row(s).segment(i * df, df).dot(g);
    return a;
  };
  auto contract_f = [&](const Vec& f) {
    Mat b = Mat::Zero(ny, df);
    for (Index s = 0; s < ny; ++s)
      for (Index i = 0; i < de; ++i)
        b.row(s) += f(i) * U.row(s).segment(i * df, df);
    return b;
  };
  double best = -1.0;
  Vec bf, bg;
  for (int r = 0; r <= restarts; ++r) {
    Vec g = r == 0 ? Vec::Unit(df, 0) : gaussian_vec(rng, df);
    if (r == 0 && U.cwiseAbs().maxCoeff() > 0.0) {
      Eigen::JacobiSVD<Mat> svd(U, Eigen::ComputeThinV);
      Mat top(de, df);
      for (Index i = 0; i < de; ++i)
        top.row(i) = svd.matrixV().col(0).segment(i * df, df).transpose();
      Eigen::JacobiSVD<Mat> s2(top, Eigen::ComputeThinV);
      g = s2.matrixV().col(0);
    }
    g /= F.dual_norm(g);
    Vec f = Vec::Unit(de, 0);
    double val = -1.0;
    for (int it = 0; it < 100; ++it) {
      f = injective_norm(contract_g(g), ly, E, rng, 2).beta;
      g = injective_norm(contract_f(f), ly, F, rng, 2).beta;
      const double nv = ly.norm(contract_f(f) * g);
      if (nv <= val * (1.0 + 1e-14))
        break;
      val = nv;
    }
    const double ratio = val / (E.dual_norm(f) * F.dual_norm(g));
    if (ratio > best) {
      best = ratio;
      bf = f;
      bg = g;
    }
  }
  return scalar_certificate(m, bf, bg, seed);
}

struct LowerResult
{
  double value = 0.0;
  std::optional<LowerCertificate> cert;
  std::vector<std::string> warnings;
};

inline LowerResult tensor_norm_lower(const TensorModel& m, const Mat& U,
                                     const std::vector<LowerCertificate>& certs)
{
  LowerResult out;
  if (certs.empty()) {
    out.warnings.emplace_back("no certificates: lower bound 0");
    return out;
  }
  for (const auto& c : certs) {
    if (!(c.verified_amp_bound > 0.0))
      throw error("certificate with non-positive verified amplification bound");
    const double v = c.bound(m, U);
    if (!out.cert || v > out.value) {
      out.value = v;
      out.cert = c;
    }
  }
  return out;
}

struct TensorOptions
{
  std::size_t n_min = 1;
  std::size_t n_max = 8;
  UpperOptions upper;
  int cert_restarts = 8;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool force_j_route = false;
  std::size_t y_copies = 2;
};

struct TensorNormResult
{
  NormEstimate estimate;
  Representation best_rep;
  std::optional<LowerCertificate> best_cert;
  std::size_t copies_used = 0;
  std::vector<std::pair<std::size_t, double>> trace; // (N, best upper with <= N copies)
  std::string route;
  TensorModel model; // the model the representation lives in
};

/// Bracket on ||U||_{pL}. A convenient (or copied) Y is handled directly;
/// otherwise U is embedded by J into N copies of Y and the induced norm is
/// computed there.
inline TensorNormResult tensor_norm(const TensorModel& m0, const Mat& U,
                                    const TensorOptions& opt = {})
{
  m0.check_element(U);
  const bool direct = !opt.force_j_route && (m0.y->convenient() || m0.y->is_copied());
  TensorModel m = m0;
  Mat work_u = U;
  if (!direct) {
    CopiedSpace cy(m0.y, opt.y_copies);
    m = m0.with_y(cy.space());
    work_u = j_rows(U, opt.y_copies);
  }
  if (opt.n_min < 1 || opt.n_max < opt.n_min)
    throw error("copies range must satisfy 1 <= n_min <= n_max");

  const std::size_t count = opt.n_max - opt.n_min + 1;
  std::vector<std::optional<UpperResult>> per_n(count);
  auto run = [&](std::size_t idx) {
    const std::size_t n = opt.n_min + idx;
    UpperOptions uo = opt.upper;
    uo.seed = derive_seed(opt.seed, 0x100 + n);
    try {
      per_n[idx] = tensor_norm_upper(m.with_copies(n), work_u, uo);
    } catch (const error& e) {
      if (std::string(e.what()).find("insufficient copies") == std::string::npos)
        throw;
    }
  };
  if (opt.workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      run(i);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t b = 0; b < count; b += opt.workers) {
      jobs.clear();
      for (std::size_t i = b; i < std::min(count, b + opt.workers); ++i)
        jobs.push_back(std::async(std::launch::async, run, i));
      for (auto& j : jobs)
        j.get();
    }
  }

  TensorNormResult res{{}, {}, {}, 0, {}, direct ? "direct" : "induced-by-J", m.with_copies(opt.n_max)};
  double running = kInf;
  std::optional<Representation> best;
  std::size_t best_n = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = opt.n_min + i;
    if (per_n[i] && per_n[i]->value < running) {
      running = per_n[i]->value;
      best = per_n[i]->rep;
      best_n = n;
    }
    res.trace.emplace_back(n, running);
  }
  if (best) {
    // pad a with zero columns so the representation lives in n_max copies
    Representation r = *best;
    const Index dt = m.dim_t();
    Mat a = Mat::Zero(r.a.rows(), dt * static_cast<Index>(opt.n_max));
    a.leftCols(r.a.cols()) = r.a;
    r.a = std::move(a);
    res.best_rep = std::move(r);
  }
  res.copies_used = best_n;

  std::vector<LowerCertificate> certs;
  if (auto c = best_scalar_certificate(m, work_u, opt.cert_restarts, opt.seed))
    certs.push_back(*c);
  if (auto c = identity_vv_certificate(m, opt.seed))
    certs.push_back(*c);
  const auto low = tensor_norm_lower(m, work_u, certs);
  res.best_cert = low.cert;

  res.estimate.upper = running;
  res.estimate.lower = std::min(low.value, running);
  if (std::isfinite(running) && running - low.value <= 1e-13 * std::max(1.0, running))
    res.estimate.lower = running;
  res.estimate.method_tags = {
      "upper: representation search (budget " + std::to_string(opt.upper.budget) + " x " +
          std::to_string(opt.upper.restarts) + " chains)",
      std::string("lower: ") +
          (low.cert ? low.cert->method_tags.front() : std::string("no certificate")),
      "route: " + res.route};
  for (const auto& w : low.warnings)
    res.estimate.method_tags.push_back("warning: " + w);
  return res;
}

struct FactorizationReport
{
  NormEstimate rho, rho_bar, R, R_bar;
  bool consistent = true;
  double tolerance = 1e-3;
  std::vector<std::string> notes;
};

/// Brackets ||rho_inf||, ||rho_bar_inf||, ||R_inf||, ||R_bar_inf|| for a
/// scalar certificate and checks the chain rho_bar = rho, R <= R_bar, R = rho.
inline FactorizationReport universal_factorization_check(const TensorModel& m,
                                                         const LowerCertificate& cert,
                                                         int samples = 16,
                                                         std::uint64_t seed = 0,
                                                         double tol = 1e-3,
                                                         const UpperOptions& upper = {8, 2, 0, {0, 0}})
{
  if (cert.type != LowerCertificate::Type::Scalar)
    throw error("universal_factorization_check supports scalar certificates");
  FactorizationReport rep;
  rep.tolerance = tol;
  const double p = m.p();
  const Norm& E = m.e->underlying();
  const Norm& F = m.f->underlying();
  const double fn = E.dual_norm(cert.f), gn = F.dual_norm(cert.g);
  const double bound = fn * gn;
  Rng rng = derive_rng(seed, 0xfa);
  const auto nx = m.dim_x();
  const Norm lx = m.e->base_norm();
  const std::size_t copies = std::max<std::size_t>(2, m.copies);
  CopiedSpace cx(m.e->base(), copies);
  const HostPtr ebar = m.e->rebased(cx.space());
  const HostPtr fbar = m.f->rebased(cx.space());
  const Norm lxx = ebar->base_norm();

  if (bound == 0.0) {
    rep.rho = rep.rho_bar = rep.R = rep.R_bar = NormEstimate::exact(0.0, "zero map");
    return rep;
  }
  const Vec xf = E.support(cert.f), yg = F.support(cert.g);
  const Vec nu = Vec::Unit(nx, 0) / std::pow(m.e->base()->weight(0), 1.0 / p);

  // rho_inf(u, v) = (id (x) f)u <> (id (x) g)v, norm ||uf|| ||vg||
  double lo = 0.0, lo_bar = 0.0;
  for (int s = 0; s <= samples; ++s) {
    Mat u = gaussian_mat(rng, nx, m.de()), v = gaussian_mat(rng, nx, m.df());
    if (s == 0) {
      u = nu * xf.transpose();
      v = nu * yg.transpose();
    }
    AmpOptions amp{8, rng()};
    const double nu_ = amplified_norm(*m.e, u, amp).upper;
    const double nv_ = amplified_norm(*m.f, v, amp).upper;
    if (nu_ > 0 && nv_ > 0)
      lo = std::max(lo, lx.norm(u * cert.f) * lx.norm(v * cert.g) / (nu_ * nv_));
    // the bar version acts on N copies through J(Q . <> Q .)
    Mat ub = gaussian_mat(rng, nx * static_cast<Index>(copies), m.de());
    Mat vb = gaussian_mat(rng, nx * static_cast<Index>(copies), m.df());
    if (s == 0) {
      ub = j_rows(u, copies);
      vb = j_rows(v, copies);
    }
    const double nub = amplified_norm(*ebar, ub, amp).upper;
    const double nvb = amplified_norm(*fbar, vb, amp).upper;
    const double img = lx.norm(q_rows(ub, nx) * cert.f) * lx.norm(q_rows(vb, nx) * cert.g);
    if (nub > 0 && nvb > 0)
      lo_bar = std::max(lo_bar, img / (nub * nvb));
    (void)lxx;
  }
  rep.rho = {std::min(lo, bound), bound, {"upper: ||f||* ||g||*", "lower: sampled"}};
  rep.rho_bar = {std::min(lo_bar, bound), bound,
                 {"upper: ||Q|| ||f||* ||g||*", "lower: sampled incl. J-images"}};

  // R_inf against computed tensor norms: ||R U|| / upper(U)
  double lr = 0.0, lr_bar = 0.0;
  const TensorModel mt = m;
  for (int s = 0; s <= samples / 4; ++s) {
    Mat U;
    if (s == 0) {
      Vec xi = Vec::Unit(static_cast<Index>(m.y->dim()), 0) /
               std::pow(m.y->weight(0), 1.0 / p);
      U = xi * detail::kron(xf, yg).transpose();
    } else {
      U = gaussian_mat(rng, static_cast<Index>(m.y->dim()), m.de() * m.df());
    }
    UpperOptions uo = upper;
    uo.seed = rng();
    try {
      const double up = tensor_norm_upper(mt, U, uo).value;
      if (up > 0)
        lr = std::max(lr, cert.image_norm(mt, U) / up);
      CopiedSpace cy(m.y, 2);
      const TensorModel mj = mt.with_y(cy.space());
      const Mat JU = j_rows(U, 2);
      const double upj = tensor_norm_upper(mj, JU, uo).value;
      if (upj > 0)
        lr_bar = std::max(lr_bar, cert.image_norm(mj, JU) / upj);
    } catch (const error& e) {
      rep.notes.emplace_back(std::string("sample skipped: ") + e.what());
    }
  }
  rep.R = {std::min(lr, rep.rho.upper), rep.rho.upper,
           {"upper: universal bound ||rho_inf||", "lower: ||R U|| / upper(U)"}};
  rep.R_bar = {std::min(lr_bar, rep.rho_bar.upper), rep.rho_bar.upper,
               {"upper: universal bound ||rho_bar_inf||", "lower: ||R J U|| / upper(J U)"}};

  auto overlap = [&](const NormEstimate& a, const NormEstimate& b) {
    return a.lower <= b.upper + tol && b.lower <= a.upper + tol;
  };
  const bool c1 = overlap(rep.rho, rep.rho_bar);
  const bool c2 = rep.R.lower <= rep.R_bar.upper + tol;
  const bool c3 = overlap(rep.R, rep.rho);
  const bool tight = rep.rho.width() <= tol && rep.rho_bar.width() <= tol &&
                     rep.R.width() <= tol && rep.R_bar.width() <= tol;
  rep.consistent = c1 && c2 && c3 && tight;
  if (!c1)
    rep.notes.emplace_back("rho_bar and rho brackets are disjoint");
  if (!c2)
    rep.notes.emplace_back("R exceeds R_bar");
  if (!c3)
    rep.notes.emplace_back("R and rho brackets are disjoint");
  if (!tight)
    rep.notes.emplace_back("a bracket is wider than the tolerance");
  return rep;
}

} // namespace lpq
