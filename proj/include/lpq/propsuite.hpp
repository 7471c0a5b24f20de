#pragma once

#include "lpq/tensor.hpp"

#include <functional>

namespace lpq {

inline CheckReport check_contractibility(const HostPtr& host, const SuiteOptions& opt,
                                         const AmpOptions& amp = {}, bool rank_one_only = false)
{
  return contractibility_suite(host, opt, amp, rank_one_only);
}

inline CheckReport check_near_L(const HostPtr& host, const SuiteOptions& opt,
                                const AmpOptions& amp = {})
{
  return near_L_check(host, opt, amp);
}

namespace detail {

// Random split of {0..n-1} into two nonempty sets.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_split(std::size_t n,
                                                                                  Rng& rng)
{
  if (n < 2)
    throw error("transversal supports need a base of dimension >= 2");
  std::vector<std::size_t> s, t;
  const std::size_t forced = uniform_index(rng, n);
  std::size_t other = uniform_index(rng, n - 1);
  if (other >= forced)
    ++other;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == forced)
      s.push_back(i);
    else if (i == other)
      t.push_back(i);
    else
      (uniform01(rng) < 0.5 ? s : t).push_back(i);
  }
  return {s, t};
}

inline Mat restrict_rows(const Mat& m, const std::vector<std::size_t>& rows)
{
  Mat out = Mat::Zero(m.rows(), m.cols());
  for (auto r : rows)
    out.row(static_cast<Index>(r)) = m.row(static_cast<Index>(r));
  return out;
}

} // namespace detail

/// lower / upper evaluators of a norm on (rows) x (cols) coefficient arrays.
struct NormOracle
{
  std::size_t rows = 0;
  Index cols = 0;
  double p = 1.0;
  std::function<NormEstimate(const Mat&, Rng&)> eval;
};

/// ||u + v|| <= (||u||^p + ||v||^p)^{1/p} for u, v supported on disjoint
/// sets of rows. Overlapping supports are outside the definition and are
/// never sampled.
inline CheckReport check_p_convexity(const NormOracle& n, const SuiteOptions& opt,
                                     std::string name = "p-convexity")
{
  return run_trials(std::move(name), opt, [&](std::size_t, Rng& rng) {
    const auto [s, t] = detail::random_split(n.rows, rng);
    const Mat u = detail::restrict_rows(gaussian_mat(rng, static_cast<Index>(n.rows), n.cols), s);
    const Mat v = detail::restrict_rows(gaussian_mat(rng, static_cast<Index>(n.rows), n.cols), t);
    const double nu = n.eval(u, rng).upper, nv = n.eval(v, rng).upper;
    const double rhs = std::pow(std::pow(nu, n.p) + std::pow(nv, n.p), 1.0 / n.p);
    TrialResult r;
    r.ratio = rhs > 0.0 ? n.eval(u + v, rng).lower / rhs : 0.0;
    r.witness = {{"u", u}, {"v", v}};
    return r;
  });
}

inline CheckReport check_p_convexity(const HostPtr& host, const SuiteOptions& opt,
                                     const AmpOptions& amp = {})
{
  NormOracle o{host->base()->dim(), host->underlying_dim(), host->p(),
               [host, amp](const Mat& m, Rng& rng) {
                 AmpOptions a = amp;
                 a.seed = rng();
                 return amplified_norm(*host, m, a);
               }};
  auto rep = check_p_convexity(o, opt);
  rep.notes.push_back("host: " + host->describe());
  return rep;
}

/// Representation of U + V from representations of U (supported on rows s)
/// and V (rows t): the a's are normalised, restricted to s and t, and the
/// copies of the second placed after those of the first. The merged a has
/// norm <= 1 since its pieces land on disjoint rows.
inline Representation merge_representations(const TensorModel& m1, const Representation& r1,
                                            const std::vector<std::size_t>& s,
                                            const TensorModel& m2, const Representation& r2,
                                            const std::vector<std::size_t>& t)
{
  const Index dt = m1.dim_t();
  Representation out;
  out.a = Mat::Zero(r1.a.rows(), dt * static_cast<Index>(m1.copies + m2.copies));
  out.a_norm_bound = 1.0;
  auto place = [&](const TensorModel& m, const Representation& r,
                   const std::vector<std::size_t>& rows, std::size_t offset) {
    if (r.terms.empty())
      return;
    const double alpha = r.a_norm_bound ? *r.a_norm_bound : detail::a_norm_upper(m, r.a);
    if (!(alpha > 0.0))
      return;
    out.a.middleCols(static_cast<Index>(offset) * dt, r.a.cols()) =
        detail::restrict_rows(r.a, rows) / alpha;
    const double root = std::sqrt(alpha);
    for (const auto& term : r.terms)
      out.terms.push_back({term.copy + offset, term.u * root, term.v * root});
  };
  place(m1, r1, s, 0);
  place(m2, r2, t, m1.copies);
  return out;
}

/// p-convexity of the computed tensor structure: each pair is bounded above
/// by a merged representation, and the certified lower bound of U + V is
/// compared against the p-sum as well.
inline CheckReport check_tensor_p_convexity(const TensorModel& m, const SuiteOptions& opt,
                                            const UpperOptions& upper = {10, 1, 0, {0, 0}})
{
  const auto ny = m.y->dim();
  const Index d = m.de() * m.df();
  auto rep = run_trials("tensor p-convexity", opt, [&](std::size_t, Rng& rng) {
    const auto [s, t] = detail::random_split(ny, rng);
    const Mat u = detail::restrict_rows(gaussian_mat(rng, static_cast<Index>(ny), d), s);
    const Mat v = detail::restrict_rows(gaussian_mat(rng, static_cast<Index>(ny), d), t);
    UpperOptions uo = upper;
    uo.seed = rng();
    const auto ru = tensor_norm_upper(m, u, uo);
    const auto rv = tensor_norm_upper(m, v, uo);
    const double p = m.p();
    const double rhs = std::pow(std::pow(ru.value, p) + std::pow(rv.value, p), 1.0 / p);
    TrialResult r;
    r.witness = {{"U", u}, {"V", v}};
    if (!(rhs > 0.0))
      return r;
    const TensorModel merged = m.with_copies(2 * m.copies);
    const Representation mr = merge_representations(m, ru.rep, s, m, rv.rep, t);
    if ((value(merged, mr) - (u + v)).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + (u + v).cwiseAbs().maxCoeff())) {
      r.ratio = kInf;
      r.note = "merged representation does not reproduce U + V";
      return r;
    }
    const double merged_cost = cost(merged, mr, uo.amp).cost;
    double lower = 0.0;
    if (auto c = best_scalar_certificate(m, u + v, 2, rng()))
      lower = c->bound(m, u + v);
    r.ratio = std::max(merged_cost, lower) / rhs;
    r.note = "merged upper " + std::to_string(merged_cost) + ", certified lower " +
             std::to_string(lower);
    return r;
  });
  rep.notes.push_back("upper bounds via merged representations; lower via scalar certificates");
  return rep;
}

/// upper(a U) <= upper||a|| upper(U), witnessed by replacing a_rep with
/// a o a_rep in the best representation of U.
inline CheckReport check_tensor_contractibility(const TensorModel& m, const SuiteOptions& opt,
                                               const UpperOptions& upper = {10, 1, 0, {0, 0}})
{
  const auto ny = static_cast<Index>(m.y->dim());
  const Index d = m.de() * m.df();
  return run_trials("tensor contractibility", opt, [&](std::size_t i, Rng& rng) {
    const LpOperator a = random_operator(m.y, m.p(), family_for_trial(i), rng);
    const Mat u = gaussian_mat(rng, ny, d);
    UpperOptions uo = upper;
    uo.seed = rng();
    const auto ru = tensor_norm_upper(m, u, uo);
    const double an = operator_norm_upper(a.matrix, m.y->weights(), m.y->weights(), m.p());
    Representation tr = ru.rep;
    tr.a = a.matrix * ru.rep.a;
    tr.a_norm_bound = an * detail::a_norm_upper(m, ru.rep.a);
    const double transported = cost(m, tr, uo.amp).cost;
    double lower = 0.0;
    if (auto c = best_scalar_certificate(m, a.matrix * u, 2, rng()))
      lower = c->bound(m, a.matrix * u);
    const double rhs = an * ru.value;
    TrialResult r;
    r.ratio = rhs > 0.0 ? std::max(transported, lower) / rhs : 0.0;
    r.witness = {{"a", a.matrix}, {"U", u}};
    r.note = to_string(family_for_trial(i));
    return r;
  });
}

/// upper(u <> v as a tensor element) <= ||u|| ||v||, through the one-term
/// representation with a the restriction to copy 0; certified lower bounds
/// of u <> v are compared against the same product.
inline CheckReport check_theta_contractivity(const TensorModel& m, const SuiteOptions& opt)
{
  const TensorModel mt = m.with_y(m.diamond.target());
  const Index dt = m.dim_t();
  return run_trials("theta contractivity", opt, [&](std::size_t, Rng& rng) {
    const Mat u = gaussian_mat(rng, m.dim_x(), m.de());
    const Mat v = gaussian_mat(rng, m.dim_x(), m.df());
    const Mat uv = m.diamond.apply(u, v);
    Representation r1;
    r1.a = Mat::Zero(dt, dt * static_cast<Index>(mt.copies));
    r1.a.leftCols(dt) = Mat::Identity(dt, dt);
    r1.a_norm_bound = 1.0;
    r1.terms = {{0, u, v}};
    AmpOptions amp{8, rng()};
    const double prod = amplified_norm(*m.e, u, amp).upper * amplified_norm(*m.f, v, amp).upper;
    const double up = cost(mt, r1, amp).cost;
    double lower = 0.0;
    if (auto c = best_scalar_certificate(mt, uv, 2, rng()))
      lower = c->bound(mt, uv);
    TrialResult r;
    r.ratio = prod > 0.0 ? std::max(up, lower) / prod : 0.0;
    r.witness = {{"u", u}, {"v", v}};
    return r;
  });
}

/// (phi (x) psi)_inf on representations: u_k -> u_k phi^T, v_k -> v_k psi^T.
inline Representation transport(const Representation& r, const Mat& phi, const Mat& psi)
{
  Representation out = r;
  for (auto& t : out.terms) {
    t.u = t.u * phi.transpose();
    t.v = t.v * psi.transpose();
  }
  return out;
}

/// (phi (x) psi) acting on the E (x) F columns of U.
inline Mat tensor_map(const Mat& U, const Mat& phi, const Mat& psi)
{
  Mat k(phi.rows() * psi.rows(), phi.cols() * psi.cols());
  for (Index i = 0; i < phi.rows(); ++i)
    for (Index j = 0; j < phi.cols(); ++j)
      k.block(i * psi.rows(), j * psi.cols(), psi.rows(), psi.cols()) = phi(i, j) * psi;
  return U * k.transpose();
}

struct MetricMappingOptions
{
  SuiteOptions suite;
  UpperOptions upper{10, 1, 0, {0, 0}};
  AmpOptions amp{16, 0};
};

/// upper((phi (x) psi)_inf U) <= upper||phi_inf|| upper||psi_inf|| upper(U)
/// for phi : E -> E2, psi : F -> F2; the left side is bounded by the
/// transported best representation of U and by certified lower bounds.
/// Each trial draws U; phi and psi are fixed.
inline CheckReport check_metric_mapping(const Mat& phi, const Mat& psi, const TensorModel& src,
                                        const HostPtr& e2, const HostPtr& f2,
                                        const MetricMappingOptions& opt = {})
{
  const TensorModel dst = [&] {
    TensorModel t = src;
    t.e = e2;
    t.f = f2;
    return t;
  }();
  AmpOptions amp = opt.amp;
  amp.seed = derive_seed(opt.suite.seed, 0x31);
  const double nphi = amplify_operator(phi, src.e, e2->rebased(src.e->base()), amp).norm.upper;
  const double npsi = amplify_operator(psi, src.f, f2->rebased(src.f->base()), amp).norm.upper;
  const auto ny = static_cast<Index>(src.y->dim());
  auto rep = run_trials("metric mapping", opt.suite, [&](std::size_t, Rng& rng) {
    const Mat u = gaussian_mat(rng, ny, src.de() * src.df());
    UpperOptions uo = opt.upper;
    uo.seed = rng();
    const auto ru = tensor_norm_upper(src, u, uo);
    const Mat image = tensor_map(u, phi, psi);
    const double moved = cost(dst, transport(ru.rep, phi, psi), uo.amp).cost;
    double lower = 0.0;
    if (auto c = best_scalar_certificate(dst, image, 2, rng()))
      lower = c->bound(dst, image);
    const double rhs = nphi * npsi * ru.value;
    TrialResult r;
    r.ratio = rhs > 0.0 ? std::max(moved, lower) / rhs : 0.0;
    r.witness = {{"U", u}};
    return r;
  });
  rep.witness.emplace_back("phi", phi);
  rep.witness.emplace_back("psi", psi);
  rep.notes.push_back("||phi_inf|| <= " + std::to_string(nphi) +
                      ", ||psi_inf|| <= " + std::to_string(npsi));
  return rep;
}

struct WitnessOptions
{
  int budget = 400;
  int restarts = 8;
  std::uint64_t seed = 0;
  bool rank_one_only = false;
  double tolerance = 1e-6;
};

/// Search for (a, u) maximising lower||a.u|| / (upper||a|| upper||u||) on
/// the vector-valued structure L_p(X; E) with X = dim E unit atoms, seeded
/// by the Hadamard probe.
inline CheckReport find_contractibility_witness(double p, const Norm& e, const WitnessOptions& opt = {})
{
  require_exponent(p);
  const Index n = e.dim();
  const auto x = MeasureSpace::unit_atoms(static_cast<std::size_t>(n));
  const auto host = QuantizedSpace::vector_valued(x, p, e);
  const Vec w = x->weights();
  Rng rng = derive_rng(opt.seed, 0x22);

  auto ratio = [&](const Mat& a, const Mat& u) {
    const double an = operator_norm_upper(a, w, w, p);
    AmpOptions amp{4, 1};
    const double un = amplified_norm(*host, u, amp).upper;
    if (!(an > 0.0) || !(un > 0.0))
      return 0.0;
    return amplified_norm(*host, a * u, amp).lower / (an * un);
  };
  auto project = [&](Mat a) {
    if (!opt.rank_one_only)
      return a;
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return Mat(svd.singularValues()(0) * svd.matrixU().col(0) * svd.matrixV().col(0).transpose());
  };

  Mat best_a = project(random_operator(x, p, OperatorFamily::Hadamard, rng).matrix);
  Mat best_u = Mat::Identity(n, n);
  double best = ratio(best_a, best_u);
  for (int r = 0; r < opt.restarts; ++r) {
    Mat a = r == 0 ? best_a : project(gaussian_mat(rng, n, n));
    Mat u = r == 0 ? best_u : gaussian_mat(rng, n, n);
    double cur = ratio(a, u);
    double step = 0.3;
    for (int it = 0; it < opt.budget; ++it) {
      const Mat na = uniform01(rng) < 0.5
                         ? project(a + step * a.norm() * gaussian_mat(rng, n, n) / double(n))
                         : a;
      const Mat nu = na.isApprox(a) ? Mat(u + step * u.norm() * gaussian_mat(rng, n, n) / double(n))
                                    : u;
      const double c = ratio(na, nu);
      if (c > cur) {
        cur = c;
        a = na;
        u = nu;
        step = std::min(1.0, step * 1.3);
      } else {
        step = std::max(1e-5, step * 0.95);
      }
    }
    if (cur > best) {
      best = cur;
      best_a = a;
      best_u = u;
    }
  }
  CheckReport rep;
  rep.name = opt.rank_one_only ? "remark 2.2 witness search (rank-one operators)"
                               : "remark 2.2 witness search";
  rep.trials = static_cast<std::size_t>(opt.restarts) * static_cast<std::size_t>(opt.budget);
  rep.worst_ratio = best;
  rep.witness = {{"a", best_a}, {"u", best_u}};
  rep.tolerance = opt.tolerance;
  rep.seed = opt.seed;
  rep.passed = best <= rep.threshold();
  rep.notes.push_back("host: " + host->describe());
  return rep;
}

} // namespace lpq
