#pragma once

#include "lpq/propsuite.hpp"

namespace lpq {

/// sum_k chi_hat(Y_k) x_k over N copies of X, with Y_k pairwise disjoint.
struct SimpleAmplified
{
  struct Term
  {
    MeasurableSubset subset;
    Vec x;
  };

  CopiedSpace cs;
  HostPtr g; // host over X
  std::vector<Term> terms;

  SimpleAmplified(CopiedSpace space, HostPtr host, std::vector<Term> t)
      : cs(std::move(space)), g(std::move(host)), terms(std::move(t))
  {
    if (!g->base()->same_as(*cs.base()))
      throw error("simple element: host is not over the copied base");
    std::vector<MeasurableSubset> subsets;
    for (const auto& term : terms) {
      if (term.subset.space()->dim() != cs.dim())
        throw error("simple element: subset belongs to another space");
      if (!(term.subset.measure() > 0.0))
        throw error("degenerate subset: simple element terms need positive measure");
      if (term.x.size() != g->underlying_dim())
        throw error("simple element: coefficient of dimension " + std::to_string(term.x.size()) +
                    " in a host of dimension " + std::to_string(g->underlying_dim()));
      subsets.push_back(term.subset);
    }
    if (!pairwise_disjoint(subsets))
      throw error("simple element: subsets overlap");
  }

  /// Coefficient array over the copied space.
  Mat coeffs() const
  {
    Mat out = Mat::Zero(static_cast<Index>(cs.dim()), g->underlying_dim());
    for (const auto& t : terms)
      out += normalized_indicator(cs.space(), t.subset, g->p()).coeffs * t.x.transpose();
    return out;
  }

  /// One singleton term per nonzero row: e_c = w_c^{1/p} chi_hat({c}).
  static SimpleAmplified from_element(const CopiedSpace& cs, const HostPtr& g, const Mat& ubar)
  {
    if (static_cast<std::size_t>(ubar.rows()) != cs.dim() || ubar.cols() != g->underlying_dim())
      throw error("simple element: coefficient array has the wrong shape");
    std::vector<Term> terms;
    for (Index c = 0; c < ubar.rows(); ++c)
      if (ubar.row(c).cwiseAbs().maxCoeff() > 0.0)
        terms.push_back({MeasurableSubset(cs.space(), {static_cast<std::size_t>(c)}),
                         std::pow(cs.space()->weight(static_cast<std::size_t>(c)), 1.0 / g->p()) *
                             ubar.row(c).transpose()});
    return {cs, g, std::move(terms)};
  }
};

/// The transported element sum_k chi_hat(Z_k) x_k in L(X)G.
inline Mat transported(const SimpleAmplified& u, const std::vector<MeasurableSubset>& z)
{
  const auto& x = u.g->base();
  Mat v = Mat::Zero(static_cast<Index>(x->dim()), u.g->underlying_dim());
  for (std::size_t k = 0; k < u.terms.size(); ++k)
    v += normalized_indicator(x, z[k], u.g->p()).coeffs * u.terms[k].x.transpose();
  return v;
}

inline std::vector<MeasurableSubset> transport_family(const SimpleAmplified& u, std::uint64_t seed)
{
  if (u.terms.empty())
    return {};
  if (u.terms.size() > u.g->base()->dim())
    throw error("insufficient resolution: " + std::to_string(u.terms.size()) +
                " terms need as many disjoint subsets of X, which has dimension " +
                std::to_string(u.g->base()->dim()));
  return disjoint_family(u.g->base(), u.terms.size(), seed);
}

/// ||u|| := ||sum_k chi_hat(Z_k) x_k|| for a seed-drawn disjoint family Z.
inline NormEstimate inflation_norm(const SimpleAmplified& u, std::uint64_t seed = 0,
                                   const AmpOptions& amp = {})
{
  if (u.terms.empty())
    return NormEstimate::exact(0.0, "empty element");
  const auto z = transport_family(u, seed);
  auto est = amplified_norm(*u.g, transported(u, z), amp);
  est.method_tags.push_back("transported through a disjoint family of X");
  return est;
}

struct ActionReport
{
  double lhs = 0.0;  // lower of ||a.u||
  double rhs = 0.0;  // upper||a|| * upper||u||
  double ratio = 0.0;
  Mat b;             // J Q a I^-1 P on L(X)
  double b_norm = 0.0;
  bool passed = true;
};

namespace detail {

// sum_k chi_hat(to_k) (w_from . xi_k)^T with xi_k the q-normalised
// indicator of from_k: maps chi_hat(from_k) to chi_hat(to_k).
inline Mat indicator_transfer(const SpacePtr& from, const std::vector<MeasurableSubset>& from_sets,
                              const SpacePtr& to, const std::vector<MeasurableSubset>& to_sets,
                              double p)
{
  Mat m = Mat::Zero(static_cast<Index>(to->dim()), static_cast<Index>(from->dim()));
  const double q = conjugate_exponent(p);
  for (std::size_t k = 0; k < from_sets.size(); ++k) {
    const double s = std::isinf(q) ? 1.0 : std::pow(from_sets[k].measure(), -1.0 / q);
    const Vec xi = from_sets[k].indicator() * s;
    m += normalized_indicator(to, to_sets[k], p).coeffs *
         from->weights().cwiseProduct(xi).transpose();
  }
  return m;
}

} // namespace detail

/// Module estimate ||a.u|| <= ||a|| ||u|| in the inflated structure, with
/// a an operator on the copied space.
inline ActionReport inflation_action_check(const LpOperator& a, const SimpleAmplified& u,
                                           std::uint64_t seed = 0, double tol = 1e-6,
                                           const AmpOptions& amp = {})
{
  if (a.domain->dim() != u.cs.dim() || a.codomain->dim() != u.cs.dim())
    throw error("inflation_action_check: operator does not act on the copied space");
  const double p = u.g->p();
  const SimpleAmplified au = SimpleAmplified::from_element(u.cs, u.g, a.matrix * u.coeffs());
  ActionReport rep;
  const auto z0 = transport_family(u, seed);
  const auto z1 = transport_family(au, derive_seed(seed, 1));
  std::vector<MeasurableSubset> y0, y1;
  for (const auto& t : u.terms)
    y0.push_back(t.subset);
  for (const auto& t : au.terms)
    y1.push_back(t.subset);
  const SpacePtr& x = u.g->base();
  const Mat in = detail::indicator_transfer(x, z0, u.cs.space(), y0, p);
  const Mat out = detail::indicator_transfer(u.cs.space(), y1, x, z1, p);
  rep.b = out * a.matrix * in;
  rep.b_norm = operator_norm_upper(rep.b, x->weights(), x->weights(), p);
  const double an = operator_norm_upper(a.matrix, u.cs.space()->weights(),
                                        u.cs.space()->weights(), p);
  rep.lhs = au.terms.empty() ? 0.0 : amplified_norm(*u.g, transported(au, z1), amp).lower;
  rep.rhs = an * inflation_norm(u, seed, amp).upper;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? kInf : 0.0);
  rep.passed = rep.lhs <= rep.rhs * (1.0 + 10.0 * tol) + tol;
  return rep;
}

struct InflationOptions
{
  SuiteOptions suite{100, 0, 1e-9, 1};
  std::size_t copies = 2;
  std::size_t precheck_trials = 200;
  AmpOptions amp{16, 0};
};

struct InflationReport
{
  std::string label;
  bool near_L_input = false;
  CheckReport precheck;
  std::vector<CheckReport> checks;
  std::uint64_t transport_seed = 0;

  bool passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

namespace detail {

// Random dense element over the copied space touching at most dim X rows.
inline Mat sparse_copied_element(const CopiedSpace& cs, Index cols, Rng& rng)
{
  const std::size_t nx = cs.base()->dim();
  std::vector<std::size_t> rows(cs.dim());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  const std::size_t keep = 1 + uniform_index(rng, nx);
  Mat u = Mat::Zero(static_cast<Index>(cs.dim()), cols);
  for (std::size_t i = 0; i < keep; ++i)
    u.row(static_cast<Index>(rows[i])) = gaussian_vec(rng, cols).transpose();
  return u;
}

} // namespace detail

/// Checks on sampled simple elements that the transported norm makes J an
/// isometry and Q a contraction with QJ = id, and that it is p-convex and
/// positive. Hosts failing the contractibility pre-check are still run but
/// labelled as near-L inputs.
inline InflationReport verify_inflation(const HostPtr& g, const InflationOptions& opt = {})
{
  InflationReport rep;
  const CopiedSpace cs(g->base(), opt.copies);
  const auto nx = static_cast<Index>(g->base()->dim());
  const Index d = g->underlying_dim();
  const double p = g->p();
  rep.transport_seed = opt.suite.seed;

  SuiteOptions pre = opt.suite;
  pre.trials = opt.precheck_trials;
  pre.tolerance = 1e-6;
  rep.precheck = contractibility_suite(g, pre, opt.amp);
  rep.near_L_input = !rep.precheck.passed;
  rep.label = rep.near_L_input ? "near-L input: inflation hypotheses not met" : "L-space input";

  auto norm_of = [&](const Mat& ubar, std::uint64_t seed) {
    return inflation_norm(SimpleAmplified::from_element(cs, g, ubar), seed, opt.amp);
  };

  rep.checks.push_back(run_trials("J isometry", opt.suite, [&](std::size_t, Rng& rng) {
    const Mat u = gaussian_mat(rng, nx, d);
    AmpOptions a = opt.amp;
    a.seed = rng();
    const auto direct = amplified_norm(*g, u, a);
    const auto lifted = norm_of(j_rows(u, opt.copies), rng());
    TrialResult r;
    // two-sided: a deviation in either direction counts
    const double hi = std::max(lifted.upper / direct.lower, direct.upper / lifted.lower);
    r.ratio = direct.upper > 0.0 ? hi : 0.0;
    r.witness = {{"u", u}};
    return r;
  }));

  rep.checks.push_back(run_trials("Q contraction, QJ = id", opt.suite, [&](std::size_t, Rng& rng) {
    const Mat ubar = detail::sparse_copied_element(cs, d, rng);
    AmpOptions a = opt.amp;
    a.seed = rng();
    const double lhs = amplified_norm(*g, q_rows(ubar, static_cast<std::size_t>(nx)), a).lower;
    const double rhs = norm_of(ubar, rng()).upper;
    const Mat u = gaussian_mat(rng, nx, d);
    TrialResult r;
    r.ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    if (q_rows(j_rows(u, opt.copies), static_cast<std::size_t>(nx)) != u) {
      r.ratio = kInf;
      r.note = "QJ differs from the identity";
    }
    r.witness = {{"ubar", ubar}};
    return r;
  }));

  rep.checks.push_back(run_trials("inflated p-convexity", opt.suite, [&](std::size_t, Rng& rng) {
    // transversal pair with total support <= dim X
    std::vector<std::size_t> rows(cs.dim());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t total = std::max<std::size_t>(2, 1 + uniform_index(rng, g->base()->dim()));
    const std::size_t split = 1 + uniform_index(rng, total - 1);
    Mat u = Mat::Zero(static_cast<Index>(cs.dim()), d), v = u;
    for (std::size_t i = 0; i < total && i < rows.size(); ++i)
      (i < split ? u : v).row(static_cast<Index>(rows[i])) = gaussian_vec(rng, d).transpose();
    const std::uint64_t s = rng();
    const double nu = norm_of(u, s).upper, nv = norm_of(v, s).upper;
    const double rhs = std::pow(std::pow(nu, p) + std::pow(nv, p), 1.0 / p);
    TrialResult r;
    r.ratio = rhs > 0.0 ? norm_of(u + v, s).lower / rhs : 0.0;
    r.witness = {{"u", u}, {"v", v}};
    return r;
  }));

  rep.checks.push_back(run_trials("positivity", opt.suite, [&](std::size_t, Rng& rng) {
    const Mat ubar = detail::sparse_copied_element(cs, d, rng);
    const double n = norm_of(ubar, rng()).lower;
    TrialResult r;
    // ratio 0 for a positive norm, beyond the threshold for a zero norm
    r.ratio = n > 0.0 ? 0.0 : kInf;
    r.witness = {{"ubar", ubar}};
    return r;
  }));

  for (auto& c : rep.checks) {
    c.notes.push_back("host: " + g->describe());
    c.notes.push_back("copies: " + std::to_string(opt.copies));
  }
  if (g->base()->dim() < 2) {
    // transversal pairs need two coordinates of X
    rep.checks[2].passed = true;
    rep.checks[2].notes.push_back("skipped: base of dimension 1");
  }
  return rep;
}

struct InvarianceReport
{
  // relative spreads |a - b| / max(1, b)
  double max_family_spread = 0.0; // across independent Z-families
  double max_split_spread = 0.0;  // across refinements of a term
  std::size_t elements = 0;
  bool passed = true;
};

/// Recomputes inflation norms of random simple elements with independent
/// Z-families and after splitting terms into two parts with proportional
/// coefficients.
inline InvarianceReport inflation_invariance_check(const HostPtr& g, std::size_t copies,
                                                   std::size_t elements, std::size_t families,
                                                   std::uint64_t seed, double tol = 1e-9)
{
  InvarianceReport rep;
  rep.elements = elements;
  const CopiedSpace cs(g->base(), copies);
  const std::size_t nx = g->base()->dim();
  const double p = g->p();
  const AmpOptions amp{8, 0};
  for (std::size_t e = 0; e < elements; ++e) {
    Rng rng = derive_rng(seed, 0x4000 + e);
    // disjoint subsets of the copied space, fewer than dim X of them so a split fits
    std::vector<std::size_t> rows(cs.dim());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t nterms = std::max<std::size_t>(1, 1 + uniform_index(rng, std::max<std::size_t>(1, nx - 1)));
    std::vector<SimpleAmplified::Term> terms;
    std::size_t at = 0;
    for (std::size_t k = 0; k < nterms; ++k) {
      const std::size_t left = rows.size() - at - (nterms - k - 1);
      const std::size_t size = 1 + uniform_index(rng, std::min<std::size_t>(3, left));
      std::vector<std::size_t> idx(rows.begin() + static_cast<std::ptrdiff_t>(at),
                                   rows.begin() + static_cast<std::ptrdiff_t>(at + size));
      at += size;
      terms.push_back({MeasurableSubset(cs.space(), idx), gaussian_vec(rng, g->underlying_dim())});
    }
    const SimpleAmplified u(cs, g, terms);
    const double ref = inflation_norm(u, derive_seed(seed, e), amp).upper;
    for (std::size_t f = 1; f < families; ++f) {
      const double other = inflation_norm(u, derive_seed(seed, e * 1000 + f), amp).upper;
      rep.max_family_spread =
          std::max(rep.max_family_spread, std::abs(other - ref) / std::max(1.0, ref));
    }
    // split the first term with at least two points
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& idx = terms[k].subset.indices();
      if (idx.size() < 2 || terms.size() + 1 > nx)
        continue;
      const MeasurableSubset a(cs.space(), {idx.front()});
      const MeasurableSubset b(cs.space(), std::vector<std::size_t>(idx.begin() + 1, idx.end()));
      const double mu = terms[k].subset.measure();
      const double l1 = std::pow(a.measure() / mu, 1.0 / p), l2 = std::pow(b.measure() / mu, 1.0 / p);
      auto refined = terms;
      refined[k] = {a, l1 * terms[k].x};
      refined.push_back({b, l2 * terms[k].x});
      const double split = inflation_norm(SimpleAmplified(cs, g, refined), derive_seed(seed, e), amp).upper;
      rep.max_split_spread =
          std::max(rep.max_split_spread, std::abs(split - ref) / std::max(1.0, ref));
      break;
    }
  }
  rep.passed = rep.max_family_spread <= tol && rep.max_split_spread <= tol;
  return rep;
}

} // namespace lpq
