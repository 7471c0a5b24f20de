#pragma once

#include "lpq/check.hpp"
#include "lpq/lpcore.hpp"

#include <map>
#include <memory>

namespace lpq {

enum class Kind
{
  Min,
  Max,
  VectorValued,
  StandardExtension,
  Induced,
  PConvexTensor,
};

inline std::string to_string(Kind k)
{
  switch (k) {
  case Kind::Min: return "min";
  case Kind::Max: return "max";
  case Kind::VectorValued: return "vector_valued";
  case Kind::StandardExtension: return "standard_extension";
  case Kind::Induced: return "induced";
  case Kind::PConvexTensor: return "pconvex_tensor";
  }
  return "unknown";
}

inline Kind kind_from_string(const std::string& s)
{
  static const std::map<std::string, Kind> table{
      {"min", Kind::Min},
      {"max", Kind::Max},
      {"vector_valued", Kind::VectorValued},
      {"standard_extension", Kind::StandardExtension},
      {"induced", Kind::Induced},
      {"pconvex_tensor", Kind::PConvexTensor},
  };
  auto it = table.find(s);
  if (it == table.end())
    throw error("unknown quantization kind '" + s + "'");
  return it->second;
}

class QuantizedSpace;
using HostPtr = std::shared_ptr<const QuantizedSpace>;

/// A norm structure on L_p(base) (x) E. Elements are (dim base) x (dim E)
/// coefficient arrays; row s is the E-valued coefficient at coordinate s.
class QuantizedSpace
{
public:
  static HostPtr min(SpacePtr base, double p, Norm e)
  {
    return HostPtr(new QuantizedSpace(Kind::Min, std::move(base), p, std::move(e)));
  }
  static HostPtr max(SpacePtr base, double p, Norm e)
  {
    return HostPtr(new QuantizedSpace(Kind::Max, std::move(base), p, std::move(e)));
  }
  static HostPtr vector_valued(SpacePtr base, double p, Norm e)
  {
    return HostPtr(new QuantizedSpace(Kind::VectorValued, std::move(base), p, std::move(e)));
  }
  static HostPtr make(Kind k, SpacePtr base, double p, Norm e)
  {
    if (k != Kind::Min && k != Kind::Max && k != Kind::VectorValued)
      throw error("kind '" + to_string(k) + "' needs a derived construction");
    return HostPtr(new QuantizedSpace(k, std::move(base), p, std::move(e)));
  }

  /// l_p-sum of `inner` over `copies` copies of its base.
  static HostPtr standard_extension(HostPtr inner, std::size_t copies)
  {
    CopiedSpace cs(inner->base(), copies);
    auto q = new QuantizedSpace(Kind::StandardExtension, cs.space(), inner->p(),
                                inner->underlying());
    q->inner_ = std::move(inner);
    return HostPtr(q);
  }

  /// Norm on L(X)E induced by J from a structure on the copied space of X.
  static HostPtr induced(HostPtr outer)
  {
    if (!outer->base()->is_copied())
      throw error("induced structure needs an outer host over a copied space");
    auto q = new QuantizedSpace(Kind::Induced, outer->base()->copy_base(), outer->p(),
                                outer->underlying());
    q->inner_ = std::move(outer);
    return HostPtr(q);
  }

  /// Host for elements of L(base)(E (x) F) carrying the p-convex tensor norm.
  /// Column index of (i, j) is i * dim F + j.
  static HostPtr tensor(HostPtr e, HostPtr f, SpacePtr base)
  {
    if (e->p() != f->p())
      throw error("tensor factors must share the exponent p");
    auto q = new QuantizedSpace(Kind::PConvexTensor, std::move(base), e->p(), std::nullopt);
    q->tensor_dim_ = e->underlying_dim() * f->underlying_dim();
    q->inner_ = std::move(e);
    q->second_ = std::move(f);
    return HostPtr(q);
  }

  Kind kind() const { return kind_; }
  const SpacePtr& base() const { return base_; }
  double p() const { return p_; }
  Index underlying_dim() const { return underlying_ ? underlying_->dim() : tensor_dim_; }
  const Norm& underlying() const
  {
    if (!underlying_)
      throw error("the p-convex tensor structure has no closed-form underlying norm");
    return *underlying_;
  }
  /// Inner host of a standard extension, outer host of an induced
  /// structure, first factor of a tensor host.
  const HostPtr& inner() const { return inner_; }
  const HostPtr& second() const { return second_; }

  Norm base_norm() const { return Norm::lp_base(base_->weights(), p_); }

  /// Same kind and underlying norm on another base space.
  HostPtr rebased(SpacePtr base) const
  {
    switch (kind_) {
    case Kind::Min:
    case Kind::Max:
    case Kind::VectorValued:
      return make(kind_, std::move(base), p_, *underlying_);
    case Kind::StandardExtension:
      if (!base->is_copied())
        throw error("standard extension can only be rebased onto a copied space");
      return standard_extension(inner_->rebased(base->copy_base()), base->copies());
    case Kind::Induced:
      return induced(inner_->rebased(CopiedSpace(base, inner_->base()->copies()).space()));
    case Kind::PConvexTensor:
      return tensor(inner_, second_, std::move(base));
    }
    throw error("unknown kind");
  }

  /// Structure on a single base coordinate of a copied space: the inner
  /// host for a standard extension, otherwise this kind on the copy base.
  HostPtr copy_level() const
  {
    if (kind_ == Kind::StandardExtension)
      return inner_;
    if (!base_->is_copied())
      throw error("host is not over a copied space");
    return rebased(base_->copy_base());
  }

  std::string describe() const
  {
    std::string s = to_string(kind_);
    if (underlying_)
      s += "[" + underlying_->describe() + "]";
    if (kind_ == Kind::PConvexTensor)
      s += "[" + inner_->describe() + " x " + second_->describe() + "]";
    s += " over dim " + std::to_string(base_->dim()) + ", p=" + std::to_string(p_);
    return s;
  }

private:
  QuantizedSpace(Kind k, SpacePtr base, double p, std::optional<Norm> e)
      : kind_(k), base_(std::move(base)), p_(p), underlying_(std::move(e))
  {
    require_exponent(p_);
    if (!base_)
      throw error("quantized space needs a base space");
  }

  Kind kind_;
  SpacePtr base_;
  double p_;
  std::optional<Norm> underlying_;
  Index tensor_dim_ = 0;
  HostPtr inner_;
  HostPtr second_;
};

/// u in L(X)E as a (dim X) x (dim E) coefficient array.
struct AmplifiedElement
{
  HostPtr host;
  Mat coeffs;

  AmplifiedElement(HostPtr h, Mat c) : host(std::move(h)), coeffs(std::move(c))
  {
    if (static_cast<std::size_t>(coeffs.rows()) != host->base()->dim() ||
        coeffs.cols() != host->underlying_dim())
      throw error("amplified element of shape " + std::to_string(coeffs.rows()) + "x" +
                  std::to_string(coeffs.cols()) + " does not match host " + host->describe());
  }

  /// xi (x) x
  static AmplifiedElement elementary(HostPtr h, const Vec& xi, const Vec& x)
  {
    return {std::move(h), xi * x.transpose()};
  }

  /// Coordinates of the smallest proper support.
  std::vector<std::size_t> support() const
  {
    std::vector<std::size_t> s;
    for (Index i = 0; i < coeffs.rows(); ++i)
      if (coeffs.row(i).cwiseAbs().maxCoeff() > 0.0)
        s.push_back(static_cast<std::size_t>(i));
    return s;
  }

  AmplifiedElement operator+(const AmplifiedElement& o) const
  {
    if (o.coeffs.rows() != coeffs.rows() || o.coeffs.cols() != coeffs.cols())
      throw error("amplified element sum: shape mismatch");
    return {host, coeffs + o.coeffs};
  }
  AmplifiedElement operator*(double s) const { return {host, coeffs * s}; }
};

struct AmpOptions
{
  int restarts = 32;
  std::uint64_t seed = 0;
};

namespace detail {

inline NormEstimate host_norm(const QuantizedSpace& h, const Mat& m, Rng& rng, int restarts)
{
  const double p = h.p();
  switch (h.kind()) {
  case Kind::Min:
    return injective_norm(m, h.base_norm(), h.underlying(), rng, restarts).estimate;
  case Kind::Max:
    return projective_norm(m, h.base_norm(), h.underlying(), rng, restarts);
  case Kind::VectorValued: {
    Vec rows(m.rows());
    for (Index s = 0; s < m.rows(); ++s)
      rows(s) = h.underlying().norm(m.row(s).transpose());
    return NormEstimate::exact(h.base_norm().norm(rows), "exact:vector-valued");
  }
  case Kind::StandardExtension: {
    const auto& inner = *h.inner();
    const Index d = static_cast<Index>(inner.base()->dim());
    double lo = 0.0, hi = 0.0;
    NormEstimate est;
    for (std::size_t k = 0; k < h.base()->copies(); ++k) {
      const auto part = host_norm(inner, m.middleRows(static_cast<Index>(k) * d, d), rng, restarts);
      lo += std::pow(part.lower, p);
      hi += std::pow(part.upper, p);
      if (est.method_tags.empty())
        est.method_tags = part.method_tags;
    }
    est.lower = std::pow(lo, 1.0 / p);
    est.upper = std::pow(hi, 1.0 / p);
    est.method_tags.insert(est.method_tags.begin(), "lp-sum-over-copies");
    return est;
  }
  case Kind::Induced: {
    const auto& outer = *h.inner();
    Mat big = Mat::Zero(static_cast<Index>(outer.base()->dim()), m.cols());
    big.topRows(m.rows()) = m;
    auto est = host_norm(outer, big, rng, restarts);
    est.method_tags.insert(est.method_tags.begin(), "induced-by-J");
    return est;
  }
  case Kind::PConvexTensor:
    break;
  }
  throw error("unsupported kind combination: amplified_norm of a " + to_string(h.kind()) +
              " host (use tensor_norm)");
}

} // namespace detail

inline NormEstimate amplified_norm(const QuantizedSpace& host, const Mat& coeffs,
                                   const AmpOptions& opt = {})
{
  Rng rng = derive_rng(opt.seed, 0x4a);
  return detail::host_norm(host, coeffs, rng, opt.restarts);
}

inline NormEstimate amplified_norm(const AmplifiedElement& u, const AmpOptions& opt = {})
{
  return amplified_norm(*u.host, u.coeffs, opt);
}

/// (a (x) id_E) u
inline AmplifiedElement module_action(const LpOperator& a, const AmplifiedElement& u)
{
  const auto n = u.host->base()->dim();
  if (a.domain->dim() != n || a.codomain->dim() != n)
    throw error("module_action: operator shape " + std::to_string(a.matrix.rows()) + "x" +
                std::to_string(a.matrix.cols()) + " does not act on a base of dimension " +
                std::to_string(n));
  return {u.host, a.matrix * u.coeffs};
}

/// (f (x) id_E) u in E, for f in L*.
inline Vec functional_action(const LpFunctional& f, const AmplifiedElement& u)
{
  if (f.space->dim() != u.host->base()->dim())
    throw error("functional_action: shape mismatch");
  return u.coeffs.transpose() * f.euclidean();
}

/// Dual norm of the standard extension: (sum_m ||f_m||_q^q)^{1/q}.
inline double extension_dual_norm(const std::vector<LpFunctional>& fs)
{
  if (fs.empty())
    return 0.0;
  const double q = fs.front().q();
  Vec norms(static_cast<Index>(fs.size()));
  for (std::size_t m = 0; m < fs.size(); ++m)
    norms(static_cast<Index>(m)) = fs[m].norm();
  return lr_norm(norms, q);
}

/// Samples functionals f and elements u and reports the worst
/// ||(f (x) id_E) u|| / (||f|| * upper||u||).
inline CheckReport near_L_check(const HostPtr& host, const SuiteOptions& opt,
                                const AmpOptions& amp = {})
{
  const auto n = static_cast<Index>(host->base()->dim());
  const Index d = host->underlying_dim();
  const double p = host->p();
  auto rep = run_trials("near-L functional criterion", opt, [&](std::size_t i, Rng& rng) {
    Mat u = gaussian_mat(rng, n, d);
    Vec f = gaussian_vec(rng, n);
    if (i % 3 == 0) {
      // elementary u with f norming its L-factor: the equality case
      const Vec xi = gaussian_vec(rng, n);
      u = xi * gaussian_vec(rng, d).transpose();
      const Norm base = host->base_norm();
      f = base.norming(xi).cwiseQuotient(host->base()->weights());
    } else if (i % 3 == 1) {
      f = Vec::Zero(n);
      f(static_cast<Index>(uniform_index(rng, host->base()->dim()))) = 1.0;
    }
    const LpFunctional fun(host->base(), p, f);
    const AmplifiedElement ue(host, u);
    const double lhs = host->underlying().norm(functional_action(fun, ue));
    AmpOptions a = amp;
    a.seed = rng();
    const double rhs = fun.norm() * amplified_norm(ue, a).upper;
    TrialResult r;
    r.ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    r.witness = {{"f", f}, {"u", u}};
    return r;
  });
  rep.notes.push_back("host: " + host->describe());
  return rep;
}

/// Sampled contractibility ||a.u|| <= ||a|| ||u|| with operators drawn in
/// the 2:1:1:1 mix plus a Hadamard probe on trial 0.
inline CheckReport contractibility_suite(const HostPtr& host, const SuiteOptions& opt,
                                         const AmpOptions& amp = {},
                                         bool rank_one_only = false)
{
  const auto n = static_cast<Index>(host->base()->dim());
  const Index d = host->underlying_dim();
  const double p = host->p();
  auto rep = run_trials("contractibility", opt, [&](std::size_t i, Rng& rng) {
    OperatorFamily fam = i == 0 ? OperatorFamily::Hadamard : family_for_trial(i);
    if (rank_one_only)
      fam = OperatorFamily::RankOne;
    const LpOperator a = random_operator(host->base(), p, fam, rng);
    Mat u = gaussian_mat(rng, n, d);
    if (fam == OperatorFamily::Hadamard && n >= 2 && d >= 2) {
      u = Mat::Zero(n, d);
      for (Index k = 0; k < std::min(n, d); ++k)
        u(k, k) = 1.0;
    }
    const AmplifiedElement ue(host, u);
    AmpOptions a1 = amp;
    a1.seed = rng();
    OperatorNormOptions on;
    on.seed = rng();
    const double an = operator_norm(a, p, on).upper;
    const double un = amplified_norm(ue, a1).upper;
    const double lhs = amplified_norm(module_action(a, ue), a1).lower;
    TrialResult r;
    r.ratio = an * un > 0.0 ? lhs / (an * un) : 0.0;
    r.witness = {{"a", a.matrix}, {"u", u}};
    r.note = to_string(fam);
    return r;
  });
  rep.notes.push_back("host: " + host->describe());
  if (rank_one_only)
    rep.name += " (rank-one operators)";
  return rep;
}

/// Bilinear L x L -> L_p(T) acting by (xi <> eta)_{sigma(s,t)} =
/// scale(s,t) xi_s eta_t with scale(s,t) = (w_s w_t / w_sigma)^{1/p}, so
/// ||xi <> eta|| = ||xi|| ||eta||.
class DiamondOp
{
public:
  DiamondOp(SpacePtr source, SpacePtr target, double p, std::vector<std::size_t> pairing)
      : source_(std::move(source)), target_(std::move(target)), p_(p),
        pairing_(std::move(pairing))
  {
    require_exponent(p_);
    const std::size_t n = source_->dim();
    if (pairing_.size() != n * n)
      throw error("diamond pairing must list one target index per coordinate pair");
    std::vector<bool> hit(target_->dim(), false);
    for (auto t : pairing_) {
      if (t >= target_->dim())
        throw error("diamond overflow: increase copies/resolution (pair index " +
                    std::to_string(t) + " in a target of dimension " +
                    std::to_string(target_->dim()) + ")");
      if (hit[t])
        throw error("diamond pairing is not injective");
      hit[t] = true;
    }
    scale_.resize(static_cast<Index>(n * n));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        scale_(static_cast<Index>(s * n + t)) = std::pow(
            source_->weight(s) * source_->weight(t) / target_->weight(pairing_[s * n + t]),
            1.0 / p_);
  }

  static std::size_t cantor(std::size_t s, std::size_t t) { return (s + t) * (s + t + 1) / 2 + t; }

  static std::size_t cantor_extent(std::size_t n) { return n == 0 ? 0 : 2 * n * n - 2 * n + 1; }

  static DiamondOp canonical(SpacePtr source, SpacePtr target, double p)
  {
    const std::size_t n = source->dim();
    std::vector<std::size_t> pairing(n * n);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        pairing[s * n + t] = cantor(s, t);
    return {std::move(source), std::move(target), p, std::move(pairing)};
  }

  /// Target with weight w_s w_t at sigma(s, t) (scale 1) and 1 elsewhere.
  static SpacePtr canonical_target(const SpacePtr& source)
  {
    const std::size_t n = source->dim();
    Vec w = Vec::Ones(static_cast<Index>(cantor_extent(n)));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        w(static_cast<Index>(cantor(s, t))) = source->weight(s) * source->weight(t);
    std::vector<Atom> atoms;
    for (Index i = 0; i < w.size(); ++i)
      atoms.push_back({"d" + std::to_string(i), w(i)});
    return MeasureSpace::make(std::move(atoms));
  }

  static DiamondOp canonical(const SpacePtr& source, double p)
  {
    return canonical(source, canonical_target(source), p);
  }

  const SpacePtr& source() const { return source_; }
  const SpacePtr& target() const { return target_; }
  double p() const { return p_; }
  std::size_t index(std::size_t s, std::size_t t) const
  {
    return pairing_[s * source_->dim() + t];
  }
  double scale(std::size_t s, std::size_t t) const
  {
    return scale_(static_cast<Index>(s * source_->dim() + t));
  }
  const std::vector<std::size_t>& pairing() const { return pairing_; }

  Vec apply(const Vec& xi, const Vec& eta) const
  {
    const std::size_t n = source_->dim();
    if (static_cast<std::size_t>(xi.size()) != n || static_cast<std::size_t>(eta.size()) != n)
      throw error("diamond: vectors do not match the source space");
    Vec out = Vec::Zero(static_cast<Index>(target_->dim()));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        out(static_cast<Index>(index(s, t))) += scale(s, t) * xi(static_cast<Index>(s)) *
                                                 eta(static_cast<Index>(t));
    return out;
  }

  /// Coefficients of u <> v: row sigma(s,t), column i * dF + j.
  Mat apply(const Mat& u, const Mat& v) const
  {
    const std::size_t n = source_->dim();
    if (static_cast<std::size_t>(u.rows()) != n || static_cast<std::size_t>(v.rows()) != n)
      throw error("diamond: elements do not live over the source space");
    const Index de = u.cols(), df = v.cols();
    Mat out = Mat::Zero(static_cast<Index>(target_->dim()), de * df);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t) {
        const Index row = static_cast<Index>(index(s, t));
        const double c = scale(s, t);
        for (Index i = 0; i < de; ++i) {
          const double us = c * u(static_cast<Index>(s), i);
          if (us != 0.0)
            out.row(row).segment(i * df, df) += us * v.row(static_cast<Index>(t));
        }
      }
    return out;
  }

private:
  SpacePtr source_, target_;
  double p_;
  std::vector<std::size_t> pairing_;
  Vec scale_;
};

inline AmplifiedElement diamond(const DiamondOp& d, const AmplifiedElement& u,
                                const AmplifiedElement& v)
{
  if (!u.host->base()->same_as(*d.source()) || !v.host->base()->same_as(*d.source()))
    throw error("diamond: hosts are not over the diamond's source space");
  return {QuantizedSpace::tensor(u.host, v.host, d.target()), d.apply(u.coeffs, v.coeffs)};
}

/// J: first-copy embedding into N copies.
inline Mat j_rows(const Mat& u, std::size_t copies)
{
  Mat out = Mat::Zero(u.rows() * static_cast<Index>(copies), u.cols());
  out.topRows(u.rows()) = u;
  return out;
}

/// Q: first-copy extraction.
inline Mat q_rows(const Mat& u, std::size_t base_dim)
{
  return u.topRows(static_cast<Index>(base_dim));
}

inline LpVector j_map(const LpVector& xi, std::size_t copies)
{
  CopiedSpace cs(xi.space, copies);
  return {cs.space(), xi.p, j_rows(xi.coeffs, copies)};
}

inline LpVector q_map(const LpVector& xi)
{
  if (!xi.space->is_copied())
    throw error("q_map needs a vector over a copied space");
  return {xi.space->copy_base(), xi.p, q_rows(xi.coeffs, xi.space->copy_dim())};
}

/// J_G into the standard extension over N copies.
inline AmplifiedElement j_map(const AmplifiedElement& u, std::size_t copies)
{
  return {QuantizedSpace::standard_extension(u.host, copies), j_rows(u.coeffs, copies)};
}

inline AmplifiedElement j_map(const AmplifiedElement& u, const HostPtr& copied_host)
{
  if (copied_host->base()->copy_dim() != u.host->base()->dim() ||
      !copied_host->base()->is_copied())
    throw error("j_map: shape mismatch");
  return {copied_host, j_rows(u.coeffs, copied_host->base()->copies())};
}

/// Q_G back to the copy-level host.
inline AmplifiedElement q_map(const AmplifiedElement& ubar)
{
  if (!ubar.host->base()->is_copied())
    throw error("q_map: shape mismatch (host is not over a copied space)");
  return {ubar.host->copy_level(), q_rows(ubar.coeffs, ubar.host->base()->copy_dim())};
}

/// J(Q u <> Q v) in the copied space of the diamond target.
inline AmplifiedElement bar_diamond(const DiamondOp& d, const AmplifiedElement& ubar,
                                    const AmplifiedElement& vbar)
{
  const auto& bu = ubar.host->base();
  const auto& bv = vbar.host->base();
  if (!bu->is_copied() || !bv->is_copied() || bu->copies() != bv->copies() ||
      !bu->same_as(*bv))
    throw error("bar_diamond: both elements must live over the same copied space");
  const AmplifiedElement inner = diamond(d, q_map(ubar), q_map(vbar));
  const std::size_t n = bu->copies();
  CopiedSpace ct(d.target(), n);
  return {QuantizedSpace::tensor(ubar.host, vbar.host, ct.space()), j_rows(inner.coeffs, n)};
}

/// id_L (x) phi for phi : E -> F given as a (dim F) x (dim E) matrix.
struct AmplifiedOperator
{
  Mat phi;
  HostPtr in, out;
  NormEstimate norm;

  AmplifiedElement apply(const AmplifiedElement& u) const
  {
    if (u.coeffs.cols() != phi.cols() || u.coeffs.rows() != static_cast<Index>(out->base()->dim()))
      throw error("amplified operator: shape mismatch");
    return {out, u.coeffs * phi.transpose()};
  }
};

/// ||phi : E -> F|| bracket (injective norm of phi in F (x) E*).
inline BilinearMax underlying_operator_norm(const Mat& phi, const Norm& e, const Norm& f,
                                            Rng& rng, int restarts = 32)
{
  return injective_norm(phi, f, e.dual(), rng, restarts);
}

inline AmplifiedOperator amplify_operator(const Mat& phi, const HostPtr& in, const HostPtr& out,
                                          const AmpOptions& opt = {})
{
  if (!in->base()->same_as(*out->base()))
    throw error("amplify_operator: hosts must share the base space");
  if (phi.cols() != in->underlying_dim() || phi.rows() != out->underlying_dim())
    throw error("amplify_operator: map of shape " + std::to_string(phi.rows()) + "x" +
                std::to_string(phi.cols()) + " does not fit the hosts");
  AmplifiedOperator res{phi, in, out, {}};
  Rng rng = derive_rng(opt.seed, 0x5c);
  if (phi.cwiseAbs().maxCoeff() == 0.0) {
    res.norm = NormEstimate::exact(0.0, "zero");
    return res;
  }
  const auto base = underlying_operator_norm(phi, in->underlying(), out->underlying(), rng,
                                             opt.restarts);
  // ||phi_inf|| <= ||phi|| for every kind built from Min, Max and
  // vector-valued structures.
  const double upper = base.estimate.upper;
  double lower = 0.0;
  const auto n = static_cast<Index>(in->base()->dim());
  const Vec nu = Vec::Unit(n, 0) / std::pow(in->base()->weight(0), 1.0 / in->p());
  auto probe = [&](const Mat& u) {
    AmpOptions a = opt;
    a.seed = rng();
    const AmplifiedElement ue(in, u);
    const double un = amplified_norm(ue, a).upper;
    if (un > 0.0)
      lower = std::max(lower, amplified_norm(res.apply(ue), a).lower / un);
  };
  probe(nu * base.beta.transpose());
  for (int r = 0; r < opt.restarts; ++r)
    probe(gaussian_mat(rng, n, phi.cols()));
  res.norm.lower = std::min(lower, upper);
  res.norm.upper = upper;
  if (res.norm.upper - res.norm.lower <= 1e-13 * std::max(1.0, upper))
    res.norm.lower = upper;
  res.norm.method_tags = {"upper:underlying-operator-norm", "lower:sampled(" +
                                                                std::to_string(opt.restarts) +
                                                                ")+norming-elementary"};
  return res;
}

} // namespace lpq
