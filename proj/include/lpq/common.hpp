#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised for contract violations: bad shapes, degenerate subsets,
/// insufficient resolution, diamond overflow, schema problems.
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Tolerance policy shared by every module.
struct Tolerances
{
  double exact = 1e-12;        // exact algebra
  double closed_form = 1e-9;   // comparisons against closed forms
  double optimization = 1e-6;  // comparisons involving optimised quantities
};

/// Two-sided numerical bracket on a norm.
struct NormEstimate
{
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> method_tags;

  static NormEstimate exact(double value, std::string tag)
  {
    return {value, value, {std::move(tag)}};
  }

  double width() const { return upper - lower; }
  bool is_exact(double tol = 0.0) const { return width() <= tol; }
  bool contains(double x, double tol) const
  {
    return x >= lower - tol && x <= upper + tol;
  }
  bool valid(double tol = 1e-9) const
  {
    return std::isfinite(lower) && std::isfinite(upper) && lower >= 0.0 &&
           lower <= upper + tol;
  }
};

// Conjugate exponent; q = inf when p = 1 and q = 1 when p = inf.
inline double conjugate_exponent(double p)
{
  if (p == 1.0)
    return kInf;
  if (std::isinf(p))
    return 1.0;
  return p / (p - 1.0);
}

inline void require_exponent(double p)
{
  if (!(p >= 1.0) || !std::isfinite(p))
    throw error("exponent p must lie in [1, inf), got " + std::to_string(p));
}

/// Plain (unweighted) l_r norm, r in [1, inf].
inline double lr_norm(const Vec& x, double r)
{
  if (x.size() == 0)
    return 0.0;
  if (std::isinf(r))
    return x.cwiseAbs().maxCoeff();
  if (r == 1.0)
    return x.cwiseAbs().sum();
  if (r == 2.0)
    return x.norm();
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0)
    return 0.0;
  return scale * std::pow((x.cwiseAbs() / scale).array().pow(r).sum(), 1.0 / r);
}

using Rng = std::mt19937_64;

/// Independent generator for sub-task `stream` of a run seeded by `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6c70u};
  return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  Rng r = derive_rng(seed, stream);
  return r();
}

inline Vec gaussian_vec(Rng& rng, Index n)
{
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = nd(rng);
  return v;
}

inline Mat gaussian_mat(Rng& rng, Index rows, Index cols)
{
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = nd(rng);
  return m;
}

inline double uniform01(Rng& rng)
{
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Row-major flattening used in reports and config files.
inline std::vector<std::vector<double>> to_rows(const Mat& m)
{
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  return rows;
}

} // namespace lpq
