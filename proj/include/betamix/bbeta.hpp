#pragma once

// Flexible bivariate beta distribution.
//
// (U1, U2, U3, U4) ~ Dirichlet(a1, a2, a3, a4), X = U1 + U2, Y = U1 + U3.
// The joint density of (X, Y) is a one-dimensional integral over U1:
//
//   f(x, y) = 1/B(a) * Int_lo^hi u^(a1-1) (x-u)^(a2-1) (y-u)^(a3-1)
//                                 (1-x-y+u)^(a4-1) du
//
// with lo = max(0, x+y-1) and hi = min(x, y). The integral is evaluated with
// tanh-sinh quadrature entirely in log space, so integrable endpoint
// singularities (any a_j < 1) and large shapes are handled uniformly.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "betamix/rng.hpp"

namespace betamix {

inline constexpr double kAlphaMin = 1e-3;
inline constexpr double kAlphaMax = 50.0;

/// Lower saturation value of log_pdf.
inline constexpr double kLogPdfFloor = -745.0;

/// Sampled coordinates are kept this far from 0 and 1.
inline constexpr double kSampleNudge = 1e-12;

/// Thrown when successive quadrature refinements fail to agree.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape parameters (a1, a2, a3, a4) of one bivariate beta component.
/// Each value lies in [kAlphaMin, kAlphaMax].
class BetaParams {
 public:
  BetaParams(double a1, double a2, double a3, double a4);
  explicit BetaParams(const std::array<double, 4>& a);

  double operator[](std::size_t j) const { return a_[j]; }
  const std::array<double, 4>& values() const { return a_; }
  double sum() const { return a_[0] + a_[1] + a_[2] + a_[3]; }

  /// True when every entry of `a` is within the shape bounds.
  static bool in_bounds(const std::array<double, 4>& a);

  friend bool operator==(const BetaParams&, const BetaParams&) = default;

 private:
  std::array<double, 4> a_;
};

/// A point of the open unit square.
class Point2 {
 public:
  Point2(double x, double y);

  double x() const { return x_; }
  double y() const { return y_; }

  friend bool operator==(const Point2&, const Point2&) = default;

 private:
  double x_;
  double y_;
};

struct QuadratureConfig {
  int levels = 10;        // maximum refinement depth; the step halves per level
  double abs_tol = 1e-10; // on the log-integral
  double rel_tol = 1e-8;  // on the integral

  void validate() const;
};

struct Interval {
  double lo;
  double hi;
};

struct Mean2 {
  double x;
  double y;
};

/// log B(a) = sum_i lgamma(a_i) - lgamma(sum_i a_i).
double log_beta_norm(const BetaParams& params);

/// Integration range of U1 for a given (x, y).
Interval support_interval(const Point2& p);

/// log f(x, y | a). Points lying exactly on x == y or x + y == 1, where the
/// density can be unbounded, are evaluated 1e-12 off the line. Results below
/// kLogPdfFloor saturate to it. Throws QuadratureError on non-convergence.
double log_pdf(const BetaParams& params, const Point2& p,
               const QuadratureConfig& cfg = {});

/// E[X], E[Y].
Mean2 mean(const BetaParams& params);

/// Cov(X, Y) = (a1 a4 - a2 a3) / (s^2 (s + 1)).
double covariance_xy(const BetaParams& params);

/// Var(X) and Var(Y) of the beta marginals.
Mean2 variance(const BetaParams& params);

/// log of a Gamma(shape, 1) variate. Works for any shape > 0 without
/// underflow (Marsaglia-Tsang, with the U^(1/shape) boost below 1).
double log_gamma_variate(double shape, Rng& rng);

/// One Dirichlet(a) draw.
std::array<double, 4> sample_dirichlet(const BetaParams& params, Rng& rng);

/// One (X, Y) draw.
Point2 sample_one(const BetaParams& params, Rng& rng);

/// Per-point quadrature node cache for repeated density evaluation over a
/// fixed set of points with varying parameters. Results are bitwise equal to
/// log_pdf(params, points[i], cfg). Not safe for concurrent use.
class DensityCache {
 public:
  DensityCache(std::span<const Point2> points, const QuadratureConfig& cfg = {});
  ~DensityCache();
  DensityCache(DensityCache&&) noexcept;
  DensityCache& operator=(DensityCache&&) noexcept;

  std::size_t size() const;

  double log_pdf(const BetaParams& params, std::size_t i);

  /// Same as log_pdf when log_norm == log_beta_norm(params).
  double log_pdf(const BetaParams& params, std::size_t i, double log_norm);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace betamix
