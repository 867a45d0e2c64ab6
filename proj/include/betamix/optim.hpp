#pragma once

// Bound-constrained maximization over four parameters: projected BFGS with
// central finite-difference gradients and a projected Armijo line search.

#include <array>
#include <functional>

namespace betamix {

using Vec4 = std::array<double, 4>;
using Objective4 = std::function<double(const Vec4&)>;

struct Bounds4 {
  Vec4 lower;
  Vec4 upper;

  /// [kAlphaMin, kAlphaMax] on every coordinate.
  static Bounds4 alpha_defaults();

  void validate() const;
  bool contains(const Vec4& v) const;
  Vec4 project(const Vec4& v) const;
};

struct OptimOptions {
  int max_iters = 100;
  double tol = 1e-6;  // projected-gradient infinity norm
  // An accepted step whose improvement is at most ftol * max(1, |f|) also
  // ends the search as converged.
  double ftol = 1e-12;
};

struct OptimReport {
  Vec4 argmax;
  double value;
  int iterations;
  int evaluations;
  bool converged;
};

/// Maximizes `objective` over the box. The returned value is never below the
/// objective at the (projected) start. Non-finite evaluations are treated as
/// -infinity. Throws std::invalid_argument if the start value is not finite.
OptimReport maximize(const Objective4& objective, const Vec4& start,
                     const Bounds4& bounds, const OptimOptions& options = {});

/// Central-difference gradient with steps max(1e-6, 1e-6 |x_j|), evaluation
/// points clamped into the box. `fx` is objective(x) and is used for the
/// one-sided fallback when one neighbour is non-finite.
Vec4 finite_difference_gradient(const Objective4& objective, const Vec4& x, double fx,
                                const Bounds4& bounds);

}  // namespace betamix
