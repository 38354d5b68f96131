#pragma once

#include <functional>
#include <span>

namespace neqresponse {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod integration of f over [a, b] to the given
/// absolute tolerance. Throws QuadratureFailure (with the achieved error
/// estimate in the message) when the tolerance is not met.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           unsigned max_depth = 18);

/// As above, but splits [a, b] at the given interior breakpoints and
/// distributes the tolerance over the pieces.
QuadratureResult integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                                     std::span<const double> breakpoints, double abs_tol, unsigned max_depth = 18);

}  // namespace neqresponse
