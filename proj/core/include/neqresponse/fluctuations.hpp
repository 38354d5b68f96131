#pragma once

// Donsker-Varadhan rate function of the empirical occupation measure,
//   I(mu) = - inf_{g > 0} sum_x mu(x) (Lg / g)(x),
// computed through the convex objective in u = log g
//   F(u) = sum_{x,y} mu(x) W(x,y) (exp(u(y) - u(x)) - 1),   I = -min F.

#include <cstddef>
#include <vector>

#include "neqresponse/markov.hpp"

namespace neqresponse {

class DvObjective {
 public:
  DvObjective(const Generator& g, const Distribution& mu);

  double value(const Vector& u) const;
  /// dF/du(z) = sum_x e_{xz} - sum_y e_{zy}, with e_{xy} = mu(x) W(x,y) e^{u(y)-u(x)}.
  Vector gradient(const Vector& u) const;
  /// Weighted graph Laplacian with edge weights e_{xy} + e_{yx}.
  Matrix hessian(const Vector& u) const;

 private:
  const Generator* g_;
  Vector mu_;
};

struct DvOptions {
  double tol = 1e-10;          // sup-norm of the gradient at the optimum
  std::size_t max_iterations = 200;
  std::vector<double> barrier_masses{1e-6, 1e-8};  // continuation for zero-mass states
};

struct DvResult {
  double rate = 0.0;
  Observable minimizer;  // u = log g with u(reference) = 0
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool extrapolated = false;  // zero-mass states were handled by continuation
};

/// Newton's method with Armijo backtracking on the gauge-fixed objective.
/// States with mu(x) = 0 are lifted to mass eps for each barrier mass; the
/// rate is then extrapolated linearly in sqrt(eps) to eps = 0 and flagged.
DvResult dv_rate_function(const Generator& g, const Distribution& mu, const DvOptions& options = {});

/// -sum_x mu(x) sum_y W(x,y) [exp((b h / 2)(M(y) - M(x))) - 1], i.e. -F at
/// u = (b h / 2) M; its supremum over M is I(mu).
double dv_restricted(const Generator& g, const Distribution& mu, const Observable& m, double b, double h);

/// Stationary law of the constant-h perturbed generator.
Distribution perturbed_stationary(const Generator& g, const Observable& v, double a, double b, double h);

struct Prop3Row {
  double h = 0.0;
  double rate = 0.0;   // I(mu^h) for the unperturbed generator
  double rhs = 0.0;    // -(b h / 4) sum_x mu^h(x) LV(x)
  double error = 0.0;  // |rate - rhs|
};

struct Prop3Table {
  std::vector<Prop3Row> rows;
  double error_slope = 0.0;  // log-log slope of error against h over rows with h > 0
  double rate_slope = 0.0;   // same for I(mu^h) alone
};

/// Compares the occupation rate of the perturbed stationary law with the
/// escape-rate correlation at each amplitude. Rows are independent and may be
/// evaluated concurrently.
Prop3Table prop3_check(const Generator& g, const Observable& v, double a, double b, const std::vector<double>& h_list,
                       unsigned threads = 1);

struct EscapeExpansion {
  double lhs = 0.0;  // sum mu W [1 - exp(b h (V(y)-V(x)) / 2)]
  double rhs = 0.0;  // -(bh/2) sum mu W dV - (b^2 h^2 / 8) sum rho W dV^2
};

EscapeExpansion escape_rate_interpretation(const Generator& g, const Distribution& mu, const Observable& v, double b,
                                           double h);

}  // namespace neqresponse
