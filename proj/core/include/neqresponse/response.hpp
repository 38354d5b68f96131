#pragma once

// Linear response of <Q(x_t)> to a potential perturbation
//   W_s(x,y) = W(x,y) exp(h_s [b V(y) - a V(x)])
// switched on at time 0 from an arbitrary initial law mu, together with the
// stationary susceptibilities and finite-difference oracles used to check
// them. Correlations C(s,t) = <V(x_s) Q(x_t)>_mu are differentiated through
// the generator; differencing only appears in the *_fd oracles.

#include <string>
#include <vector>

#include "neqresponse/markov.hpp"
#include "neqresponse/perturbation.hpp"
#include "neqresponse/schedule.hpp"

namespace neqresponse {

/// The four contributions to R(t,s):
///   R = b_ds - a_dt + b_VLQ - b_LVQ
/// with b_ds = b dC/ds, a_dt = a dC/dt, b_VLQ = b <V(x_s) LQ(x_t)>,
/// b_LVQ = b <LV(x_s) Q(x_t)>.
struct ResponseTerms {
  double b_ds = 0.0;
  double a_dt = 0.0;
  double b_VLQ = 0.0;
  double b_LVQ = 0.0;

  double total() const noexcept { return b_ds - a_dt + b_VLQ - b_LVQ; }
};

ResponseTerms response_terms(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                             double a, double b, double s, double t);

/// R(t,s) for 0 < s < t.
double response_exact(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q, double a,
                      double b, double s, double t);

/// Stationary form a dC/ds - b <LV(x_s) Q(x_t)>_rho at t - s = lag.
/// Throws NotStationary if rho's residual exceeds `stationarity_tol`
/// (relative to the largest rate).
double response_exact_stationary(const Generator& g, const Distribution& rho, const Observable& v, const Observable& q,
                                 double a, double b, double lag, double stationarity_tol = 1e-10);

struct ResponseGridMetadata {
  double a = 0.0;
  double b = 0.0;
  std::string initial_law;
};

struct ResponseGrid {
  double t = 0.0;
  std::vector<double> s_points;
  std::vector<double> values;
  std::vector<ResponseTerms> terms;
  ResponseGridMetadata metadata;
};

/// R(t, s_i) on the given points (strictly inside (0, t), increasing);
/// points are evaluated concurrently on up to `threads` workers.
ResponseGrid response_grid(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                           double a, double b, double t, std::vector<double> s_points, unsigned threads = 1,
                           std::string initial_law = "mu");

/// Integral over [0, t] of h_s R(t,s) ds, split at schedule knots.
double integrated_response(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                           double a, double b, const AmplitudeSchedule& schedule, double t, double abs_tol = 1e-9);

struct FdOptions {
  double local_error_tol = 1e-12;
  double min_step = 1e-13;  // relative to t
};

/// Independent check of the linear response: integrates the master equation
/// with rates perturbed by h_scale * schedule (adaptive RK4, step doubling)
/// alongside the unperturbed one and returns (<Q(t)>^h - <Q(t)>) / h_scale.
double response_fd_oracle(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                          double a, double b, const AmplitudeSchedule& schedule, double t, double h_scale = 1e-5,
                          const FdOptions& options = {});

/// Pointwise R(t,s) without the correlation formula: with a unit field
/// switched on at sigma, H(sigma) = int_sigma^t R(t,u) du comes from
/// response_fd_oracle started at mu_sigma, and R(t,s) = -dH/dsigma by
/// central differences, Richardson-extrapolated over steps delta and 2 delta.
double response_fd_pointwise(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                             double a, double b, double s, double t, double h_scale = 1e-6, double delta = 1e-2);

/// Finite-difference values at h, h/10, h/100 and the slope of their
/// successive differences (1 for a first-order difference quotient).
struct FdConsistency {
  double values[3] = {0.0, 0.0, 0.0};
  double h[3] = {0.0, 0.0, 0.0};
  double slope = 0.0;
};

FdConsistency response_fd_richardson(const Generator& g, const Distribution& mu, const Observable& v,
                                     const Observable& q, double a, double b, const AmplitudeSchedule& schedule,
                                     double t, double h_scale = 1e-3);

struct SusceptibilityPair {
  double chi_MV = 0.0;  // response of <LM> to a V perturbation with (a, b)
  double chi_VM = 0.0;  // response of <LV> to an M perturbation with (b, a)
  double a = 0.0;
  double b = 0.0;
};

/// chi_MV = b <M LV>_rho + a <V LM>_rho, and chi_VM from the same formula
/// with (V, M) and (a, b) both exchanged.
SusceptibilityPair chi_formula(const Generator& g, const Distribution& rho, const Observable& v, const Observable& m,
                               double a, double b, double stationarity_tol = 1e-10);

/// Susceptibilities by differencing the perturbed stationary laws.
SusceptibilityPair chi_fd(const Generator& g, const Observable& v, const Observable& m, double a, double b,
                          double h_scale = 1e-5);

/// max_x |(L^V_ab - L)M - (L^M_ba - L)V - h (b - a) L(MV)|, which is O(h^2).
double generator_identity_check(const Generator& g, const Observable& v, const Observable& m, double a, double b,
                                double h);

}  // namespace neqresponse
