#pragma once

// Potential perturbations of jump rates,
//   W_s(x,y) = W(x,y) exp(h_s [b V(y) - a V(x)]),
// with a + b playing the role of the reservoir inverse temperature.

#include <cstddef>
#include <utility>

#include "neqresponse/markov.hpp"
#include "neqresponse/schedule.hpp"

namespace neqresponse {

struct PerturbationSpec {
  Observable potential;
  double a = 0.0;
  double b = 0.0;
  AmplitudeSchedule schedule = AmplitudeSchedule::constant(0.0);

  double beta() const noexcept { return a + b; }
};

/// Constant-amplitude perturbed generator.
Generator perturbed_generator(const Generator& g, const Observable& v, double a, double b, double h);

/// Frozen-time generator at time s of the schedule.
Generator perturbed_generator(const Generator& g, const PerturbationSpec& spec, double s);

struct LocalDetailedBalanceReport {
  double max_residual = 0.0;
  std::pair<std::size_t, std::size_t> worst_edge{0, 0};
};

/// Largest deviation, over edges, of
///   log[W_s(x,y)/W_s(y,x)] - log[W(x,y)/W(y,x)] - beta h_s (V(y) - V(x)).
/// `beta` is the reservoir value the perturbation is meant to respect.
LocalDetailedBalanceReport check_local_detailed_balance(const Generator& g, const PerturbationSpec& spec, double beta,
                                                        double s);

/// W_s = W * psi * force with psi symmetric and force carrying the ratio.
struct PrefactorSplit {
  RateMatrix symmetric;  // psi_s(x,y) = exp(h_s (b-a)/2 [V(y)+V(x)])
  RateMatrix force;      // exp(h_s (a+b)/2 [V(y)-V(x)])
};

PrefactorSplit symmetric_prefactor_split(const Generator& g, const PerturbationSpec& spec, double s);

/// Edge coefficients c(x,y) = b V(y) - a V(x) laid out on the sparsity
/// pattern of W, so perturbed actions can be formed for any amplitude
/// without materializing a generator.
class PerturbationKernel {
 public:
  PerturbationKernel(const Generator& g, const Observable& v, double a, double b);

  const Generator& base() const noexcept { return g_; }
  const RateMatrix& coefficients() const noexcept { return coeff_; }

  /// Rates W(x,y) exp(h c(x,y)).
  RateMatrix rates(double h) const;

  /// mu L_h for the perturbed generator at amplitude h.
  Vector row_action(const Vector& mu, double h) const;

  /// Largest perturbed escape rate over all |h| <= h_max.
  double escape_bound(double h_max) const;

 private:
  Generator g_;
  RateMatrix coeff_;
};

}  // namespace neqresponse
