#pragma once

// Path-space tools: exact trajectory sampling (Gillespie for homogeneous
// rates, thinning for time-dependent ones), Girsanov log-densities of the
// perturbed versus unperturbed path measure, and Monte Carlo estimators
// built from them.
//
// Reproducibility: trajectory i of any estimator is drawn from
// RngStream{seed, i}, and per-trajectory results are reduced in index order,
// so the output does not depend on the number of worker threads.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "neqresponse/markov.hpp"
#include "neqresponse/perturbation.hpp"
#include "neqresponse/rng.hpp"
#include "neqresponse/stats.hpp"

namespace neqresponse {

struct Jump {
  double time;
  std::size_t state;
};

/// Right-continuous piecewise-constant path on [0, horizon].
class Trajectory {
 public:
  /// Jump times strictly increasing in (0, horizon]; consecutive states differ.
  Trajectory(std::size_t x0, double horizon, std::vector<Jump> jumps = {});

  std::size_t initial_state() const noexcept { return x0_; }
  double horizon() const noexcept { return horizon_; }
  const std::vector<Jump>& jumps() const noexcept { return jumps_; }

  std::size_t state_at(double t) const;
  std::size_t final_state() const noexcept { return jumps_.empty() ? x0_ : jumps_.back().state; }

  /// Calls f(state, t0, t1) for each constant piece, in time order.
  template <class F>
  void for_each_segment(F&& f) const {
    std::size_t state = x0_;
    double start = 0.0;
    for (const auto& jump : jumps_) {
      f(state, start, jump.time);
      state = jump.state;
      start = jump.time;
    }
    if (start < horizon_) f(state, start, horizon_);
  }

  /// Calls f(time, before, after) for each jump.
  template <class F>
  void for_each_jump(F&& f) const {
    std::size_t state = x0_;
    for (const auto& jump : jumps_) {
      f(jump.time, state, jump.state);
      state = jump.state;
    }
  }

 private:
  std::size_t x0_;
  double horizon_;
  std::vector<Jump> jumps_;
};

/// Draws a state from mu.
std::size_t sample_state(const Distribution& mu, Engine& engine);

/// Gillespie sample: exponential holding times at the escape rate, next state
/// proportional to W(x, .).
Trajectory sample_path(const Generator& g, std::size_t x0, double horizon, Engine& engine);
Trajectory sample_path(const Generator& g, std::size_t x0, double horizon, const RngStream& rng);

struct ThinningStats {
  double dominating_rate = 0.0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
};

/// Exact sample of the time-dependent perturbed dynamics by thinning against
/// the constant rate bound max_{|h| <= sup|h_s|, x} perturbed escape(x).
Trajectory sample_path_inhomogeneous(const Generator& g, const PerturbationSpec& spec, std::size_t x0,
                                     double horizon, Engine& engine, ThinningStats* stats = nullptr);
Trajectory sample_path_inhomogeneous(const Generator& g, const PerturbationSpec& spec, std::size_t x0,
                                     double horizon, const RngStream& rng, ThinningStats* stats = nullptr);

/// log dP^h/dP over the trajectory's horizon:
///   sum_jumps h_s [b V(x_s) - a V(x_{s-})]
///   - int_0^T sum_y W(x_s,y) [exp(h_s (b V(y) - a V(x_s))) - 1] ds.
double girsanov_log_density(const Trajectory& path, const Generator& g, const PerturbationSpec& spec);

/// First-order part of girsanov_log_density in h:
///   (b-a) sum_jumps h_s V(x_s) + a sum_jumps h_s [V(x_s) - V(x_{s-})]
///   - b int h_s LV(x_s) ds - (b-a) int h_s escape(x_s) V(x_s) ds.
double girsanov_log_density_linear(const Trajectory& path, const Generator& g, const PerturbationSpec& spec);

/// Mean of f(RngStream{seed, i}) over i < n, evaluated on `threads` workers.
MeanEstimate mc_mean(std::size_t n, std::uint64_t seed, unsigned threads,
                     const std::function<double(const RngStream&)>& f);

/// Mean of exp(girsanov_log_density) over unperturbed paths started in mu;
/// equals 1 for a correctly normalized density.
MeanEstimate girsanov_normalization(const Generator& g, const Distribution& mu, const PerturbationSpec& spec,
                                    double horizon, std::size_t n_samples, std::uint64_t seed, unsigned threads = 1);

struct McResponse {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// <Q(x_T)>^h - <Q(x_T)> to linear order, estimated as the mean over
/// unperturbed paths of girsanov_log_density_linear * (Q(x_T) - mean Q).
McResponse mc_response(const Generator& g, const Distribution& mu, const PerturbationSpec& spec, const Observable& q,
                       double horizon, std::size_t n_samples, std::uint64_t seed, unsigned threads = 1);

struct JumpMeasureCheck {
  double lhs = 0.0;        // Monte Carlo mean of sum_jumps h_s V(x_s) Q(x_T)
  double rhs = 0.0;        // int h_s sum_{x,y} mu_s(y) W(y,x) V(x) e^{(T-s)L}Q(x) ds
  double std_error = 0.0;  // of lhs
};

JumpMeasureCheck jump_measure_identity_check(const Generator& g, const Distribution& mu, const PerturbationSpec& spec,
                                             const Observable& q, double horizon, std::size_t n_samples,
                                             std::uint64_t seed, unsigned threads = 1);

/// Fraction of [0, horizon] spent in each of `n_states` states.
Distribution occupation_measure(const Trajectory& path, std::size_t n_states);

/// Writes "time,state" rows (first row is time 0 and the initial state),
/// gzip-compressed when `gzip` is set.
void write_trajectory_csv(const Trajectory& path, const StateSpace& space, const std::filesystem::path& file,
                          bool gzip = false);

}  // namespace neqresponse
