#pragma once

// Finite-state continuous-time Markov jump processes: generators, master
// equation propagation, stationary laws and two-time correlations.
//
// Conventions. Rates W(x,y) live on the off-diagonal; the backward generator
// acts on observables as Lf(x) = sum_y W(x,y) [f(y) - f(x)] ("column
// action") and on distributions as (mu L)(y) = sum_x mu(x) L(x,y) ("row
// action", the right-hand side of the master equation).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace neqresponse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RateMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Largest state space the exact (dense) pipeline accepts.
inline constexpr std::size_t kMaxExactStates = 4096;

class StateSpace {
 public:
  /// Labels must be unique and there must be at least two of them.
  explicit StateSpace(std::vector<std::string> labels);

  /// States labelled "0", "1", ..., "n-1".
  static StateSpace indexed(std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> find(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Transition {
  std::size_t from;
  std::size_t to;
  double rate;
};

/// Rate matrix of an irreducible jump process. Immutable once built.
class Generator {
 public:
  /// Validates rates (positive, off-diagonal, no duplicates), the size bound
  /// and irreducibility of the positive-rate digraph.
  static Generator build(StateSpace space, std::span<const Transition> transitions);

  std::size_t size() const noexcept { return space_.size(); }
  const StateSpace& space() const noexcept { return space_; }

  /// Off-diagonal rates, row x holds the exits from x.
  const RateMatrix& rates() const noexcept { return rates_; }
  double rate(std::size_t from, std::size_t to) const { return rates_.coeff(Eigen::Index(from), Eigen::Index(to)); }
  const Vector& escape() const noexcept { return escape_; }
  double max_escape() const noexcept { return max_escape_; }
  double max_rate() const noexcept { return max_rate_; }

  std::vector<Transition> transitions() const;

  /// Explicit L with L(x,x) = -escape(x).
  Matrix dense_generator() const;

  /// Rebuilds the generator with rate(x,y) replaced by f(x, y, rate), on the
  /// same sparsity pattern. `f` must return strictly positive finite values,
  /// so irreducibility carries over and is not re-checked.
  template <class F>
  Generator map_rates(F&& f) const {
    RateMatrix mapped = rates_;
    for (Eigen::Index x = 0; x < mapped.outerSize(); ++x) {
      for (RateMatrix::InnerIterator it(mapped, x); it; ++it) {
        it.valueRef() = f(std::size_t(x), std::size_t(it.col()), it.value());
      }
    }
    return Generator(space_, std::move(mapped));
  }

 private:
  Generator(StateSpace space, RateMatrix rates);

  StateSpace space_;
  RateMatrix rates_;
  Vector escape_;
  double max_escape_ = 0.0;
  double max_rate_ = 0.0;
};

/// Probability vector; entries nonnegative and summing to one within 1e-12.
class Distribution {
 public:
  explicit Distribution(Vector p);

  /// Clamps entries in [-clamp_tol, 0) to zero and renormalizes.
  static Distribution normalized(Vector p, double clamp_tol = 1e-12);
  static Distribution uniform(std::size_t n);
  static Distribution point_mass(std::size_t n, std::size_t x);

  std::size_t size() const noexcept { return std::size_t(p_.size()); }
  const Vector& values() const noexcept { return p_; }
  double operator[](std::size_t x) const { return p_[Eigen::Index(x)]; }

 private:
  Vector p_;
};

/// Real-valued function on states.
class Observable {
 public:
  explicit Observable(Vector f);
  static Observable constant(std::size_t n, double value);
  static Observable indicator(std::size_t n, std::size_t x);

  std::size_t size() const noexcept { return std::size_t(f_.size()); }
  const Vector& values() const noexcept { return f_; }
  double operator[](std::size_t x) const { return f_[Eigen::Index(x)]; }

 private:
  Vector f_;
};

struct UniformizationOptions {
  double rate_factor = 1.05;   // Lambda = rate_factor * max escape
  double tail_mass = 1e-13;    // neglected Poisson mass
};

/// Lf for an observable f.
Observable apply_L(const Generator& g, const Observable& f);
Vector apply_L(const Generator& g, const Vector& f);

/// mu L, the master-equation velocity of a (signed) measure.
Vector row_action(const Generator& g, const Vector& mu);

/// max_x |(pL)(x)| / max rate; zero for an exactly stationary p.
double stationarity_residual(const Generator& g, const Vector& p);

struct StationaryOptions {
  double condition_warning = 1e12;
  double residual_tol = 1e-12;  // relative to max rate
};

Distribution stationary_distribution(const Generator& g, const StationaryOptions& options = {});

struct DetailedBalanceReport {
  bool is_reversible = true;
  double max_violation = 0.0;
  std::pair<std::size_t, std::size_t> worst_edge{0, 0};
};

DetailedBalanceReport check_detailed_balance(const Generator& g, const Distribution& rho, double tol = 1e-10);

/// mu_0 e^{tL} by uniformization.
Distribution propagate(const Generator& g, const Distribution& mu0, double t, const UniformizationOptions& options = {});

/// e^{tL} f by uniformization.
Observable semigroup_apply(const Generator& g, const Observable& f, double t, const UniformizationOptions& options = {});

/// Raw uniformization on vectors; `row` selects mu e^{tL} instead of e^{tL} f.
/// Signed inputs are allowed and no clamping is performed.
Vector uniformized_exp(const Generator& g, const Vector& v, double t, bool row, const UniformizationOptions& options = {});

/// <V(x_s) Q(x_t)>_mu for 0 <= s <= t.
double correlation(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q, double s, double t);

struct CorrelationDerivatives {
  double d_ds = 0.0;
  double d_dt = 0.0;
};

/// Analytic partial derivatives of correlation() in s and t.
CorrelationDerivatives correlation_derivatives(const Generator& g, const Distribution& mu, const Observable& v,
                                               const Observable& q, double s, double t);

/// Adjoint of L in the rho-weighted scalar product, i.e. the generator of
/// the time-reversed stationary process: L*(x,y) = rho(y) L(y,x) / rho(x).
Generator adjoint_in_rho(const Generator& g, const Distribution& rho);

double dot(const Distribution& mu, const Observable& f);

}  // namespace neqresponse
