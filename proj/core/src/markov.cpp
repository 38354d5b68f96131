#include "neqresponse/markov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

#include "neqresponse/diagnostics.hpp"
#include "neqresponse/error.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "markov-core";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

void require_size(std::size_t expected, std::size_t actual, std::string_view what) {
  if (expected != actual) {
    std::ostringstream os;
    os << what << " has dimension " << actual << ", expected " << expected;
    fail(ErrorKind::DimensionMismatch, os.str());
  }
}

void require_time(double t, std::string_view what) {
  if (!std::isfinite(t)) fail(ErrorKind::NonFiniteTime, std::string(what) + " is not finite");
  if (t < 0.0) fail(ErrorKind::InvalidArgument, std::string(what) + " must be nonnegative");
}

// Strongly connected components of the positive-rate digraph, each listed by
// its member states in increasing order.
std::vector<std::vector<std::size_t>> strong_components(std::size_t n, std::span<const Transition> transitions) {
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  Graph graph(n);
  for (const auto& tr : transitions) boost::add_edge(tr.from, tr.to, graph);
  std::vector<int> component(n);
  const int count = boost::strong_components(graph, component.data());
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(count));
  for (std::size_t x = 0; x < n; ++x) groups[std::size_t(component[x])].push_back(x);
  return groups;
}

// Poisson(lambda) weights on [lo, hi] covering all but `tail` of the mass.
struct PoissonWindow {
  std::size_t lo = 0;
  std::vector<double> weights;
};

PoissonWindow poisson_window(double lambda, double tail) {
  PoissonWindow window;
  if (lambda <= 0.0) {
    window.weights = {1.0};
    return window;
  }
  auto log_pmf = [lambda](std::size_t k) {
    return -lambda + double(k) * std::log(lambda) - std::lgamma(double(k) + 1.0);
  };
  const auto mode = std::size_t(std::floor(lambda));
  std::size_t lo = mode;
  std::size_t hi = mode;
  double mass = std::exp(log_pmf(mode));
  // Grow toward whichever side currently carries the heavier next term.
  while (mass < 1.0 - tail) {
    const double left = lo > 0 ? std::exp(log_pmf(lo - 1)) : 0.0;
    const double right = std::exp(log_pmf(hi + 1));
    if (left >= right && lo > 0) {
      --lo;
      mass += left;
    } else {
      ++hi;
      mass += right;
    }
    if (left == 0.0 && right == 0.0) break;
  }
  window.lo = lo;
  window.weights.reserve(hi - lo + 1);
  double total = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    window.weights.push_back(std::exp(log_pmf(k)));
    total += window.weights.back();
  }
  // Spreading the dropped tail over the window keeps e^{tL} 1 = 1.
  for (double& w : window.weights) w /= total;
  return window;
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSpace

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) fail(ErrorKind::InvalidArgument, "a state space needs at least two states");
  index_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      fail(ErrorKind::InvalidArgument, "duplicate state label '" + labels_[i] + "'");
    }
  }
}

StateSpace StateSpace::indexed(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return StateSpace(std::move(labels));
}

std::optional<std::size_t> StateSpace::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(StateSpace space, RateMatrix rates) : space_(std::move(space)), rates_(std::move(rates)) {
  rates_.makeCompressed();
  const auto n = Eigen::Index(space_.size());
  escape_ = Vector::Zero(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (RateMatrix::InnerIterator it(rates_, x); it; ++it) {
      escape_[x] += it.value();
      max_rate_ = std::max(max_rate_, it.value());
    }
  }
  max_escape_ = escape_.maxCoeff();
}

Generator Generator::build(StateSpace space, std::span<const Transition> transitions) {
  const std::size_t n = space.size();
  if (n > kMaxExactStates) {
    fail(ErrorKind::ModelTooLarge, std::to_string(n) + " states exceed the exact-pipeline limit of " +
                                       std::to_string(kMaxExactStates) + "; use path-space sampling instead");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(transitions.size());
  for (const auto& tr : transitions) {
    if (tr.from >= n || tr.to >= n) fail(ErrorKind::InvalidArgument, "transition references a state outside the space");
    if (tr.from == tr.to) fail(ErrorKind::InvalidArgument, "self-transition on state '" + space.label(tr.from) + "'");
    if (!(tr.rate > 0.0) || !std::isfinite(tr.rate)) {
      std::ostringstream os;
      os << "rate " << space.label(tr.from) << " -> " << space.label(tr.to) << " is " << tr.rate
         << "; rates must be positive and finite";
      fail(ErrorKind::NegativeRate, os.str());
    }
    if (!seen.emplace(tr.from, tr.to).second) {
      fail(ErrorKind::DuplicateEdge, "duplicate transition " + space.label(tr.from) + " -> " + space.label(tr.to));
    }
    triplets.emplace_back(Eigen::Index(tr.from), Eigen::Index(tr.to), tr.rate);
  }
  const auto components = strong_components(n, transitions);
  if (components.size() > 1) {
    std::ostringstream os;
    os << "rate graph has " << components.size() << " strongly connected components:";
    for (const auto& comp : components) {
      os << " {";
      for (std::size_t i = 0; i < comp.size(); ++i) os << (i ? "," : "") << space.label(comp[i]);
      os << "}";
    }
    fail(ErrorKind::NotIrreducible, os.str());
  }
  RateMatrix rates{static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)};
  rates.setFromTriplets(triplets.begin(), triplets.end());
  return Generator(std::move(space), std::move(rates));
}

std::vector<Transition> Generator::transitions() const {
  std::vector<Transition> out;
  out.reserve(std::size_t(rates_.nonZeros()));
  for (Eigen::Index x = 0; x < rates_.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(rates_, x); it; ++it) {
      out.push_back({std::size_t(x), std::size_t(it.col()), it.value()});
    }
  }
  return out;
}

Matrix Generator::dense_generator() const {
  Matrix l = Matrix(rates_);
  l.diagonal() = -escape_;
  return l;
}

// ---------------------------------------------------------------------------
// Distribution / Observable

Distribution::Distribution(Vector p) : p_(std::move(p)) {
  if (p_.size() < 1) fail(ErrorKind::InvalidArgument, "empty distribution");
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!std::isfinite(p_[i]) || p_[i] < 0.0) {
      fail(ErrorKind::InvalidArgument, "distribution entry " + std::to_string(i) + " is negative or not finite");
    }
  }
  if (std::abs(p_.sum() - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "distribution does not sum to one");
}

Distribution Distribution::normalized(Vector p, double clamp_tol) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 && p[i] >= -clamp_tol) p[i] = 0.0;
  }
  const double total = p.sum();
  if (!(total > 0.0)) fail(ErrorKind::InvalidArgument, "cannot normalize a vector with nonpositive mass");
  return Distribution(p / total);
}

Distribution Distribution::uniform(std::size_t n) {
  return Distribution(Vector::Constant(Eigen::Index(n), 1.0 / double(n)));
}

Distribution Distribution::point_mass(std::size_t n, std::size_t x) {
  Vector p = Vector::Zero(Eigen::Index(n));
  p[Eigen::Index(x)] = 1.0;
  return Distribution(std::move(p));
}

Observable::Observable(Vector f) : f_(std::move(f)) {
  if (!f_.allFinite()) fail(ErrorKind::InvalidArgument, "observable has non-finite entries");
}

Observable Observable::constant(std::size_t n, double value) {
  return Observable(Vector::Constant(Eigen::Index(n), value));
}

Observable Observable::indicator(std::size_t n, std::size_t x) {
  Vector f = Vector::Zero(Eigen::Index(n));
  f[Eigen::Index(x)] = 1.0;
  return Observable(std::move(f));
}

double dot(const Distribution& mu, const Observable& f) {
  require_size(mu.size(), f.size(), "observable");
  return mu.values().dot(f.values());
}

// ---------------------------------------------------------------------------
// Generator actions

Vector apply_L(const Generator& g, const Vector& f) {
  require_size(g.size(), std::size_t(f.size()), "observable");
  return g.rates() * f - g.escape().cwiseProduct(f);
}

Observable apply_L(const Generator& g, const Observable& f) { return Observable(apply_L(g, f.values())); }

Vector row_action(const Generator& g, const Vector& mu) {
  require_size(g.size(), std::size_t(mu.size()), "measure");
  Vector out = g.rates().transpose() * mu;
  out -= g.escape().cwiseProduct(mu);
  return out;
}

double stationarity_residual(const Generator& g, const Vector& p) {
  return row_action(g, p).cwiseAbs().maxCoeff() / g.max_rate();
}

Distribution stationary_distribution(const Generator& g, const StationaryOptions& options) {
  const auto n = Eigen::Index(g.size());
  // rho L = 0  <=>  L^T rho = 0; the last equation is redundant and is
  // replaced by normalization.
  Matrix a = g.dense_generator().transpose();
  a.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || !std::isfinite(rcond)) fail(ErrorKind::SolverFailure, "stationary system is singular");
  if (1.0 / rcond > options.condition_warning) {
    std::ostringstream os;
    os << "stationary system condition estimate " << 1.0 / rcond << " exceeds " << options.condition_warning;
    warn(kModule, os.str());
  }
  Vector rho = lu.solve(rhs);
  // One step of iterative refinement.
  rho += lu.solve(rhs - a * rho);
  if (!rho.allFinite()) fail(ErrorKind::SolverFailure, "stationary solve produced non-finite values");
  const double floor = -1e-10 * rho.cwiseAbs().maxCoeff();
  if (rho.minCoeff() < floor) fail(ErrorKind::SolverFailure, "stationary solve produced a negative probability");
  rho = rho.cwiseMax(0.0);
  rho /= rho.sum();
  const double residual = stationarity_residual(g, rho);
  if (residual > options.residual_tol) {
    std::ostringstream os;
    os << "stationary residual " << residual << " exceeds " << options.residual_tol;
    warn(kModule, os.str());
  }
  return Distribution(std::move(rho));
}

DetailedBalanceReport check_detailed_balance(const Generator& g, const Distribution& rho, double tol) {
  require_size(g.size(), rho.size(), "distribution");
  const auto& w = g.rates();
  double normalizer = 0.0;
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) normalizer = std::max(normalizer, rho.values()[x] * it.value());
  }
  DetailedBalanceReport report;
  if (normalizer == 0.0) return report;
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) {
      const Eigen::Index y = it.col();
      const double flux = rho.values()[x] * it.value() - rho.values()[y] * w.coeff(y, x);
      const double violation = std::abs(flux) / normalizer;
      if (violation > report.max_violation) {
        report.max_violation = violation;
        report.worst_edge = {std::size_t(x), std::size_t(y)};
      }
    }
  }
  report.is_reversible = report.max_violation <= tol;
  return report;
}

Vector uniformized_exp(const Generator& g, const Vector& v, double t, bool row, const UniformizationOptions& options) {
  require_size(g.size(), std::size_t(v.size()), row ? "measure" : "observable");
  require_time(t, "time");
  if (t == 0.0) return v;
  const double lambda = options.rate_factor * g.max_escape();
  const PoissonWindow window = poisson_window(lambda * t, options.tail_mass);
  // P = I + L / lambda is a stochastic matrix.
  const double inv = 1.0 / lambda;
  const Vector keep = Vector::Ones(v.size()) - g.escape() * inv;
  auto step = [&](const Vector& x) -> Vector {
    if (row) return (g.rates().transpose() * x) * inv + keep.cwiseProduct(x);
    return (g.rates() * x) * inv + keep.cwiseProduct(x);
  };
  Vector power = v;
  Vector acc = Vector::Zero(v.size());
  const std::size_t hi = window.lo + window.weights.size() - 1;
  for (std::size_t k = 0; k <= hi; ++k) {
    if (k >= window.lo) acc += window.weights[k - window.lo] * power;
    if (k < hi) power = step(power);
  }
  return acc;
}

Distribution propagate(const Generator& g, const Distribution& mu0, double t, const UniformizationOptions& options) {
  require_size(g.size(), mu0.size(), "distribution");
  require_time(t, "time");
  if (t == 0.0) return mu0;
  Vector p = uniformized_exp(g, mu0.values(), t, true, options);
  const double min = p.minCoeff();
  if (min < -1e-14) {
    std::ostringstream os;
    os << "propagated distribution had entry " << min << " below -1e-14; clamped";
    warn(kModule, os.str());
  }
  p = p.cwiseMax(0.0);
  return Distribution(p / p.sum());
}

Observable semigroup_apply(const Generator& g, const Observable& f, double t, const UniformizationOptions& options) {
  return Observable(uniformized_exp(g, f.values(), t, false, options));
}

double correlation(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q, double s,
                   double t) {
  require_time(s, "s");
  require_time(t, "t");
  if (s > t) fail(ErrorKind::TimeOrder, "correlation requires s <= t");
  require_size(g.size(), v.size(), "V");
  require_size(g.size(), q.size(), "Q");
  const Vector mu_s = uniformized_exp(g, mu.values(), s, true);
  const Vector q_evolved = uniformized_exp(g, q.values(), t - s, false);
  return mu_s.dot(v.values().cwiseProduct(q_evolved));
}

CorrelationDerivatives correlation_derivatives(const Generator& g, const Distribution& mu, const Observable& v,
                                               const Observable& q, double s, double t) {
  require_time(s, "s");
  require_time(t, "t");
  if (s > t) fail(ErrorKind::TimeOrder, "correlation derivatives require s <= t");
  require_size(g.size(), v.size(), "V");
  require_size(g.size(), q.size(), "Q");
  const Vector mu_s = uniformized_exp(g, mu.values(), s, true);
  const Vector mu_dot = row_action(g, mu_s);
  const Vector q_evolved = uniformized_exp(g, q.values(), t - s, false);
  const Vector l_q_evolved = apply_L(g, q_evolved);
  CorrelationDerivatives d;
  d.d_dt = mu_s.dot(v.values().cwiseProduct(l_q_evolved));
  d.d_ds = mu_dot.dot(v.values().cwiseProduct(q_evolved)) - d.d_dt;
  return d;
}

Generator adjoint_in_rho(const Generator& g, const Distribution& rho) {
  require_size(g.size(), rho.size(), "distribution");
  for (std::size_t x = 0; x < rho.size(); ++x) {
    if (!(rho[x] > 0.0)) {
      fail(ErrorKind::ZeroProbabilityState, "state '" + g.space().label(x) + "' has zero stationary probability");
    }
  }
  std::vector<Transition> reversed;
  for (const auto& tr : g.transitions()) {
    reversed.push_back({tr.to, tr.from, rho[tr.from] * tr.rate / rho[tr.to]});
  }
  return Generator::build(g.space(), reversed);
}

}  // namespace neqresponse
