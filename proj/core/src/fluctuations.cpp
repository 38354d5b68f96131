#include "neqresponse/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neqresponse/error.hpp"
#include "neqresponse/parallel.hpp"
#include "neqresponse/perturbation.hpp"
#include "neqresponse/stats.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "fluctuations";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

// Gauge-fixed Newton solve for a strictly positive mu.
DvResult minimize_positive(const Generator& g, const Distribution& mu, const DvOptions& options) {
  const DvObjective objective(g, mu);
  const auto n = Eigen::Index(g.size());
  Eigen::Index reference = 0;
  mu.values().maxCoeff(&reference);

  // Free coordinates: all states except the reference.
  auto expand = [&](const Vector& free) {
    Vector u(n);
    for (Eigen::Index i = 0, k = 0; i < n; ++i) u[i] = i == reference ? 0.0 : free[k++];
    return u;
  };
  auto restrict = [&](const Vector& full) {
    Vector free(n - 1);
    for (Eigen::Index i = 0, k = 0; i < n; ++i) {
      if (i != reference) free[k++] = full[i];
    }
    return free;
  };
  auto restrict_matrix = [&](const Matrix& full) {
    Matrix out(n - 1, n - 1);
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
      if (i == reference) continue;
      for (Eigen::Index j = 0, c = 0; j < n; ++j) {
        if (j == reference) continue;
        out(r, c++) = full(i, j);
      }
      ++r;
    }
    return out;
  };

  Vector free = Vector::Zero(n - 1);
  Vector u = expand(free);
  double f = objective.value(u);
  Vector grad = restrict(objective.gradient(u));
  std::size_t iteration = 0;
  while (grad.cwiseAbs().maxCoeff() > options.tol) {
    if (iteration++ >= options.max_iterations) {
      std::ostringstream os;
      os << "Newton did not reach gradient tolerance " << options.tol << " in " << options.max_iterations
         << " iterations (gradient " << grad.cwiseAbs().maxCoeff() << ")";
      fail(ErrorKind::MaxIterations, os.str());
    }
    Matrix hess = restrict_matrix(objective.hessian(u));
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() != Eigen::Success) {
      hess.diagonal().array() += 1e-14 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      llt.compute(hess);
      if (llt.info() != Eigen::Success) fail(ErrorKind::SolverFailure, "Hessian is not positive definite");
    }
    const Vector step = -llt.solve(grad);
    const double slope = grad.dot(step);
    const double noise = 1e-14 * std::max(1.0, std::abs(f));
    Vector trial_free = free + step;
    double trial_f = objective.value(expand(trial_free));
    if (-slope <= 1e3 * noise) {
      // Predicted decrease is at round-off level: Newton is in its quadratic
      // regime and backtracking would only accept vanishing steps.
      if (!(trial_f <= f + noise)) fail(ErrorKind::SolverFailure, "line search failed to decrease the objective");
    } else {
      double alpha = 1.0;
      int backtrack = 0;
      while (!(std::isfinite(trial_f) && trial_f <= f + 1e-4 * alpha * slope)) {
        if (++backtrack > 60) fail(ErrorKind::SolverFailure, "line search failed to decrease the objective");
        alpha *= 0.5;
        trial_free = free + alpha * step;
        trial_f = objective.value(expand(trial_free));
      }
    }
    free = trial_free;
    u = expand(free);
    f = trial_f;
    grad = restrict(objective.gradient(u));
  }
  return DvResult{-f, Observable(u), grad.cwiseAbs().maxCoeff(), iteration, false};
}

}  // namespace

DvObjective::DvObjective(const Generator& g, const Distribution& mu) : g_(&g), mu_(mu.values()) {
  if (mu.size() != g.size()) fail(ErrorKind::DimensionMismatch, "distribution dimension");
}

double DvObjective::value(const Vector& u) const {
  const auto& w = g_->rates();
  CompensatedSum sum;
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    if (mu_[x] == 0.0) continue;
    for (RateMatrix::InnerIterator it(w, x); it; ++it) sum.add(mu_[x] * it.value() * std::expm1(u[it.col()] - u[x]));
  }
  return sum.value();
}

Vector DvObjective::gradient(const Vector& u) const {
  const auto& w = g_->rates();
  Vector grad = Vector::Zero(u.size());
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) {
      const double e = mu_[x] * it.value() * std::exp(u[it.col()] - u[x]);
      grad[it.col()] += e;
      grad[x] -= e;
    }
  }
  return grad;
}

Matrix DvObjective::hessian(const Vector& u) const {
  const auto& w = g_->rates();
  Matrix hess = Matrix::Zero(u.size(), u.size());
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) {
      const Eigen::Index y = it.col();
      const double e = mu_[x] * it.value() * std::exp(u[y] - u[x]);
      hess(y, y) += e;
      hess(x, x) += e;
      hess(x, y) -= e;
      hess(y, x) -= e;
    }
  }
  return hess;
}

DvResult dv_rate_function(const Generator& g, const Distribution& mu, const DvOptions& options) {
  if (mu.size() != g.size()) fail(ErrorKind::DimensionMismatch, "distribution dimension");
  const bool has_zero = (mu.values().array() == 0.0).any();
  if (!has_zero) return minimize_positive(g, mu, options);

  if (options.barrier_masses.size() < 2) {
    fail(ErrorKind::ZeroMassState, "distribution has zero-mass states and no barrier continuation was configured");
  }
  // Every zero-mass state is reachable (G irreducible), so I(mu) is finite and
  // is approached as the lifted mass eps -> 0.
  std::vector<double> eps;
  std::vector<DvResult> results;
  for (double e : options.barrier_masses) {
    Vector lifted = mu.values();
    for (Eigen::Index i = 0; i < lifted.size(); ++i) {
      if (lifted[i] == 0.0) lifted[i] = e;
    }
    lifted /= lifted.sum();
    eps.push_back(e);
    results.push_back(minimize_positive(g, Distribution(lifted), options));
  }
  const std::size_t last = results.size() - 1;
  const double e1 = eps[last - 1], e2 = eps[last];
  const double i1 = results[last - 1].rate, i2 = results[last].rate;
  // The lifted rate approaches its limit like sqrt(eps).
  const double s1 = std::sqrt(e1), s2 = std::sqrt(e2);
  DvResult out = results[last];
  out.rate = i2 - s2 * (i1 - i2) / (s1 - s2);
  out.extrapolated = true;
  return out;
}

double dv_restricted(const Generator& g, const Distribution& mu, const Observable& m, double b, double h) {
  if (m.size() != g.size()) fail(ErrorKind::DimensionMismatch, "observable dimension");
  return -DvObjective(g, mu).value(0.5 * b * h * m.values());
}

Distribution perturbed_stationary(const Generator& g, const Observable& v, double a, double b, double h) {
  return stationary_distribution(perturbed_generator(g, v, a, b, h));
}

Prop3Table prop3_check(const Generator& g, const Observable& v, double a, double b, const std::vector<double>& h_list,
                       unsigned threads) {
  if (v.size() != g.size()) fail(ErrorKind::DimensionMismatch, "observable dimension");
  for (double h : h_list) {
    if (!(h >= 0.0) || !std::isfinite(h)) fail(ErrorKind::InvalidArgument, "amplitudes must be nonnegative");
  }
  const Vector lv = apply_L(g, v.values());
  Prop3Table table;
  table.rows.resize(h_list.size());
  parallel_for(h_list.size(), threads, [&](std::size_t i) {
    const double h = h_list[i];
    Prop3Row row;
    row.h = h;
    if (h > 0.0) {
      const Distribution mu_h = perturbed_stationary(g, v, a, b, h);
      row.rate = dv_rate_function(g, mu_h).rate;
      row.rhs = -(b * h / 4.0) * mu_h.values().dot(lv);
    }
    row.error = std::abs(row.rate - row.rhs);
    table.rows[i] = row;
  });
  std::vector<double> hs, errors, rates;
  for (const auto& row : table.rows) {
    if (row.h <= 0.0) continue;
    hs.push_back(row.h);
    errors.push_back(row.error);
    rates.push_back(row.rate);
  }
  if (hs.size() >= 2) {
    table.error_slope = loglog_slope(hs, errors);
    table.rate_slope = loglog_slope(hs, rates);
  }
  return table;
}

EscapeExpansion escape_rate_interpretation(const Generator& g, const Distribution& mu, const Observable& v, double b,
                                           double h) {
  if (mu.size() != g.size() || v.size() != g.size()) fail(ErrorKind::DimensionMismatch, "dimension");
  const Distribution rho = stationary_distribution(g);
  const auto& w = g.rates();
  CompensatedSum lhs, first, second;
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) {
      const double dv = v[std::size_t(it.col())] - v[std::size_t(x)];
      lhs.add(-mu[std::size_t(x)] * it.value() * std::expm1(b * h * dv / 2.0));
      first.add(mu[std::size_t(x)] * it.value() * dv);
      second.add(rho[std::size_t(x)] * it.value() * dv * dv);
    }
  }
  return {lhs.value(), -(b * h / 2.0) * first.value() - (b * b * h * h / 8.0) * second.value()};
}

}  // namespace neqresponse
