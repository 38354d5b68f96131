#include "neqresponse/response.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neqresponse/error.hpp"
#include "neqresponse/parallel.hpp"
#include "neqresponse/quadrature.hpp"
#include "neqresponse/stats.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "response";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

void require_times(double s, double t) {
  if (!std::isfinite(s) || !std::isfinite(t)) fail(ErrorKind::NonFiniteTime, "response times must be finite");
  if (s < 0.0) fail(ErrorKind::InvalidArgument, "response time s must be nonnegative");
  if (s > t) fail(ErrorKind::TimeOrder, "response requires s <= t");
}

void require_stationary(const Generator& g, const Distribution& rho, double tol) {
  const double residual = stationarity_residual(g, rho.values());
  if (residual > tol) {
    std::ostringstream os;
    os << "distribution residual " << residual << " exceeds stationarity tolerance " << tol;
    fail(ErrorKind::NotStationary, os.str());
  }
}

void require_schedule_covers(const AmplitudeSchedule& schedule, double t) {
  if (!schedule.covers(t)) {
    std::ostringstream os;
    os << "schedule support [0, " << schedule.horizon() << "] does not cover [0, " << t << "]";
    fail(ErrorKind::ScheduleDomain, os.str());
  }
}

// <f, Lg>_rho-style contraction sum_x rho(x) f(x) h(x).
double weighted(const Distribution& rho, const Vector& f, const Vector& h) {
  return rho.values().dot(f.cwiseProduct(h));
}

}  // namespace

ResponseTerms response_terms(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                             double a, double b, double s, double t) {
  require_times(s, t);
  const auto d = correlation_derivatives(g, mu, v, q, s, t);
  const Observable lq = apply_L(g, q);
  const Observable lv = apply_L(g, v);
  ResponseTerms terms;
  terms.b_ds = b * d.d_ds;
  terms.a_dt = a * d.d_dt;
  terms.b_VLQ = b * correlation(g, mu, v, lq, s, t);
  terms.b_LVQ = b * correlation(g, mu, lv, q, s, t);
  return terms;
}

double response_exact(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q, double a,
                      double b, double s, double t) {
  return response_terms(g, mu, v, q, a, b, s, t).total();
}

double response_exact_stationary(const Generator& g, const Distribution& rho, const Observable& v, const Observable& q,
                                 double a, double b, double lag, double stationarity_tol) {
  if (!(lag > 0.0) || !std::isfinite(lag)) fail(ErrorKind::InvalidArgument, "lag must be positive and finite");
  require_stationary(g, rho, stationarity_tol);
  const auto d = correlation_derivatives(g, rho, v, q, 0.0, lag);
  const Observable lv = apply_L(g, v);
  return a * d.d_ds - b * correlation(g, rho, lv, q, 0.0, lag);
}

ResponseGrid response_grid(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                           double a, double b, double t, std::vector<double> s_points, unsigned threads,
                           std::string initial_law) {
  for (std::size_t i = 0; i < s_points.size(); ++i) {
    if (!(s_points[i] > 0.0 && s_points[i] < t)) fail(ErrorKind::InvalidArgument, "grid points must lie in (0, t)");
    if (i > 0 && !(s_points[i] > s_points[i - 1])) fail(ErrorKind::InvalidArgument, "grid points must increase");
  }
  ResponseGrid grid;
  grid.t = t;
  grid.metadata = {a, b, std::move(initial_law)};
  grid.terms.resize(s_points.size());
  parallel_for(s_points.size(), threads,
               [&](std::size_t i) { grid.terms[i] = response_terms(g, mu, v, q, a, b, s_points[i], t); });
  grid.values.reserve(s_points.size());
  for (const auto& term : grid.terms) grid.values.push_back(term.total());
  grid.s_points = std::move(s_points);
  return grid;
}

double integrated_response(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                           double a, double b, const AmplitudeSchedule& schedule, double t, double abs_tol) {
  require_times(0.0, t);
  require_schedule_covers(schedule, t);
  if (t == 0.0 || schedule.is_identically_zero()) return 0.0;
  const auto knots = schedule.knots_in(0.0, t);
  auto integrand = [&](double s) { return schedule.value(s) * response_exact(g, mu, v, q, a, b, s, t); };
  return integrate_piecewise(integrand, 0.0, t, knots, abs_tol).value;
}

double response_fd_oracle(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                          double a, double b, const AmplitudeSchedule& schedule, double t, double h_scale,
                          const FdOptions& options) {
  require_times(0.0, t);
  require_schedule_covers(schedule, t);
  if (!(h_scale != 0.0) || !std::isfinite(h_scale)) fail(ErrorKind::InvalidArgument, "h_scale must be nonzero");
  if (v.size() != g.size() || q.size() != g.size() || mu.size() != g.size()) {
    fail(ErrorKind::DimensionMismatch, "observables and initial law must match the state space");
  }
  if (t == 0.0) return 0.0;
  const PerturbationKernel kernel(g, v, a, b);
  const auto n = Eigen::Index(g.size());

  // Stacked state [perturbed; unperturbed].
  auto velocity = [&](double s, const Vector& y) {
    Vector dy(2 * n);
    dy.head(n) = kernel.row_action(y.head(n), h_scale * schedule.value(std::min(s, t)));
    dy.tail(n) = row_action(g, y.tail(n));
    return dy;
  };
  auto rk4 = [&](double s, const Vector& y, double dt) {
    const Vector k1 = velocity(s, y);
    const Vector k2 = velocity(s + dt / 2, y + dt / 2 * k1);
    const Vector k3 = velocity(s + dt / 2, y + dt / 2 * k2);
    const Vector k4 = velocity(s + dt, y + dt * k3);
    return Vector(y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
  };

  Vector y(2 * n);
  y.head(n) = mu.values();
  y.tail(n) = mu.values();

  // Stop exactly at schedule knots so no step straddles a kink.
  std::vector<double> stops = schedule.knots_in(0.0, t);
  stops.push_back(t);
  double s = 0.0;
  double dt = std::min(t, 0.1 / std::max(g.max_escape(), 1e-300));
  const double min_step = options.min_step * t;
  for (double stop : stops) {
    while (s < stop) {
      const bool last = s + dt >= stop;
      const double step = last ? stop - s : dt;
      const Vector full = rk4(s, y, step);
      const Vector half = rk4(s + step / 2, rk4(s, y, step / 2), step / 2);
      const double err = (half - full).cwiseAbs().maxCoeff() / 15.0;
      if (err <= options.local_error_tol) {
        y = half + (half - full) / 15.0;
        s = last ? stop : s + step;
      }
      const double factor = err > 0.0 ? 0.9 * std::pow(options.local_error_tol / err, 0.2) : 4.0;
      dt = step * std::clamp(factor, 0.2, 4.0);
      if (dt < min_step) {
        std::ostringstream os;
        os << "step size " << dt << " fell below " << min_step << " at time " << s;
        fail(ErrorKind::StepSizeUnderflow, os.str());
      }
    }
  }
  const double perturbed = y.head(n).dot(q.values());
  const double baseline = y.tail(n).dot(q.values());
  return (perturbed - baseline) / h_scale;
}

double response_fd_pointwise(const Generator& g, const Distribution& mu, const Observable& v, const Observable& q,
                             double a, double b, double s, double t, double h_scale, double delta) {
  require_times(s, t);
  if (!(s > 0.0 && s < t)) fail(ErrorKind::InvalidArgument, "pointwise response needs 0 < s < t");
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  delta = std::min(delta, 0.25 * std::min(s, t - s));
  const auto unit = AmplitudeSchedule::constant(1.0);
  auto switched_on = [&](double sigma) {
    return response_fd_oracle(g, propagate(g, mu, sigma), v, q, a, b, unit, t - sigma, h_scale);
  };
  auto central = [&](double d) { return -(switched_on(s + d) - switched_on(s - d)) / (2 * d); };
  return (4.0 * central(delta) - central(2 * delta)) / 3.0;
}

FdConsistency response_fd_richardson(const Generator& g, const Distribution& mu, const Observable& v,
                                     const Observable& q, double a, double b, const AmplitudeSchedule& schedule,
                                     double t, double h_scale) {
  FdConsistency out;
  for (int i = 0; i < 3; ++i) {
    out.h[i] = h_scale * std::pow(10.0, -i);
    out.values[i] = response_fd_oracle(g, mu, v, q, a, b, schedule, t, out.h[i]);
  }
  // Successive differences of an O(h) quotient shrink by the step ratio.
  const double x[2] = {out.h[0], out.h[1]};
  const double d[2] = {out.values[0] - out.values[1], out.values[1] - out.values[2]};
  out.slope = loglog_slope(x, d);
  return out;
}

SusceptibilityPair chi_formula(const Generator& g, const Distribution& rho, const Observable& v, const Observable& m,
                               double a, double b, double stationarity_tol) {
  require_stationary(g, rho, stationarity_tol);
  const Vector lv = apply_L(g, v.values());
  const Vector lm = apply_L(g, m.values());
  const double m_lv = weighted(rho, m.values(), lv);
  const double v_lm = weighted(rho, v.values(), lm);
  SusceptibilityPair pair;
  pair.a = a;
  pair.b = b;
  pair.chi_MV = b * m_lv + a * v_lm;
  // Same expression with V <-> M and a <-> b.
  pair.chi_VM = a * v_lm + b * m_lv;
  return pair;
}

SusceptibilityPair chi_fd(const Generator& g, const Observable& v, const Observable& m, double a, double b,
                          double h_scale) {
  const Distribution rho = stationary_distribution(g);
  const Vector lv = apply_L(g, v.values());
  const Vector lm = apply_L(g, m.values());
  const Distribution rho_v = stationary_distribution(perturbed_generator(g, v, a, b, h_scale));
  const Distribution rho_m = stationary_distribution(perturbed_generator(g, m, b, a, h_scale));
  SusceptibilityPair pair;
  pair.a = a;
  pair.b = b;
  pair.chi_MV = (rho_v.values() - rho.values()).dot(lm) / h_scale;
  pair.chi_VM = (rho_m.values() - rho.values()).dot(lv) / h_scale;
  return pair;
}

double generator_identity_check(const Generator& g, const Observable& v, const Observable& m, double a, double b,
                                double h) {
  if (v.size() != g.size() || m.size() != g.size()) fail(ErrorKind::DimensionMismatch, "observable dimension");
  const auto& w = g.rates();
  const Vector& vv = v.values();
  const Vector& mm = m.values();
  const Vector l_mv = apply_L(g, Vector(mm.cwiseProduct(vv)));
  double worst = 0.0;
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    // (L^V_ab - L)M(x) and (L^M_ba - L)V(x) with expm1 for small h.
    double pert_m = 0.0;
    double pert_v = 0.0;
    for (RateMatrix::InnerIterator it(w, x); it; ++it) {
      const Eigen::Index y = it.col();
      pert_m += it.value() * std::expm1(h * (b * vv[y] - a * vv[x])) * (mm[y] - mm[x]);
      pert_v += it.value() * std::expm1(h * (a * mm[y] - b * mm[x])) * (vv[y] - vv[x]);
    }
    worst = std::max(worst, std::abs(pert_m - pert_v - h * (b - a) * l_mv[x]));
  }
  return worst;
}

}  // namespace neqresponse
