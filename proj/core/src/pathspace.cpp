#include "neqresponse/pathspace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "neqresponse/error.hpp"
#include "neqresponse/parallel.hpp"
#include "neqresponse/quadrature.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "pathspace";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

void require_horizon(double horizon) {
  if (!std::isfinite(horizon)) fail(ErrorKind::NonFiniteTime, "horizon must be finite");
  if (!(horizon > 0.0)) fail(ErrorKind::InvalidArgument, "horizon must be positive");
}

void require_state(const Generator& g, std::size_t x) {
  if (x >= g.size()) fail(ErrorKind::InvalidArgument, "initial state outside the state space");
}

// Picks y with probability weight(y) / total along row x of `w`.
std::size_t pick_target(const RateMatrix& w, std::size_t x, double total, Engine& engine) {
  const double target = uniform_open(engine) * total;
  double acc = 0.0;
  Eigen::Index last = -1;
  for (RateMatrix::InnerIterator it(w, Eigen::Index(x)); it; ++it) {
    acc += it.value();
    last = it.col();
    if (target < acc) return std::size_t(it.col());
  }
  return std::size_t(last);  // round-off at the top of the row
}

// sum_y W(x,y) [exp(h c(x,y)) - 1] for one row.
double escape_excess(const RateMatrix& w, const RateMatrix& coeff, std::size_t x, double h) {
  double total = 0.0;
  RateMatrix::InnerIterator ic(coeff, Eigen::Index(x));
  for (RateMatrix::InnerIterator it(w, Eigen::Index(x)); it; ++it, ++ic) total += it.value() * std::expm1(h * ic.value());
  return total;
}

}  // namespace

Trajectory::Trajectory(std::size_t x0, double horizon, std::vector<Jump> jumps)
    : x0_(x0), horizon_(horizon), jumps_(std::move(jumps)) {
  require_horizon(horizon_);
  std::size_t state = x0_;
  double last = 0.0;
  for (const auto& jump : jumps_) {
    if (!(jump.time > last) || jump.time > horizon_) fail(ErrorKind::InvalidArgument, "jump times must increase in (0, T]");
    if (jump.state == state) fail(ErrorKind::InvalidArgument, "a jump must change the state");
    state = jump.state;
    last = jump.time;
  }
}

std::size_t Trajectory::state_at(double t) const {
  std::size_t state = x0_;
  for (const auto& jump : jumps_) {
    if (jump.time > t) break;
    state = jump.state;
  }
  return state;
}

std::size_t sample_state(const Distribution& mu, Engine& engine) {
  const double target = uniform_open(engine);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] <= 0.0) continue;
    acc += mu[x];
    last = x;
    if (target < acc) return x;
  }
  return last;
}

Trajectory sample_path(const Generator& g, std::size_t x0, double horizon, Engine& engine) {
  require_horizon(horizon);
  require_state(g, x0);
  std::vector<Jump> jumps;
  std::size_t x = x0;
  double t = 0.0;
  for (;;) {
    const double escape = g.escape()[Eigen::Index(x)];
    t += exponential(engine, escape);
    if (t > horizon) break;
    x = pick_target(g.rates(), x, escape, engine);
    jumps.push_back({t, x});
  }
  return Trajectory(x0, horizon, std::move(jumps));
}

Trajectory sample_path(const Generator& g, std::size_t x0, double horizon, const RngStream& rng) {
  Engine engine = rng.engine();
  return sample_path(g, x0, horizon, engine);
}

Trajectory sample_path_inhomogeneous(const Generator& g, const PerturbationSpec& spec, std::size_t x0,
                                     double horizon, Engine& engine, ThinningStats* stats) {
  require_horizon(horizon);
  require_state(g, x0);
  if (!spec.schedule.covers(horizon)) fail(ErrorKind::ScheduleDomain, "schedule does not cover the horizon");
  const double h_max = spec.schedule.sup_abs(0.0, horizon);
  if (!std::isfinite(h_max)) fail(ErrorKind::UnboundedSchedule, "schedule amplitude is unbounded on the horizon");
  const PerturbationKernel kernel(g, spec.potential, spec.a, spec.b);
  const double bound = kernel.escape_bound(h_max);
  if (!std::isfinite(bound)) fail(ErrorKind::UnboundedSchedule, "perturbed escape rates are unbounded");

  const RateMatrix& w = g.rates();
  const RateMatrix& coeff = kernel.coefficients();
  std::vector<double> row_rates;
  std::vector<Jump> jumps;
  std::size_t proposals = 0;
  std::size_t x = x0;
  double t = 0.0;
  for (;;) {
    t += exponential(engine, bound);
    if (t > horizon) break;
    ++proposals;
    const double h = spec.schedule.value(t);
    row_rates.clear();
    double escape = 0.0;
    RateMatrix::InnerIterator ic(coeff, Eigen::Index(x));
    for (RateMatrix::InnerIterator it(w, Eigen::Index(x)); it; ++it, ++ic) {
      row_rates.push_back(it.value() * std::exp(h * ic.value()));
      escape += row_rates.back();
    }
    const double u = uniform_open(engine) * bound;
    if (u >= escape) continue;
    // u is uniform on [0, escape) given acceptance; reuse it to pick the target.
    double acc = 0.0;
    std::size_t k = 0;
    RateMatrix::InnerIterator it(w, Eigen::Index(x));
    std::size_t next = std::size_t(it.col());
    for (; it; ++it, ++k) {
      acc += row_rates[k];
      next = std::size_t(it.col());
      if (u < acc) break;
    }
    x = next;
    jumps.push_back({t, x});
  }
  if (stats) {
    stats->dominating_rate = bound;
    stats->proposals += proposals;
    stats->accepted += jumps.size();
  }
  return Trajectory(x0, horizon, std::move(jumps));
}

Trajectory sample_path_inhomogeneous(const Generator& g, const PerturbationSpec& spec, std::size_t x0,
                                     double horizon, const RngStream& rng, ThinningStats* stats) {
  Engine engine = rng.engine();
  return sample_path_inhomogeneous(g, spec, x0, horizon, engine, stats);
}

double girsanov_log_density(const Trajectory& path, const Generator& g, const PerturbationSpec& spec) {
  const double horizon = path.horizon();
  if (!spec.schedule.covers(horizon)) fail(ErrorKind::ScheduleDomain, "schedule does not cover the horizon");
  if (spec.schedule.is_identically_zero()) return 0.0;
  const auto& v = spec.potential;
  double jump_part = 0.0;
  path.for_each_jump([&](double s, std::size_t before, std::size_t after) {
    jump_part += spec.schedule.value(s) * (spec.b * v[after] - spec.a * v[before]);
  });

  const PerturbationKernel kernel(g, v, spec.a, spec.b);
  const RateMatrix& w = g.rates();
  const RateMatrix& coeff = kernel.coefficients();
  const bool constant = spec.schedule.kind() == AmplitudeSchedule::Kind::constant;
  const double h_const = constant ? spec.schedule.value(0.0) : 0.0;
  const auto n_segments = double(path.jumps().size() + 1);
  double time_part = 0.0;
  path.for_each_segment([&](std::size_t x, double t0, double t1) {
    if (constant) {
      time_part += (t1 - t0) * escape_excess(w, coeff, x, h_const);
      return;
    }
    const auto knots = spec.schedule.knots_in(t0, t1);
    auto integrand = [&](double s) { return escape_excess(w, coeff, x, spec.schedule.value(s)); };
    time_part += integrate_piecewise(integrand, t0, t1, knots, 1e-10 / n_segments).value;
  });
  return jump_part - time_part;
}

double girsanov_log_density_linear(const Trajectory& path, const Generator& g, const PerturbationSpec& spec) {
  const double horizon = path.horizon();
  if (!spec.schedule.covers(horizon)) fail(ErrorKind::ScheduleDomain, "schedule does not cover the horizon");
  if (spec.schedule.is_identically_zero()) return 0.0;
  const auto& v = spec.potential;
  const double a = spec.a;
  const double b = spec.b;
  const Vector lv = apply_L(g, v.values());
  double sum_after = 0.0;
  double sum_increment = 0.0;
  path.for_each_jump([&](double s, std::size_t before, std::size_t after) {
    const double h = spec.schedule.value(s);
    sum_after += h * v[after];
    sum_increment += h * (v[after] - v[before]);
  });
  double int_lv = 0.0;
  double int_escape_v = 0.0;
  path.for_each_segment([&](std::size_t x, double t0, double t1) {
    const double h_int = spec.schedule.integral(t0, t1);
    int_lv += h_int * lv[Eigen::Index(x)];
    int_escape_v += h_int * g.escape()[Eigen::Index(x)] * v[x];
  });
  return (b - a) * sum_after + a * sum_increment - b * int_lv - (b - a) * int_escape_v;
}

MeanEstimate mc_mean(std::size_t n, std::uint64_t seed, unsigned threads,
                     const std::function<double(const RngStream&)>& f) {
  std::vector<double> samples(n);
  parallel_for(n, threads, [&](std::size_t i) { samples[i] = f(RngStream{seed, i}); });
  return mean_and_error(samples);
}

MeanEstimate girsanov_normalization(const Generator& g, const Distribution& mu, const PerturbationSpec& spec,
                                    double horizon, std::size_t n_samples, std::uint64_t seed, unsigned threads) {
  return mc_mean(n_samples, seed, threads, [&](const RngStream& rng) {
    Engine engine = rng.engine();
    const std::size_t x0 = sample_state(mu, engine);
    const Trajectory path = sample_path(g, x0, horizon, engine);
    return std::exp(girsanov_log_density(path, g, spec));
  });
}

McResponse mc_response(const Generator& g, const Distribution& mu, const PerturbationSpec& spec, const Observable& q,
                       double horizon, std::size_t n_samples, std::uint64_t seed, unsigned threads) {
  if (n_samples < 100) fail(ErrorKind::InvalidArgument, "mc_response needs at least 100 samples");
  if (q.size() != g.size()) fail(ErrorKind::DimensionMismatch, "observable dimension");
  std::vector<double> weight(n_samples);
  std::vector<double> value(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    Engine engine = RngStream{seed, i}.engine();
    const std::size_t x0 = sample_state(mu, engine);
    const Trajectory path = sample_path(g, x0, horizon, engine);
    weight[i] = girsanov_log_density_linear(path, g, spec);
    value[i] = q[path.final_state()];
  });
  const double q_mean = mean_and_error(value).mean;
  std::vector<double> product(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) product[i] = weight[i] * (value[i] - q_mean);
  const MeanEstimate est = mean_and_error(product);
  return {est.mean, est.std_error, n_samples};
}

JumpMeasureCheck jump_measure_identity_check(const Generator& g, const Distribution& mu, const PerturbationSpec& spec,
                                             const Observable& q, double horizon, std::size_t n_samples,
                                             std::uint64_t seed, unsigned threads) {
  require_horizon(horizon);
  if (!spec.schedule.covers(horizon)) fail(ErrorKind::ScheduleDomain, "schedule does not cover the horizon");
  const auto& v = spec.potential;
  const MeanEstimate mc = mc_mean(n_samples, seed, threads, [&](const RngStream& rng) {
    Engine engine = rng.engine();
    const std::size_t x0 = sample_state(mu, engine);
    const Trajectory path = sample_path(g, x0, horizon, engine);
    double sum = 0.0;
    path.for_each_jump([&](double s, std::size_t, std::size_t after) { sum += spec.schedule.value(s) * v[after]; });
    return sum * q[path.final_state()];
  });
  auto integrand = [&](double s) {
    const Vector mu_s = uniformized_exp(g, mu.values(), s, true);
    const Vector inflow = g.rates().transpose() * mu_s;
    const Vector q_evolved = uniformized_exp(g, q.values(), horizon - s, false);
    return spec.schedule.value(s) * inflow.dot(v.values().cwiseProduct(q_evolved));
  };
  JumpMeasureCheck out;
  out.lhs = mc.mean;
  out.std_error = mc.std_error;
  out.rhs = spec.schedule.is_identically_zero()
                ? 0.0
                : integrate_piecewise(integrand, 0.0, horizon, spec.schedule.knots_in(0.0, horizon), 1e-10).value;
  return out;
}

Distribution occupation_measure(const Trajectory& path, std::size_t n_states) {
  Vector occupation = Vector::Zero(Eigen::Index(n_states));
  path.for_each_segment([&](std::size_t x, double t0, double t1) {
    if (x >= n_states) fail(ErrorKind::InvalidArgument, "trajectory visits a state outside the space");
    occupation[Eigen::Index(x)] += t1 - t0;
  });
  return Distribution(occupation / occupation.sum());
}

void write_trajectory_csv(const Trajectory& path, const StateSpace& space, const std::filesystem::path& file,
                          bool gzip) {
  std::ostringstream os;
  os.precision(17);
  os << "time,state\n" << 0.0 << ',' << space.label(path.initial_state()) << '\n';
  for (const auto& jump : path.jumps()) os << jump.time << ',' << space.label(jump.state) << '\n';
  const std::string text = os.str();
  if (gzip) {
    gzFile out = gzopen(file.string().c_str(), "wb");
    if (!out) fail(ErrorKind::IoError, "cannot open " + file.string());
    const int written = gzwrite(out, text.data(), unsigned(text.size()));
    gzclose(out);
    if (written != int(text.size())) fail(ErrorKind::IoError, "short write to " + file.string());
    return;
  }
  std::ofstream out(file);
  if (!out) fail(ErrorKind::IoError, "cannot open " + file.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + file.string());
}

}  // namespace neqresponse
