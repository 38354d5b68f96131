#include "neqresponse/perturbation.hpp"

#include <cmath>
#include <sstream>

#include "neqresponse/error.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "perturbation";

void require_potential(const Generator& g, const Observable& v) {
  if (v.size() != g.size()) {
    throw Error(ErrorKind::DimensionMismatch, kModule, "potential dimension does not match the state space");
  }
}

double amplitude_at(const PerturbationSpec& spec, double s) {
  if (!spec.schedule.covers(s)) {
    std::ostringstream os;
    os << "time " << s << " outside schedule support [0, " << spec.schedule.horizon() << "]";
    throw Error(ErrorKind::ScheduleDomain, kModule, os.str());
  }
  return spec.schedule.value(s);
}

}  // namespace

Generator perturbed_generator(const Generator& g, const Observable& v, double a, double b, double h) {
  require_potential(g, v);
  if (h == 0.0) return g;
  return g.map_rates([&](std::size_t x, std::size_t y, double w) { return w * std::exp(h * (b * v[y] - a * v[x])); });
}

Generator perturbed_generator(const Generator& g, const PerturbationSpec& spec, double s) {
  return perturbed_generator(g, spec.potential, spec.a, spec.b, amplitude_at(spec, s));
}

LocalDetailedBalanceReport check_local_detailed_balance(const Generator& g, const PerturbationSpec& spec, double beta,
                                                        double s) {
  require_potential(g, spec.potential);
  const double h = amplitude_at(spec, s);
  const Generator perturbed = perturbed_generator(g, spec, s);
  const auto& v = spec.potential;
  LocalDetailedBalanceReport report;
  for (const auto& tr : g.transitions()) {
    const double reverse = g.rate(tr.to, tr.from);
    if (!(reverse > 0.0)) {
      throw Error(ErrorKind::MissingReverseEdge, kModule,
                  "transition " + g.space().label(tr.from) + " -> " + g.space().label(tr.to) +
                      " has no reverse; the rate ratio is undefined");
    }
    const double log_ratio_perturbed = std::log(perturbed.rate(tr.from, tr.to)) - std::log(perturbed.rate(tr.to, tr.from));
    const double log_ratio = std::log(tr.rate) - std::log(reverse);
    const double residual = std::abs(log_ratio_perturbed - log_ratio - beta * h * (v[tr.to] - v[tr.from]));
    if (residual > report.max_residual) {
      report.max_residual = residual;
      report.worst_edge = {tr.from, tr.to};
    }
  }
  return report;
}

PrefactorSplit symmetric_prefactor_split(const Generator& g, const PerturbationSpec& spec, double s) {
  require_potential(g, spec.potential);
  const double h = amplitude_at(spec, s);
  const auto& v = spec.potential;
  const double half_asym = h * (spec.b - spec.a) / 2.0;
  const double half_force = h * spec.beta() / 2.0;
  PrefactorSplit split{g.rates(), g.rates()};
  for (Eigen::Index x = 0; x < split.symmetric.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(split.symmetric, x); it; ++it) {
      const auto y = std::size_t(it.col());
      it.valueRef() = std::exp(half_asym * (v[y] + v[std::size_t(x)]));
    }
    for (RateMatrix::InnerIterator it(split.force, x); it; ++it) {
      const auto y = std::size_t(it.col());
      it.valueRef() = std::exp(half_force * (v[y] - v[std::size_t(x)]));
    }
  }
  return split;
}

PerturbationKernel::PerturbationKernel(const Generator& g, const Observable& v, double a, double b)
    : g_(g), coeff_(g.rates()) {
  require_potential(g, v);
  for (Eigen::Index x = 0; x < coeff_.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(coeff_, x); it; ++it) {
      it.valueRef() = b * v[std::size_t(it.col())] - a * v[std::size_t(x)];
    }
  }
}

RateMatrix PerturbationKernel::rates(double h) const {
  RateMatrix out = g_.rates();
  const double* c = coeff_.valuePtr();
  double* w = out.valuePtr();
  for (Eigen::Index k = 0; k < out.nonZeros(); ++k) w[k] *= std::exp(h * c[k]);
  return out;
}

Vector PerturbationKernel::row_action(const Vector& mu, double h) const {
  const RateMatrix w = rates(h);
  Vector escape = Vector::Zero(mu.size());
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    for (RateMatrix::InnerIterator it(w, x); it; ++it) escape[x] += it.value();
  }
  Vector out = w.transpose() * mu;
  out -= escape.cwiseProduct(mu);
  return out;
}

double PerturbationKernel::escape_bound(double h_max) const {
  double bound = 0.0;
  const auto& w = g_.rates();
  for (Eigen::Index x = 0; x < w.outerSize(); ++x) {
    double row = 0.0;
    RateMatrix::InnerIterator ic(coeff_, x);
    for (RateMatrix::InnerIterator it(w, x); it; ++it, ++ic) row += it.value() * std::exp(h_max * std::abs(ic.value()));
    bound = std::max(bound, row);
  }
  return bound;
}

}  // namespace neqresponse
