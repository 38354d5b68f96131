#include "neqresponse/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "neqresponse/error.hpp"
#include "neqresponse/quadrature.hpp"
#include "neqresponse/response.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "models";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

int spin(std::size_t config, std::size_t i) { return (config >> i) & 1u ? 1 : -1; }

std::string config_label(std::size_t config, std::size_t n) {
  std::string label(n, '-');
  for (std::size_t i = 0; i < n; ++i) {
    if (spin(config, i) > 0) label[i] = '+';
  }
  return label;
}

std::size_t parse_count(std::string_view text, std::string_view descriptor) {
  try {
    std::size_t used = 0;
    const long value = std::stol(std::string(text), &used);
    if (used != text.size() || value <= 0) throw std::invalid_argument("count");
    return std::size_t(value);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "bad vertex count in graph descriptor '" + std::string(descriptor) + "'");
  }
}

}  // namespace

SpinGraph SpinGraph::cycle(std::size_t n) {
  if (n < 3) fail(ErrorKind::InvalidArgument, "a cycle needs at least 3 vertices");
  SpinGraph g{n, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    g.edges.emplace_back(std::min(i, j), std::max(i, j));
  }
  return g;
}

SpinGraph SpinGraph::path(std::size_t n) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "a path needs at least one vertex");
  SpinGraph g{n, {}};
  for (std::size_t i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

SpinGraph SpinGraph::complete(std::size_t n) {
  SpinGraph g{n, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  }
  return g;
}

SpinGraph SpinGraph::parse(std::string_view descriptor) {
  const auto colon = descriptor.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorKind::InvalidArgument, "graph descriptor '" + std::string(descriptor) + "' lacks a ':'");
  }
  const auto kind = descriptor.substr(0, colon);
  const auto arg = descriptor.substr(colon + 1);
  if (kind == "cycle") return cycle(parse_count(arg, descriptor));
  if (kind == "path") return path(parse_count(arg, descriptor));
  if (kind == "complete") return complete(parse_count(arg, descriptor));
  if (kind == "file") {
    std::ifstream in{std::string(arg)};
    if (!in) throw Error(ErrorKind::FileNotFound, kModule, "cannot open graph file '" + std::string(arg) + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
      SpinGraph g;
      g.vertices = doc.at("vertices").get<std::size_t>();
      for (const auto& e : doc.at("edges")) {
        const auto i = e.at(0).get<std::size_t>();
        const auto j = e.at(1).get<std::size_t>();
        g.edges.emplace_back(std::min(i, j), std::max(i, j));
      }
      g.validate();
      return g;
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::ParseError, kModule, "graph file '" + std::string(arg) + "': " + ex.what());
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown graph kind '" + std::string(kind) + "'");
}

void SpinGraph::validate() const {
  if (vertices < 1) fail(ErrorKind::InvalidArgument, "graph has no vertices");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [i, j] : edges) {
    if (i >= vertices || j >= vertices) fail(ErrorKind::InvalidArgument, "edge references a missing vertex");
    if (i == j) fail(ErrorKind::InvalidArgument, "self-loop at vertex " + std::to_string(i));
    if (!seen.emplace(std::min(i, j), std::max(i, j)).second) {
      fail(ErrorKind::InvalidArgument, "duplicate edge " + std::to_string(i) + "~" + std::to_string(j));
    }
  }
}

EnergySpec EnergySpec::uniform(const SpinGraph& graph, double j, double h) {
  EnergySpec e;
  e.coupling.assign(graph.edges.size(), j);
  e.field.assign(graph.vertices, h);
  return e;
}

IsingModel build_ising_generator(const IsingSpec& spec) {
  const SpinGraph& graph = spec.graph;
  graph.validate();
  const std::size_t n = graph.vertices;
  if (n > kMaxSpins) {
    fail(ErrorKind::ModelTooLarge, std::to_string(n) + " spins give more than " + std::to_string(kMaxExactStates) +
                                       " configurations; use path-space sampling instead");
  }
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
  if (!std::isfinite(spec.beta)) fail(ErrorKind::InvalidArgument, "beta must be finite");
  const std::size_t configs = std::size_t(1) << n;

  // Energy per configuration.
  Vector energy(static_cast<Eigen::Index>(configs));
  if (spec.energy.table) {
    if (spec.energy.table->size() != configs) fail(ErrorKind::InvalidArgument, "energy table has the wrong size");
    for (std::size_t c = 0; c < configs; ++c) energy[Eigen::Index(c)] = (*spec.energy.table)[c];
  } else {
    const auto& coupling = spec.energy.coupling;
    const auto& field = spec.energy.field;
    if (!coupling.empty() && coupling.size() != graph.edges.size()) {
      fail(ErrorKind::InvalidArgument, "one coupling per edge expected");
    }
    if (!field.empty() && field.size() != n) fail(ErrorKind::InvalidArgument, "one field value per vertex expected");
    for (std::size_t c = 0; c < configs; ++c) {
      double u = 0.0;
      for (std::size_t e = 0; e < coupling.size(); ++e) {
        u -= coupling[e] * spin(c, graph.edges[e].first) * spin(c, graph.edges[e].second);
      }
      for (std::size_t i = 0; i < field.size(); ++i) u -= field[i] * spin(c, i);
      energy[Eigen::Index(c)] = u;
    }
  }

  auto psi = [&](std::size_t c, std::size_t j) -> double {
    switch (spec.psi) {
      case PsiKind::one: return 1.0;
      case PsiKind::heat_bath: {
        const double du = energy[Eigen::Index(c ^ (std::size_t(1) << j))] - energy[Eigen::Index(c)];
        return 1.0 / (2.0 * std::cosh(spec.beta * du / 2.0));
      }
      case PsiKind::table: return spec.psi_table[c * n + j];
    }
    return 1.0;
  };
  if (spec.psi == PsiKind::table) {
    if (spec.psi_table.size() != configs * n) fail(ErrorKind::InvalidArgument, "psi table has the wrong size");
    for (std::size_t c = 0; c < configs; ++c) {
      for (std::size_t j = 0; j < n; ++j) {
        const double value = psi(c, j);
        const double flipped = psi(c ^ (std::size_t(1) << j), j);
        if (!(value > 0.0) || !std::isfinite(value)) {
          fail(ErrorKind::InvalidArgument, "psi table entries must be positive and finite");
        }
        if (value != flipped) {
          fail(ErrorKind::AsymmetricPsi, "psi(" + config_label(c, n) + ", " + std::to_string(j) +
                                             ") depends on the flipped spin");
        }
      }
    }
  }

  std::vector<Transition> transitions;
  for (std::size_t c = 0; c < configs; ++c) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t flipped = c ^ (std::size_t(1) << j);
      const double du = energy[Eigen::Index(flipped)] - energy[Eigen::Index(c)];
      transitions.push_back({c, flipped, psi(c, j) * std::exp(-spec.beta * du / 2.0)});
    }
    if (spec.lambda > 0.0) {
      for (auto [i, j] : graph.edges) {
        if (spin(c, i) == spin(c, j)) continue;  // exchange is the identity
        const std::size_t swapped = c ^ (std::size_t(1) << i) ^ (std::size_t(1) << j);
        transitions.push_back({c, swapped, spec.lambda});
      }
    }
  }
  std::vector<std::string> labels(configs);
  for (std::size_t c = 0; c < configs; ++c) labels[c] = config_label(c, n);

  IsingModel model{spec,
                   Generator::build(StateSpace(std::move(labels)), transitions),
                   Observable(energy),
                   Observable::constant(configs, 0.0),
                   {},
                   {},
                   {}};
  Vector magnetization = Vector::Zero(Eigen::Index(configs));
  for (std::size_t i = 0; i < n; ++i) {
    Vector s(static_cast<Eigen::Index>(configs)), flux(static_cast<Eigen::Index>(configs));
    for (std::size_t c = 0; c < configs; ++c) {
      s[Eigen::Index(c)] = spin(c, i);
      flux[Eigen::Index(c)] = -2.0 * spin(c, i) * model.generator.rate(c, c ^ (std::size_t(1) << i));
    }
    magnetization += s;
    model.spins.emplace_back(s);
    model.fluxes.emplace_back(flux);
    model.observables.emplace("spin_" + std::to_string(i), model.spins.back());
    model.observables.emplace("flux_" + std::to_string(i), model.fluxes.back());
  }
  model.magnetization = Observable(magnetization);
  model.observables.emplace("magnetization", model.magnetization);
  model.observables.emplace("energy", model.energy);
  return model;
}

double flux_identity_check(const IsingModel& model) {
  const Vector lv = apply_L(model.generator, model.magnetization.values());
  Vector total = Vector::Zero(lv.size());
  for (const auto& flux : model.fluxes) total += flux.values();
  return (lv - total).cwiseAbs().maxCoeff();
}

RediResult redi_experiment(const IsingModel& model, double a, double b, double h, double t,
                           std::optional<std::size_t> site) {
  const Generator& g = model.generator;
  const Distribution rho = stationary_distribution(g);
  const Observable& q = model.magnetization;
  RediResult result;
  Observable v = q;
  Observable drift = q;
  if (site) {
    if (*site >= model.spins.size()) fail(ErrorKind::InvalidArgument, "site index out of range");
    v = model.spins[*site];
    drift = apply_L(g, v);
    result.variant = "site:" + std::to_string(*site);
  } else {
    Vector total = Vector::Zero(Eigen::Index(g.size()));
    for (const auto& flux : model.fluxes) total += flux.values();
    drift = Observable(total);
    result.variant = "global";
  }
  result.lhs = response_fd_oracle(g, rho, v, q, a, b, AmplitudeSchedule::constant(1.0), t, h);
  result.rhs_a_term = a * (correlation(g, rho, v, q, t, t) - correlation(g, rho, v, q, 0.0, t));
  auto integrand = [&](double s) { return correlation(g, rho, drift, q, 0.0, s); };
  result.rhs_b_term = -b * integrate(integrand, 0.0, t, 1e-10).value;
  return result;
}

}  // namespace neqresponse
