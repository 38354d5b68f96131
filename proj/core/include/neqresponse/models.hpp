#pragma once

// Stochastic Ising dynamics on a finite graph with optional spin exchange
// (a reaction-diffusion process on {-1,+1}^vertices).
//
// Configurations are indexed by the bit pattern with bit i set iff spin i is
// +1 (little-endian in vertex order); the label of a configuration lists the
// spins as '+'/'-' characters, vertex 0 first.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neqresponse/markov.hpp"

namespace neqresponse {

/// Largest vertex count for which the exact pipeline is available.
inline constexpr std::size_t kMaxSpins = 12;

struct SpinGraph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // unordered pairs, i < j

  static SpinGraph cycle(std::size_t n);
  static SpinGraph path(std::size_t n);
  static SpinGraph complete(std::size_t n);
  /// Parses "cycle:N", "path:N", "complete:N" or "file:PATH" (a JSON object
  /// {"vertices": N, "edges": [[i, j], ...]}).
  static SpinGraph parse(std::string_view descriptor);

  /// Throws InvalidArgument unless the graph is simple.
  void validate() const;
};

enum class PsiKind { one, heat_bath, table };

/// U(sigma) = -sum_{edges} J_e sigma_i sigma_j - sum_i field_i sigma_i, or
/// an explicit per-configuration table when `table` is set.
struct EnergySpec {
  std::vector<double> coupling;  // per edge; empty means all J = 0
  std::vector<double> field;     // per vertex; empty means no field
  std::optional<std::vector<double>> table;

  static EnergySpec uniform(const SpinGraph& graph, double j, double h = 0.0);
};

struct IsingSpec {
  SpinGraph graph;
  double beta = 1.0;
  EnergySpec energy;
  PsiKind psi = PsiKind::one;
  /// For PsiKind::table: psi(sigma, j) at index sigma * vertices + j; must
  /// not depend on sigma(j).
  std::vector<double> psi_table;
  double lambda = 0.0;  // exchange rate per edge
};

struct IsingModel {
  IsingSpec spec;
  Generator generator;
  Observable energy;
  Observable magnetization;
  std::vector<Observable> spins;   // sigma(i)
  std::vector<Observable> fluxes;  // J_i = -2 sigma(i) W(sigma, sigma^i)
  std::map<std::string, Observable> observables;  // all of the above by name
};

IsingModel build_ising_generator(const IsingSpec& spec);

/// max_sigma |L(magnetization) - sum_i J_i|.
double flux_identity_check(const IsingModel& model);

struct RediResult {
  double lhs = 0.0;         // finite-difference response of the magnetization, per unit h
  double rhs_a_term = 0.0;  // a sum <[s_t(i) - s_0(i)] s_t(j)>_rho
  double rhs_b_term = 0.0;  // -b sum int_0^t <J_i(s_0) s_s(j)>_rho ds
  std::string variant;      // "global" or "site:<i>"

  double rhs() const noexcept { return rhs_a_term + rhs_b_term; }
};

/// Stationary magnetization response to a constant field h switched on at 0.
/// With no `site`, the field couples to the total magnetization; with a site
/// it couples to sigma(site) only, and the drift term uses L sigma(site)
/// (which includes exchange contributions).
RediResult redi_experiment(const IsingModel& model, double a, double b, double h, double t,
                           std::optional<std::size_t> site = std::nullopt);

}  // namespace neqresponse
