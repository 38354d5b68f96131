#include <doctest.h>

#include "neqresponse/error.hpp"
#include "neqresponse/perturbation.hpp"
#include "neqresponse/response.hpp"
#include "support.hpp"

using namespace neqresponse;
using namespace testing_support;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

// First-order perturbation theory on dense matrices: the kernel is the rate
// derivative dW(x,y) = W(x,y) (b V(y) - a V(x)) acting between mu_s and
// e^{(t-s)L} Q.
double duhamel_kernel(const Generator& g, const Vector& mu, const Vector& v, const Vector& q, double a, double b,
                      double s, double t) {
  const Vector mu_s = (mu.transpose() * expm_L(g, s)).transpose();
  const Vector evolved = expm_L(g, t - s) * q;
  double total = 0.0;
  for (const auto& tr : g.transitions()) {
    const auto x = Eigen::Index(tr.from), y = Eigen::Index(tr.to);
    total += mu_s[x] * tr.rate * (b * v[y] - a * v[x]) * (evolved[y] - evolved[x]);
  }
  return total;
}

// d/ds <V(x_s) Q(x_t)> for the equilibrium check, from dense exponentials.
double dense_ds(const Generator& g, const Vector& mu, const Vector& v, const Vector& q, double s, double t) {
  const Matrix l = dense_L(g);
  const Vector mu_s = (mu.transpose() * expm_L(g, s)).transpose();
  const Vector evolved = expm_L(g, t - s) * q;
  const Vector mu_dot = (mu_s.transpose() * l).transpose();
  return mu_dot.dot(v.cwiseProduct(evolved)) - mu_s.dot(v.cwiseProduct(l * evolved));
}

}  // namespace

TEST_SUITE("response") {
  TEST_CASE("response_exact matches first-order perturbation theory") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
      const Generator g = random_sparse_generator(6, rng, 0.5);
      const Distribution mu = random_distribution(6, rng);
      const Observable v = random_observable(6, rng), q = random_observable(6, rng);
      const double a = uniform(rng, -1, 1), b = uniform(rng, -1, 1);
      const double s = uniform(rng, 0.05, 1.0), t = s + uniform(rng, 0.05, 1.5);
      const double oracle = duhamel_kernel(g, mu.values(), v.values(), q.values(), a, b, s, t);
      CHECK(std::abs(response_exact(g, mu, v, q, a, b, s, t) - oracle) <= 1e-10 * std::max(1.0, std::abs(oracle)));
    }
  }

  TEST_CASE("equilibrium recovery for any split") {
    std::mt19937_64 rng(42);
    const double beta = 1.4;
    const auto inst = random_reversible(6, rng, beta);
    const Distribution rho = stationary_distribution(inst.g);
    const Observable v = random_observable(6, rng), q = random_observable(6, rng);
    for (int split = 0; split < 3; ++split) {
      const double a = uniform(rng, -0.5, 2.0);
      for (auto [s, t] : {std::pair{0.2, 0.9}, std::pair{1.0, 1.3}}) {
        const double fdt = beta * dense_ds(inst.g, rho.values(), v.values(), q.values(), s, t);
        CHECK(std::abs(response_exact(inst.g, rho, v, q, a, beta - a, s, t) - fdt) <= 1e-10);
      }
    }
  }

  TEST_CASE("constant potential") {
    std::mt19937_64 rng(43);
    const Generator g = random_generator(5, rng);
    const Distribution mu = random_distribution(5, rng);
    const Distribution rho = stationary_distribution(g);
    const Observable c = Observable::constant(5, 0.7), q = random_observable(5, rng);
    CHECK(std::abs(response_exact(g, mu, c, q, 0.6, 0.6, 0.3, 1.0)) < 1e-13);
    CHECK(std::abs(response_exact(g, rho, c, q, 0.2, 0.9, 0.3, 1.0)) < 1e-13);
    // With a != b and a nonstationary start a constant potential rescales time.
    const double expected = (0.9 - 0.2) * 0.7 * correlation_derivatives(g, mu, Observable::constant(5, 1.0), q, 0.3, 1.0).d_dt;
    CHECK(std::abs(response_exact(g, mu, c, q, 0.2, 0.9, 0.3, 1.0) - expected) < 1e-13);
    CHECK(std::abs(response_fd_oracle(g, mu, c, q, 0.6, 0.6, AmplitudeSchedule::constant(1.0), 1.0)) < 1e-9);
  }

  TEST_CASE("biased ring kernel against the finite-difference oracle") {
    const Generator g = biased_ring(3, 2.0, 1.0);
    const Distribution rho = stationary_distribution(g);
    const Observable ind = Observable::indicator(3, 0);
    const double a = 0.5, b = 0.5, s = 0.4, t = 1.0;
    // Switching a unit field on at time sigma: H(sigma) = int_sigma^t R(t,u) du,
    // so R(t,s) = -dH/dsigma.
    auto switched_on = [&](double sigma) {
      return response_fd_oracle(g, propagate(g, rho, sigma), ind, ind, a, b, AmplitudeSchedule::constant(1.0),
                                t - sigma, 1e-6);
    };
    auto central = [&](double delta) { return -(switched_on(s + delta) - switched_on(s - delta)) / (2 * delta); };
    const double fd = (4.0 * central(1e-2) - central(2e-2)) / 3.0;  // removes the delta^2 term
    const double exact = response_exact(g, rho, ind, ind, a, b, s, t);
    CHECK(relative_error(exact, fd) <= 1e-4);
    CHECK(relative_error(response_fd_pointwise(g, rho, ind, ind, a, b, s, t), exact) <= 1e-4);
  }

  TEST_CASE("stationary form") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 5; ++trial) {
      const Generator g = random_generator(5, rng);
      const Distribution rho = stationary_distribution(g);
      const Observable v = random_observable(5, rng), q = random_observable(5, rng);
      const double a = uniform(rng, -1, 1), b = uniform(rng, -1, 1);
      const double s = uniform(rng, 0.0, 2.0), lag = uniform(rng, 0.05, 1.5);
      CHECK(std::abs(response_exact_stationary(g, rho, v, q, a, b, lag) - response_exact(g, rho, v, q, a, b, s, s + lag)) <=
            1e-11);
      // Time-translation invariance under mu = rho.
      const double shift = uniform(rng, 0.0, 3.0);
      CHECK(std::abs(response_exact(g, rho, v, q, a, b, s, s + lag) -
                     response_exact(g, rho, v, q, a, b, s + shift, s + lag + shift)) <= 1e-11);
      // b = 0.
      const double beta = 1.1;
      const double dt = correlation_derivatives(g, rho, v, q, s, s + lag).d_dt;
      CHECK(std::abs(response_exact_stationary(g, rho, v, q, beta, 0.0, lag) + beta * dt) <= 1e-11);
    }
    const auto inst = random_reversible(5, rng, 0.8);
    const Distribution rho = stationary_distribution(inst.g);
    const Observable v = random_observable(5, rng), q = random_observable(5, rng);
    const double fdt = 0.8 * dense_ds(inst.g, rho.values(), v.values(), q.values(), 0.0, 0.6);
    CHECK(std::abs(response_exact_stationary(inst.g, rho, v, q, 0.3, 0.5, 0.6) - fdt) <= 1e-11);

    const Distribution off = Distribution::uniform(5);
    CHECK(kind_of([&] { response_exact_stationary(inst.g, off, v, q, 0.3, 0.5, 0.6); }) == ErrorKind::NotStationary);
    CHECK(kind_of([&] { response_exact(inst.g, rho, v, q, 0.3, 0.5, 1.0, 0.5); }) == ErrorKind::TimeOrder);
  }

  TEST_CASE("integrated response") {
    std::mt19937_64 rng(45);
    const double beta = 0.9, h = 0.3, t = 1.4;
    const auto inst = random_reversible(5, rng, beta);
    const Distribution rho = stationary_distribution(inst.g);
    const Observable v = random_observable(5, rng);
    // Change of the Boltzmann factor: h beta [<V V> - <V(0) V(t)>].
    const Vector vv = v.values();
    const double closed = h * beta *
                          (rho.values().dot(vv.cwiseProduct(vv)) -
                           correlation_dense(inst.g, rho.values(), vv, vv, 0.0, t));
    const double integrated = integrated_response(inst.g, rho, v, v, 0.4, beta - 0.4, AmplitudeSchedule::constant(h), t);
    CHECK(std::abs(integrated - closed) <= 1e-8);
    CHECK(integrated_response(inst.g, rho, v, v, 0.4, 0.5, AmplitudeSchedule::constant(0.0), t) == 0.0);

    // Equilibrium anchor for the finite-difference oracle.
    const double fd_eq = response_fd_oracle(inst.g, rho, v, v, 0.4, beta - 0.4, AmplitudeSchedule::constant(1.0), t);
    CHECK(relative_error(fd_eq, closed / h) <= 1e-3);

    const Generator ring = biased_ring(3, 2.0, 1.0);
    const Distribution rho_ring = stationary_distribution(ring);
    const Observable ind = Observable::indicator(3, 0);
    const auto unit = AmplitudeSchedule::constant(1.0);
    const double exact = integrated_response(ring, rho_ring, ind, ind, 0.3, 0.7, unit, 1.0);
    const double fd = response_fd_oracle(ring, rho_ring, ind, ind, 0.3, 0.7, unit, 1.0, 1e-5);
    CHECK(relative_error(fd, exact) <= 1e-3);
  }

  TEST_CASE("integrated response with a grid schedule from a nonstationary start") {
    std::mt19937_64 rng(46);
    const Generator g = random_generator(4, rng);
    const Distribution mu = random_distribution(4, rng);
    const Observable v = random_observable(4, rng), q = random_observable(4, rng);
    const auto sched = AmplitudeSchedule::grid({0.0, 0.4, 0.9, 1.5}, {0.2, 1.0, -0.3, 0.5});
    const double exact = integrated_response(g, mu, v, q, 0.25, 0.75, sched, 1.5);
    const double fd = response_fd_oracle(g, mu, v, q, 0.25, 0.75, sched, 1.5, 1e-5);
    CHECK(relative_error(fd, exact) <= 1e-3);
    CHECK(kind_of([&] { integrated_response(g, mu, v, q, 0.25, 0.75, sched, 2.0); }) == ErrorKind::ScheduleDomain);
  }

  TEST_CASE("finite-difference oracle consistency") {
    std::mt19937_64 rng(47);
    const Generator g = random_generator(4, rng);
    const Distribution mu = random_distribution(4, rng);
    const Observable v = random_observable(4, rng), q = random_observable(4, rng);
    const auto unit = AmplitudeSchedule::constant(1.0);
    const auto rich = response_fd_richardson(g, mu, v, q, 0.5, 0.5, unit, 1.0, 1e-2);
    CHECK(std::abs(rich.slope - 1.0) <= 0.15);

    FdOptions impossible;
    impossible.local_error_tol = 1e-30;
    CHECK(kind_of([&] { response_fd_oracle(g, mu, v, q, 0.5, 0.5, unit, 1.0, 1e-5, impossible); }) ==
          ErrorKind::StepSizeUnderflow);
  }

  TEST_CASE("response grid") {
    std::mt19937_64 rng(48);
    const Generator g = random_generator(5, rng);
    const Distribution mu = random_distribution(5, rng);
    const Observable v = random_observable(5, rng), q = random_observable(5, rng);
    const std::vector<double> pts{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto serial = response_grid(g, mu, v, q, 0.2, 0.6, 1.0, pts, 1, "random");
    const auto parallel = response_grid(g, mu, v, q, 0.2, 0.6, 1.0, pts, 4, "random");
    REQUIRE(serial.values.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(serial.values[i] == parallel.values[i]);
      CHECK(serial.values[i] == response_exact(g, mu, v, q, 0.2, 0.6, pts[i], 1.0));
    }
    CHECK(serial.metadata.initial_law == "random");
    CHECK(kind_of([&] { response_grid(g, mu, v, q, 0.2, 0.6, 1.0, {0.5, 0.3}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { response_grid(g, mu, v, q, 0.2, 0.6, 1.0, {0.5, 1.0}); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("stationary susceptibilities") {
    std::mt19937_64 rng(49);
    for (int trial = 0; trial < 5; ++trial) {
      const Generator g = random_generator(6, rng);
      const Distribution rho = stationary_distribution(g);
      const Observable v = random_observable(6, rng), m = random_observable(6, rng);
      const double a = uniform(rng, 0, 1), b = uniform(rng, 0, 1);
      const auto chi = chi_formula(g, rho, v, m, a, b);
      CHECK(std::abs(chi.chi_MV - chi.chi_VM) <= 1e-14);
      const auto fd = chi_fd(g, v, m, a, b, 1e-5);
      CHECK(std::abs(fd.chi_MV - chi.chi_MV) <= std::max(1e-3 * std::abs(chi.chi_MV), 1e-8));
      CHECK(std::abs(fd.chi_VM - chi.chi_VM) <= std::max(1e-3 * std::abs(chi.chi_VM), 1e-8));
      // O(h): halving h halves the error.
      const auto coarse = chi_fd(g, v, m, a, b, 2e-3);
      const auto fine = chi_fd(g, v, m, a, b, 1e-3);
      const double ratio = std::abs(coarse.chi_MV - chi.chi_MV) / std::abs(fine.chi_MV - chi.chi_MV);
      CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
    }
    const Generator g = random_generator(5, rng);
    const Distribution rho = stationary_distribution(g);
    const Observable v = random_observable(5, rng);
    const Vector lv = dense_L(g) * v.values();
    const double vlv = rho.values().dot(v.values().cwiseProduct(lv));
    CHECK(chi_formula(g, rho, v, v, 0.3, 0.4).chi_MV == doctest::Approx(0.7 * vlv).epsilon(1e-13));
    const auto flat = chi_fd(g, Observable::constant(5, 1.0), v, 0.5, 0.5);
    CHECK(std::abs(flat.chi_MV) < 1e-9);
    CHECK(std::abs(flat.chi_VM) < 1e-9);

    const auto inst = random_reversible(6, rng, 1.0);
    const Distribution rho_eq = stationary_distribution(inst.g);
    const Observable x = random_observable(6, rng), y = random_observable(6, rng);
    const double ref = chi_formula(inst.g, rho_eq, x, y, 0.5, 0.5).chi_MV;
    for (double a : {0.0, 0.2, 1.0}) CHECK(std::abs(chi_formula(inst.g, rho_eq, x, y, a, 1.0 - a).chi_MV - ref) <= 1e-12);
    CHECK(kind_of([&] { chi_formula(inst.g, Distribution::uniform(6), x, y, 0.5, 0.5); }) == ErrorKind::NotStationary);
  }

  TEST_CASE("generator identity is second order") {
    std::mt19937_64 rng(50);
    const Generator g = random_generator(5, rng);
    const Observable v = random_observable(5, rng), m = random_observable(5, rng);
    CHECK(generator_identity_check(g, v, m, 0.3, 0.8, 0.0) == 0.0);
    // With a = b and M = V both perturbation terms coincide.
    CHECK(generator_identity_check(g, v, v, 0.5, 0.5, 0.1) <= 1e-13);
    const double r2 = generator_identity_check(g, v, m, 0.3, 0.8, 1e-2);
    const double r3 = generator_identity_check(g, v, m, 0.3, 0.8, 1e-3);
    CHECK(r2 / r3 >= 100.0 / 1.3);
    CHECK(r2 / r3 <= 100.0 * 1.3);
    std::vector<double> hs{1e-1, 1e-2, 1e-3, 1e-4}, res;
    for (double h : hs) res.push_back(generator_identity_check(g, v, m, 0.3, 0.8, h));
    CHECK(std::abs(fit_slope(hs, res) - 2.0) <= 0.1);
  }
}
