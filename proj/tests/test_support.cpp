// Sanity checks on the dense test oracles themselves.

#include <doctest.h>

#include "support.hpp"

using namespace testing_support;

TEST_SUITE("support") {
  TEST_CASE("expm oracle reproduces the two-state closed form") {
    const double w01 = 1.3, w10 = 0.4, t = 2.7;
    const Matrix p = expm_L(two_state(w01, w10), t);
    const double r = w01 + w10;
    const double decay = std::exp(-r * t);
    CHECK(p(0, 0) == doctest::Approx((w10 + w01 * decay) / r).epsilon(1e-14));
    CHECK(p(0, 1) == doctest::Approx(w01 * (1 - decay) / r).epsilon(1e-14));
    CHECK(p(1, 0) == doctest::Approx(w10 * (1 - decay) / r).epsilon(1e-14));
  }

  TEST_CASE("svd stationary oracle matches the ring's uniform law") {
    const Vector rho = stationary_svd(biased_ring(5, 2.0, 0.5));
    for (Eigen::Index i = 0; i < rho.size(); ++i) CHECK(rho[i] == doctest::Approx(0.2).epsilon(1e-13));
  }

  TEST_CASE("random reversible instances balance against their Gibbs law") {
    std::mt19937_64 rng(7);
    const auto inst = random_reversible(9, rng, 1.7);
    const Vector rho = gibbs(inst.energy, inst.beta).values();
    const Matrix l = dense_L(inst.g);
    for (Eigen::Index x = 0; x < l.rows(); ++x) {
      for (Eigen::Index y = 0; y < l.cols(); ++y) {
        if (x != y) CHECK(std::abs(rho[x] * l(x, y) - rho[y] * l(y, x)) < 1e-15);
      }
    }
  }

  TEST_CASE("ks statistic of identical samples is zero") {
    std::vector<double> a{0.3, 0.1, 0.2};
    CHECK(ks_statistic(a, a) == 0.0);
    CHECK(ks_statistic({0.0, 0.1}, {1.0, 1.1}) == 1.0);
  }
}
