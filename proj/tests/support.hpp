#pragma once

// Instance generators and independent dense oracles shared by the unit and
// acceptance tests. Nothing here calls into the library's numerical kernels;
// generators are only used to read back their transition lists.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "neqresponse/markov.hpp"

namespace testing_support {

using neqresponse::Distribution;
using neqresponse::Generator;
using neqresponse::Matrix;
using neqresponse::Observable;
using neqresponse::StateSpace;
using neqresponse::Transition;
using neqresponse::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Generator from_matrix(const Matrix& w) {
  std::vector<Transition> tr;
  for (Eigen::Index x = 0; x < w.rows(); ++x) {
    for (Eigen::Index y = 0; y < w.cols(); ++y) {
      if (x != y && w(x, y) > 0.0) tr.push_back({std::size_t(x), std::size_t(y), w(x, y)});
    }
  }
  return Generator::build(StateSpace::indexed(std::size_t(w.rows())), tr);
}

inline Generator two_state(double w01, double w10) {
  Matrix w = Matrix::Zero(2, 2);
  w(0, 1) = w01;
  w(1, 0) = w10;
  return from_matrix(w);
}

/// Ring 0 -> 1 -> ... -> n-1 -> 0 at rate p, reverse direction at rate q.
inline Generator biased_ring(std::size_t n = 3, double p = 2.0, double q = 1.0) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto y = Eigen::Index((x + 1) % n);
    w(Eigen::Index(x), y) += p;
    w(y, Eigen::Index(x)) += q;
  }
  return from_matrix(w);
}

/// Complete graph with independent rates in [lo, hi]; generically not reversible.
inline Generator random_generator(std::size_t n, std::mt19937_64& rng, double lo = 0.2, double hi = 2.0) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index x = 0; x < w.rows(); ++x) {
    for (Eigen::Index y = 0; y < w.cols(); ++y) {
      if (x != y) w(x, y) = uniform(rng, lo, hi);
    }
  }
  return from_matrix(w);
}

/// Sparse random generator: a random ring keeps it irreducible, and each
/// remaining ordered pair is present with probability `density`.
inline Generator random_sparse_generator(std::size_t n, std::mt19937_64& rng, double density = 0.3) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Index> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = Eigen::Index(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < n; ++i) w(perm[i], perm[(i + 1) % n]) = uniform(rng, 0.2, 2.0);
  for (Eigen::Index x = 0; x < w.rows(); ++x) {
    for (Eigen::Index y = 0; y < w.cols(); ++y) {
      if (x != y && w(x, y) == 0.0 && uniform(rng, 0.0, 1.0) < density) w(x, y) = uniform(rng, 0.2, 2.0);
    }
  }
  return from_matrix(w);
}

struct Reversible {
  Generator g;
  Vector energy;  // rho proportional to exp(-beta * energy)
  double beta;
};

/// W(x,y) = S(x,y) exp(-beta (U(y) - U(x)) / 2) with S symmetric on a
/// connected random graph, so rho ~ exp(-beta U) satisfies detailed balance.
inline Reversible random_reversible(std::size_t n, std::mt19937_64& rng, double beta = 1.0, double density = 0.5) {
  Vector u(static_cast<Eigen::Index>(n));
  for (auto& e : u) e = uniform(rng, -1.0, 1.0);
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {  // random spanning tree
    const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    s(Eigen::Index(i), Eigen::Index(j)) = s(Eigen::Index(j), Eigen::Index(i)) = uniform(rng, 0.3, 2.0);
  }
  for (Eigen::Index x = 0; x < s.rows(); ++x) {
    for (Eigen::Index y = x + 1; y < s.cols(); ++y) {
      if (s(x, y) == 0.0 && uniform(rng, 0.0, 1.0) < density) s(x, y) = s(y, x) = uniform(rng, 0.3, 2.0);
    }
  }
  Matrix w = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index x = 0; x < s.rows(); ++x) {
    for (Eigen::Index y = 0; y < s.cols(); ++y) {
      if (s(x, y) > 0.0) w(x, y) = s(x, y) * std::exp(-beta * (u[y] - u[x]) / 2.0);
    }
  }
  return {from_matrix(w), u, beta};
}

inline Observable random_observable(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = uniform(rng, lo, hi);
  return Observable(v);
}

inline Distribution random_distribution(std::size_t n, std::mt19937_64& rng, double floor = 0.05) {
  Vector p(static_cast<Eigen::Index>(n));
  for (auto& e : p) e = uniform(rng, floor, 1.0);
  return Distribution(p / p.sum());
}

inline Distribution gibbs(const Vector& energy, double beta) {
  Vector p = (-beta * (energy.array() - energy.minCoeff())).exp().matrix();
  return Distribution(p / p.sum());
}

// ---- dense oracles -------------------------------------------------------

/// L assembled from the transition list.
inline Matrix dense_L(const Generator& g) {
  const auto n = Eigen::Index(g.size());
  Matrix l = Matrix::Zero(n, n);
  for (const auto& t : g.transitions()) {
    l(Eigen::Index(t.from), Eigen::Index(t.to)) += t.rate;
    l(Eigen::Index(t.from), Eigen::Index(t.from)) -= t.rate;
  }
  return l;
}

/// exp(A) by scaling and squaring around a Taylor series summed until the
/// terms stop changing the result.
inline Matrix expm_taylor(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Matrix scaled = a / std::ldexp(1.0, squarings);
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k < 60; ++k) {
    term = term * scaled / double(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

inline Matrix expm_L(const Generator& g, double t) { return expm_taylor(t * dense_L(g)); }

/// Stationary law from the right singular vector of L^T with smallest
/// singular value.
inline Vector stationary_svd(const Generator& g) {
  const Matrix lt = dense_L(g).transpose();
  Eigen::JacobiSVD<Matrix> svd(lt, Eigen::ComputeFullV);
  Vector v = svd.matrixV().col(lt.cols() - 1);
  v /= v.sum();
  return v;
}

/// <V(x_s) Q(x_t)>_mu from dense exponentials.
inline double correlation_dense(const Generator& g, const Vector& mu, const Vector& v, const Vector& q, double s,
                                double t) {
  const Vector mu_s = (mu.transpose() * expm_L(g, s)).transpose();
  const Vector pq = expm_L(g, t - s) * q;
  return (mu_s.array() * v.array() * pq.array()).sum();
}

/// Dense perturbed rates W(x,y) exp(h (b V(y) - a V(x))).
inline Generator perturbed_dense(const Generator& g, const Vector& v, double a, double b, double h) {
  const auto n = Eigen::Index(g.size());
  Matrix w = Matrix::Zero(n, n);
  for (const auto& t : g.transitions()) {
    w(Eigen::Index(t.from), Eigen::Index(t.to)) =
        t.rate * std::exp(h * (b * v[Eigen::Index(t.to)] - a * v[Eigen::Index(t.from)]));
  }
  return from_matrix(w);
}

inline double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

/// Least-squares slope of log|y| against log x, written independently of
/// the library's helper.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(std::abs(y[i]));
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
  }
  return d;
}

/// Critical KS distance at the 1% level for two samples of equal size n.
inline double ks_critical_1pct(std::size_t n) { return 1.628 * std::sqrt(2.0 / double(n)); }

}  // namespace testing_support
