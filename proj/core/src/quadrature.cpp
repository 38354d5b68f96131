#include "neqresponse/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "neqresponse/error.hpp"

namespace neqresponse {
namespace {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  unsigned depth;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel kronrod_panel(const std::function<double(double)>& f, double a, double b, unsigned depth) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  double error = 0.0;
  const double value = Rule::integrate(f, a, b, 0, 0.0, &error);
  return {a, b, value, error, depth};
}

}  // namespace

// Globally adaptive bisection (QAG style): always split the panel with the
// largest Kronrod error estimate until the summed estimate meets abs_tol.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           unsigned max_depth) {
  if (a == b) return {};
  if (!(abs_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "quadrature", "tolerance must be positive");
  std::priority_queue<Panel> panels;
  panels.push(kronrod_panel(f, a, b, 0));
  double total_error = panels.top().error;
  std::vector<Panel> finished;
  while (total_error > abs_tol && !panels.empty()) {
    Panel worst = panels.top();
    panels.pop();
    if (worst.depth >= max_depth) {
      finished.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = kronrod_panel(f, worst.a, mid, worst.depth + 1);
    Panel right = kronrod_panel(f, mid, worst.b, worst.depth + 1);
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }
  QuadratureResult result;
  for (; !panels.empty(); panels.pop()) finished.push_back(panels.top());
  // Sum small contributions first.
  std::sort(finished.begin(), finished.end(),
            [](const Panel& x, const Panel& y) { return std::abs(x.value) < std::abs(y.value); });
  for (const auto& p : finished) {
    result.value += p.value;
    result.error_estimate += p.error;
  }
  if (!std::isfinite(result.value) || result.error_estimate > abs_tol) {
    std::ostringstream os;
    os << "achieved error estimate " << result.error_estimate << " exceeds tolerance " << abs_tol << " on [" << a
       << ", " << b << "]";
    throw Error(ErrorKind::QuadratureFailure, "quadrature", os.str());
  }
  return result;
}

QuadratureResult integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                                     std::span<const double> breakpoints, double abs_tol, unsigned max_depth) {
  std::vector<double> cuts{a};
  for (double x : breakpoints) {
    if (x > a && x < b) cuts.push_back(x);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double piece_tol = abs_tol / double(cuts.size() - 1);
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto piece = integrate(f, cuts[i], cuts[i + 1], piece_tol, max_depth);
    total.value += piece.value;
    total.error_estimate += piece.error_estimate;
  }
  return total;
}

}  // namespace neqresponse
