#include "neqresponse/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neqresponse/error.hpp"
#include "neqresponse/quadrature.hpp"

namespace neqresponse {
namespace {

constexpr std::string_view kModule = "perturbation";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

}  // namespace

// Natural cubic spline; on [t_i, t_{i+1}] with d = s - t_i,
// h(s) = y_i + b_i d + c_i d^2 + e_i d^3.
struct AmplitudeSchedule::Spline {
  std::vector<double> t, y, b, c, e;

  Spline(std::vector<double> times, std::vector<double> values) : t(std::move(times)), y(std::move(values)) {
    const std::size_t n = t.size() - 1;
    std::vector<double> width(n);
    for (std::size_t i = 0; i < n; ++i) width[i] = t[i + 1] - t[i];
    // Second-derivative moments m_i with m_0 = m_n = 0 (tridiagonal solve).
    std::vector<double> m(n + 1, 0.0);
    if (n >= 2) {
      std::vector<double> diag(n - 1), upper(n - 1), rhs(n - 1);
      for (std::size_t i = 1; i < n; ++i) {
        diag[i - 1] = 2.0 * (width[i - 1] + width[i]);
        upper[i - 1] = width[i];
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / width[i] - (y[i] - y[i - 1]) / width[i - 1]);
      }
      for (std::size_t i = 1; i < n - 1; ++i) {
        const double factor = width[i] / diag[i - 1];
        diag[i] -= factor * upper[i - 1];
        rhs[i] -= factor * rhs[i - 1];
      }
      m[n - 1] = rhs[n - 2] / diag[n - 2];
      for (std::size_t i = n - 2; i >= 1; --i) m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
    }
    b.resize(n);
    c.resize(n);
    e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = (y[i + 1] - y[i]) / width[i] - width[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
      c[i] = m[i] / 2.0;
      e[i] = (m[i + 1] - m[i]) / (6.0 * width[i]);
    }
  }

  std::size_t segment(double s) const {
    auto it = std::upper_bound(t.begin(), t.end(), s);
    const auto idx = std::size_t(std::max<std::ptrdiff_t>(0, (it - t.begin()) - 1));
    return std::min(idx, t.size() - 2);
  }

  double value(double s) const {
    const std::size_t i = segment(s);
    const double d = s - t[i];
    return y[i] + d * (b[i] + d * (c[i] + d * e[i]));
  }

  double derivative(double s) const {
    const std::size_t i = segment(s);
    const double d = s - t[i];
    return b[i] + d * (2.0 * c[i] + 3.0 * d * e[i]);
  }

  // Antiderivative of segment i evaluated at offset d.
  double primitive(std::size_t i, double d) const {
    return d * (y[i] + d * (b[i] / 2.0 + d * (c[i] / 3.0 + d * e[i] / 4.0)));
  }

  double integral(double s0, double s1) const {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double lo = std::max(s0, t[i]);
      const double hi = std::min(s1, t[i + 1]);
      if (hi > lo) total += primitive(i, hi - t[i]) - primitive(i, lo - t[i]);
    }
    return total;
  }

  // Exact maximum of |h| on [s0, s1]: endpoints, knots and cubic extrema.
  double sup_abs(double s0, double s1) const {
    double best = std::max(std::abs(value(s0)), std::abs(value(s1)));
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double lo = std::max(s0, t[i]);
      const double hi = std::min(s1, t[i + 1]);
      if (hi < lo) continue;
      best = std::max({best, std::abs(value(lo)), std::abs(value(hi))});
      // Roots of b + 2c d + 3e d^2.
      const double qa = 3.0 * e[i], qb = 2.0 * c[i], qc = b[i];
      std::vector<double> roots;
      if (std::abs(qa) < 1e-300) {
        if (std::abs(qb) > 1e-300) roots.push_back(-qc / qb);
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          roots.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
          roots.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
        }
      }
      for (double d : roots) {
        const double s = t[i] + d;
        if (s >= lo && s <= hi) best = std::max(best, std::abs(value(s)));
      }
    }
    return best;
  }
};

AmplitudeSchedule AmplitudeSchedule::constant(double h) {
  if (!std::isfinite(h)) fail(ErrorKind::InvalidArgument, "constant amplitude must be finite");
  AmplitudeSchedule s;
  s.kind_ = Kind::constant;
  s.constant_ = h;
  return s;
}

AmplitudeSchedule AmplitudeSchedule::grid(std::vector<double> times, std::vector<double> values) {
  if (times.size() < 2 || times.size() != values.size()) {
    fail(ErrorKind::InvalidArgument, "grid schedule needs matching times/values with at least two points");
  }
  if (times.front() != 0.0) fail(ErrorKind::InvalidArgument, "grid schedule must start at time 0");
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i + 1] > times[i])) fail(ErrorKind::InvalidArgument, "grid times must be strictly increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "grid values must be finite");
  }
  AmplitudeSchedule s;
  s.kind_ = Kind::grid;
  s.horizon_ = times.back();
  s.spline_ = std::make_shared<const Spline>(std::move(times), std::move(values));
  return s;
}

AmplitudeSchedule AmplitudeSchedule::callable(Function value, Function derivative, double horizon,
                                              std::optional<double> sup_abs_bound) {
  if (!value || !derivative) fail(ErrorKind::InvalidArgument, "callable schedule needs value and derivative");
  if (!(horizon > 0.0)) fail(ErrorKind::InvalidArgument, "callable schedule horizon must be positive");
  AmplitudeSchedule s;
  s.kind_ = Kind::callable;
  s.horizon_ = horizon;
  s.value_fn_ = std::move(value);
  s.derivative_fn_ = std::move(derivative);
  s.bound_ = sup_abs_bound;
  return s;
}

void AmplitudeSchedule::check_domain(double s) const {
  // Tolerate round-off at the right end of the support.
  if (!(s >= 0.0) || s > horizon_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time " << s << " outside schedule support [0, " << horizon_ << "]";
    fail(ErrorKind::ScheduleDomain, os.str());
  }
}

double AmplitudeSchedule::value(double s) const {
  check_domain(s);
  switch (kind_) {
    case Kind::constant: return scale_ * constant_;
    case Kind::grid: return scale_ * spline_->value(s);
    case Kind::callable: return scale_ * value_fn_(s);
  }
  return 0.0;
}

double AmplitudeSchedule::derivative(double s) const {
  check_domain(s);
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::grid: return scale_ * spline_->derivative(s);
    case Kind::callable: return scale_ * derivative_fn_(s);
  }
  return 0.0;
}

double AmplitudeSchedule::integral(double s0, double s1) const {
  check_domain(s0);
  check_domain(s1);
  if (s1 <= s0) return 0.0;
  switch (kind_) {
    case Kind::constant: return scale_ * constant_ * (s1 - s0);
    case Kind::grid: return scale_ * spline_->integral(s0, s1);
    case Kind::callable: {
      const double tol = 1e-13 * std::max(1.0, s1 - s0);
      return scale_ * integrate([this](double s) { return value_fn_(s); }, s0, s1, tol).value;
    }
  }
  return 0.0;
}

double AmplitudeSchedule::sup_abs(double s0, double s1) const {
  check_domain(s0);
  check_domain(s1);
  switch (kind_) {
    case Kind::constant: return std::abs(scale_ * constant_);
    case Kind::grid: return std::abs(scale_) * spline_->sup_abs(s0, s1);
    case Kind::callable:
      if (!bound_) fail(ErrorKind::UnboundedSchedule, "callable schedule has no declared bound on |h|");
      return std::abs(scale_) * *bound_;
  }
  return 0.0;
}

std::vector<double> AmplitudeSchedule::knots_in(double s0, double s1) const {
  std::vector<double> out;
  if (kind_ == Kind::grid) {
    for (double k : spline_->t) {
      if (k > s0 && k < s1) out.push_back(k);
    }
  }
  return out;
}

AmplitudeSchedule AmplitudeSchedule::scaled(double factor) const {
  AmplitudeSchedule copy = *this;
  copy.scale_ *= factor;
  return copy;
}

bool AmplitudeSchedule::is_identically_zero() const noexcept {
  if (scale_ == 0.0) return true;
  if (kind_ == Kind::constant) return constant_ == 0.0;
  if (kind_ == Kind::grid) return std::all_of(spline_->y.begin(), spline_->y.end(), [](double v) { return v == 0.0; });
  return false;
}

}  // namespace neqresponse
