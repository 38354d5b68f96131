#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace neqresponse {

/// Time profile s -> h_s of a perturbation amplitude on its support [0, T].
///
/// Three kinds are supported: a constant (support [0, inf)), a natural cubic
/// spline through grid values, and a user callable. Every kind answers value
/// and first-derivative queries; grids differentiate their spline, callables
/// must supply the derivative explicitly.
class AmplitudeSchedule {
 public:
  enum class Kind { constant, grid, callable };

  using Function = std::function<double(double)>;

  static AmplitudeSchedule constant(double h);

  /// `times` strictly increasing, starting at 0, at least two points.
  static AmplitudeSchedule grid(std::vector<double> times, std::vector<double> values);

  /// `sup_abs_bound`, when given, must bound |h_s| on [0, horizon]; thinning
  /// samplers refuse callables without one.
  static AmplitudeSchedule callable(Function value, Function derivative, double horizon,
                                    std::optional<double> sup_abs_bound = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  double horizon() const noexcept { return horizon_; }
  bool covers(double s) const noexcept { return s >= 0.0 && s <= horizon_; }

  double value(double s) const;
  double derivative(double s) const;

  /// Integral of h over [s0, s1] (exact for constant and grid kinds).
  double integral(double s0, double s1) const;

  /// Upper bound on |h_s| for s in [s0, s1]. Throws UnboundedSchedule for a
  /// callable without a declared bound.
  double sup_abs(double s0, double s1) const;

  /// Interior points of (s0, s1) where the schedule loses smoothness.
  std::vector<double> knots_in(double s0, double s1) const;

  /// The schedule multiplied pointwise by `factor`.
  AmplitudeSchedule scaled(double factor) const;

  bool is_identically_zero() const noexcept;

 private:
  struct Spline;

  AmplitudeSchedule() = default;
  void check_domain(double s) const;

  Kind kind_ = Kind::constant;
  double scale_ = 1.0;
  double constant_ = 0.0;
  double horizon_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<const Spline> spline_;
  Function value_fn_;
  Function derivative_fn_;
  std::optional<double> bound_;
};

}  // namespace neqresponse
