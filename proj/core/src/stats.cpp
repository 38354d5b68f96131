#include "neqresponse/stats.hpp"

#include <cmath>

#include "neqresponse/error.hpp"

namespace neqresponse {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

MeanEstimate mean_and_error(std::span<const double> samples) {
  MeanEstimate out;
  out.count = samples.size();
  if (samples.empty()) return out;
  CompensatedSum sum;
  for (double x : samples) sum.add(x);
  out.mean = sum.value() / double(samples.size());
  if (samples.size() < 2) return out;
  CompensatedSum squares;
  for (double x : samples) squares.add((x - out.mean) * (x - out.mean));
  const double variance = squares.value() / double(samples.size() - 1);
  out.std_error = std::sqrt(variance / double(samples.size()));
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "stats", "slope fit needs at least two matching points");
  }
  double mx = 0.0, my = 0.0;
  const auto n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(std::abs(y[i]));
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace neqresponse
