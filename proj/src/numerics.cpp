#include "hsicgsa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "hsicgsa/errors.hpp"

namespace hsicgsa::numerics {

QuadratureRule gauss_legendre(std::size_t count, double lower, double upper) {
  require(count >= 1, ErrorCode::InvalidParameter, "quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const double half_width = 0.5 * (upper - lower);
  const double centre = 0.5 * (upper + lower);
  if (count == 1) {
    rule.nodes[0] = centre;
    rule.weights[0] = 2.0 * half_width;
    return rule;
  }
  const std::size_t half = (count + 1) / 2;
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi's initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= count; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = centre - half_width * x;
    rule.nodes[count - 1 - i] = centre + half_width * x;
    rule.weights[i] = w * half_width;
    rule.weights[count - 1 - i] = w * half_width;
  }
  return rule;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double gamma_survival(double x, double shape, double scale) {
  require(shape > 0.0 && scale > 0.0 && std::isfinite(shape) && std::isfinite(scale),
          ErrorCode::Degenerate, "Gamma parameters must be finite and positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(shape, x / scale);
}

double invert_cdf(const std::function<double(double)>& cdf,
                  const std::function<double(double)>& pdf, double p,
                  double lower, double upper) {
  double lo = lower;
  double hi = upper;
  double x = lower + p * (upper - lower);
  for (int iter = 0; iter < 300; ++iter) {
    const double residual = cdf(x) - p;
    if (residual == 0.0) return x;
    if (residual < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    const double slope = pdf(x);
    double candidate = slope > 0.0 ? x - residual / slope : 0.5 * (lo + hi);
    if (!(candidate > lo && candidate < hi)) candidate = 0.5 * (lo + hi);
    x = candidate;
  }
  return x;
}

double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
  const double m = mean(values);
  double sum = 0.0;
  for (double v : values) sum += (v - m) * (v - m);
  return sum / static_cast<double>(values.size());
}

}  // namespace hsicgsa::numerics
