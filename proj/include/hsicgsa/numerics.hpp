#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hsicgsa::numerics {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `count` nodes mapped to [lower, upper].
QuadratureRule gauss_legendre(std::size_t count, double lower, double upper);

/// Standard normal cdf.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Upper regularized incomplete gamma Q(shape, x / scale), i.e. the survival
/// function of Gamma(shape, scale) at x.
double gamma_survival(double x, double shape, double scale);

/// Smallest x in [lower, upper] with cdf(x) >= p, for a continuous
/// nondecreasing cdf. Safeguarded Newton with bisection fallback; `pdf` may
/// return 0 where the derivative is unknown.
double invert_cdf(const std::function<double(double)>& cdf,
                  const std::function<double(double)>& pdf, double p,
                  double lower, double upper);

/// Population variance (divide by n).
double population_variance(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace hsicgsa::numerics
