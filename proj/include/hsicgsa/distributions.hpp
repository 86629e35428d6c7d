#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsicgsa/rng.hpp"

namespace hsicgsa {

enum class Family { Uniform, Triangular, TruncNormal, FiniteMixture, QuantileGrid };

enum class Functional { Pdf, Cdf, Quantile };

const char* to_string(Family family);

struct WeightedLaw;

namespace detail {
struct DistImpl;
}

/// A one-dimensional continuous law on a compact support [lower, upper].
///
/// Values are immutable and cheap to copy (shared implementation), so they
/// can be shared freely between threads. Parameters are validated when the
/// law is built; an invalid law can never be observed.
class UnivariateDist {
 public:
  static UnivariateDist uniform(double a, double b);
  static UnivariateDist triangular(double a, double b, double mode);
  static UnivariateDist trunc_normal(double a, double b, double mean, double sd);
  /// Weights must be nonnegative and sum to one within 1e-12.
  static UnivariateDist mixture(std::vector<WeightedLaw> components);
  /// Law defined by its quantile function at equispaced probabilities
  /// p_i = i / (N - 1); `quantiles` must start at a, end at b and increase
  /// strictly. Between nodes the quantile is linear, so the density is
  /// piecewise constant.
  static UnivariateDist quantile_grid(std::vector<double> quantiles);

  Family family() const;
  double lower() const;
  double upper() const;

  double pdf(double x) const;
  double cdf(double x) const;
  /// Throws ErrorCode::Domain unless 0 < p < 1.
  double quantile(double p) const;
  double evaluate(double x, Functional what) const;

  double mean() const;
  double variance() const;

  /// n i.i.d. draws by inverse transform.
  std::vector<double> sample(std::size_t n, RngStream& rng) const;
  void sample_into(std::span<double> out, RngStream& rng) const;

  /// Family parameters in constructor order (empty for mixtures and grids).
  const std::vector<double>& parameters() const;
  const std::vector<WeightedLaw>& components() const;
  const std::vector<double>& quantile_table() const;

  std::string describe() const;

  friend bool operator==(const UnivariateDist& lhs, const UnivariateDist& rhs);

 private:
  explicit UnivariateDist(std::shared_ptr<const detail::DistImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const detail::DistImpl> impl_;
};

struct WeightedLaw {
  UnivariateDist law;
  double weight;
};

/// Independent product of d marginals.
class ProductDist {
 public:
  ProductDist() = default;
  explicit ProductDist(std::vector<UnivariateDist> marginals);

  std::size_t dimension() const { return marginals_.size(); }
  const UnivariateDist& marginal(std::size_t k) const { return marginals_.at(k); }
  const std::vector<UnivariateDist>& marginals() const { return marginals_; }

  double pdf(std::span<const double> x) const;

  /// n x d matrix; column k is drawn from marginal k, columns in order.
  Eigen::MatrixXd sample(std::size_t n, RngStream& rng) const;

  friend bool operator==(const ProductDist& lhs, const ProductDist& rhs) {
    return lhs.marginals_ == rhs.marginals_;
  }

 private:
  std::vector<UnivariateDist> marginals_;
};

/// A parametric family with one uncertain parameter, e.g. triangular(0, 20, c)
/// with c ~ U(8, 15). Support bounds (parameters 0 and 1) cannot be uncertain.
struct ParamFamily {
  Family family;
  std::vector<double> parameters;
  std::size_t uncertain_index;
  UnivariateDist parameter_law;

  UnivariateDist make(double value) const;
};

/// Law on laws for one input.
class DistPrior {
 public:
  /// Identical atoms are merged; probabilities must sum to 1 and all laws
  /// must share one support.
  static DistPrior finite(std::vector<WeightedLaw> atoms);
  static DistPrior fixed(UnivariateDist law);
  static DistPrior parametric(ParamFamily family);

  bool is_finite() const { return !family_; }
  const std::vector<WeightedLaw>& atoms() const { return atoms_; }
  const ParamFamily& param_family() const;

  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  DistPrior() = default;
  std::vector<WeightedLaw> atoms_;
  std::shared_ptr<const ParamFamily> family_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

UnivariateDist draw_law(const DistPrior& prior, RngStream& rng);

struct WeightedProduct {
  ProductDist law;
  double probability;
  std::vector<std::size_t> atom_indices;
};

/// Cartesian product of finite priors with product probabilities, first
/// input varying slowest. Throws ErrorCode::Unsupported for parametric priors.
std::vector<WeightedProduct> enumerate_prior(std::span<const DistPrior> priors);

}  // namespace hsicgsa
