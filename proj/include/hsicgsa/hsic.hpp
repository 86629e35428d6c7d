#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "hsicgsa/distributions.hpp"
#include "hsicgsa/kernels.hpp"
#include "hsicgsa/rng.hpp"

namespace hsicgsa {

/// n x d inputs, n outputs and the law the inputs were drawn from.
class SampleSet {
 public:
  SampleSet(Eigen::MatrixXd inputs, Eigen::VectorXd outputs, ProductDist generating_law);

  std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(inputs_.cols()); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }
  const ProductDist& generating_law() const { return law_; }

  /// Column k as a contiguous span.
  std::span<const double> column(std::size_t k) const;
  std::span<const double> output_span() const;

  /// Same law, rows reordered / resampled by `rows`.
  SampleSet select(std::span<const std::size_t> rows) const;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd outputs_;
  ProductDist law_;
};

enum class HsicKind { Classical, Weighted };

struct HsicValue {
  double value;
  HsicKind kind;
  std::size_t input_index;  // zero-based
};

/// Standardized Gaussian Gram matrices of every input column and of the
/// output, computed once per sample.
struct SampleGrams {
  std::vector<Eigen::MatrixXd> inputs;
  Eigen::MatrixXd output;
};

SampleGrams compute_grams(const SampleSet& sample);
Eigen::MatrixXd input_gram(const SampleSet& sample, std::size_t k);
Eigen::MatrixXd output_gram(const SampleSet& sample);

/// (1/n^2) Tr(Lk H L H) via the double-centered Gram matrix.
double hsic_v(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l);

/// Three-term V-statistic sum form, computed with row sums.
double hsic_v_sum(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l);

/// cross / sqrt(self_x * self_y) clamped to [0, 1]; Degenerate when the
/// denominator is not positive.
double r2_from_values(double cross, double self_x, double self_y);

HsicValue hsic_v(const SampleSet& sample, std::size_t k);
HsicValue hsic_v_sum(const SampleSet& sample, std::size_t k);
double r2_hsic(const SampleSet& sample, std::size_t k);

/// Gamma-approximation p-value with null moments from the weighted module
/// at unit weights.
double asymp_pvalue(const SampleSet& sample, std::size_t k);

/// Fraction of B input permutations whose statistic strictly exceeds the
/// observed one. Replicate b uses the stream rng.derive(b).
double perm_pvalue(const SampleSet& sample, std::size_t k, std::size_t permutations,
                   const RngStream& rng, std::size_t threads = 1);

}  // namespace hsicgsa
