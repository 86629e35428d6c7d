#include "hsicgsa/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/weighted.hpp"

namespace hsicgsa {

SampleSet::SampleSet(Eigen::MatrixXd inputs, Eigen::VectorXd outputs, ProductDist generating_law)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), law_(std::move(generating_law)) {
  require(inputs_.rows() >= 2, ErrorCode::InvalidParameter, "sample: need at least two points");
  require(inputs_.rows() == outputs_.size(), ErrorCode::SizeMismatch,
          "sample: input and output row counts differ");
  require(static_cast<std::size_t>(inputs_.cols()) == law_.dimension(), ErrorCode::SizeMismatch,
          "sample: column count does not match the generating law");
  require(inputs_.allFinite() && outputs_.allFinite(), ErrorCode::InvalidParameter,
          "sample: entries must be finite");
}

std::span<const double> SampleSet::column(std::size_t k) const {
  require(k < dimension(), ErrorCode::InvalidParameter, "sample: input index out of range");
  return {inputs_.col(static_cast<Eigen::Index>(k)).data(), size()};
}

std::span<const double> SampleSet::output_span() const { return {outputs_.data(), size()}; }

SampleSet SampleSet::select(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), inputs_.cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < size(), ErrorCode::InvalidParameter, "sample: row index out of range");
    x.row(static_cast<Eigen::Index>(i)) = inputs_.row(static_cast<Eigen::Index>(rows[i]));
    y(static_cast<Eigen::Index>(i)) = outputs_(static_cast<Eigen::Index>(rows[i]));
  }
  return {std::move(x), std::move(y), law_};
}

Eigen::MatrixXd input_gram(const SampleSet& sample, std::size_t k) {
  const auto col = sample.column(k);
  return gram(standardized_kernel(col), col);
}

Eigen::MatrixXd output_gram(const SampleSet& sample) {
  const auto y = sample.output_span();
  return gram(standardized_kernel(y), y);
}

SampleGrams compute_grams(const SampleSet& sample) {
  SampleGrams grams;
  for (std::size_t k = 0; k < sample.dimension(); ++k) grams.inputs.push_back(input_gram(sample, k));
  grams.output = output_gram(sample);
  return grams;
}

double hsic_v(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l) {
  require(lk.rows() == l.rows() && lk.cols() == l.cols() && lk.rows() == lk.cols(),
          ErrorCode::SizeMismatch, "hsic: Gram matrices differ in size");
  const double n = static_cast<double>(lk.rows());
  const Eigen::VectorXd row = lk.rowwise().mean();
  const double grand = row.mean();
  // Tr(Lk H L H) = sum_ij (H Lk H)_ij L_ij.
  double total = 0.0;
  for (Eigen::Index j = 0; j < lk.cols(); ++j) {
    for (Eigen::Index i = 0; i < lk.rows(); ++i) {
      total += (lk(i, j) - row(i) - row(j) + grand) * l(i, j);
    }
  }
  return total / (n * n);
}

double hsic_v_sum(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l) {
  require(lk.rows() == l.rows() && lk.cols() == l.cols() && lk.rows() == lk.cols(),
          ErrorCode::SizeMismatch, "hsic: Gram matrices differ in size");
  const double n = static_cast<double>(lk.rows());
  const double first = lk.cwiseProduct(l).sum() / (n * n);
  const double second = (lk.sum() / (n * n)) * (l.sum() / (n * n));
  const Eigen::VectorXd rk = lk.rowwise().sum();
  const Eigen::VectorXd rl = l.rowwise().sum();
  const double third = rk.dot(rl) / (n * n * n);
  return first + second - 2.0 * third;
}

double r2_from_values(double cross, double self_x, double self_y) {
  const double denom = self_x * self_y;
  require(denom > 0.0 && std::isfinite(denom), ErrorCode::Degenerate,
          "R2: self-dependence terms are not positive");
  return std::clamp(cross / std::sqrt(denom), 0.0, 1.0);
}

HsicValue hsic_v(const SampleSet& sample, std::size_t k) {
  return {hsic_v(input_gram(sample, k), output_gram(sample)), HsicKind::Classical, k};
}

HsicValue hsic_v_sum(const SampleSet& sample, std::size_t k) {
  return {hsic_v_sum(input_gram(sample, k), output_gram(sample)), HsicKind::Classical, k};
}

double r2_hsic(const SampleSet& sample, std::size_t k) {
  const Eigen::MatrixXd lk = input_gram(sample, k);
  const Eigen::MatrixXd l = output_gram(sample);
  return r2_from_values(hsic_v(lk, l), hsic_v(lk, lk), hsic_v(l, l));
}

double asymp_pvalue(const SampleSet& sample, std::size_t k) {
  return wgamma_pvalue(sample, unit_weights(sample.size(), sample.dimension()), k);
}

double perm_pvalue(const SampleSet& sample, std::size_t k, std::size_t permutations,
                   const RngStream& rng, std::size_t threads) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sample.size()));
  return permutation_test(input_gram(sample, k), output_gram(sample), ones, ones, permutations,
                          rng, threads);
}

}  // namespace hsicgsa
