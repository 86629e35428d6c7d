#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hsicgsa/distributions.hpp"

namespace hsicgsa {

/// k(z, z') = exp(-lambda * |z - z'|^2).
class GaussianKernel {
 public:
  explicit GaussianKernel(double lambda);

  double lambda() const { return lambda_; }
  double operator()(double a, double b) const;
  double operator()(std::span<const double> a, std::span<const double> b) const;

 private:
  double lambda_;
};

double gaussian_eval(double lambda, std::span<const double> z, std::span<const double> zp);

/// 1 / population variance of `values`. Throws Degenerate on a constant sample.
double standardized_bandwidth(std::span<const double> values);

/// Gaussian kernel with the standardized bandwidth of `values`.
GaussianKernel standardized_kernel(std::span<const double> values);

Eigen::MatrixXd gram(const GaussianKernel& kernel, std::span<const double> values);

/// Gram matrix over the rows of `points`.
Eigen::MatrixXd gram(const GaussianKernel& kernel, const Eigen::MatrixXd& points);

/// V-statistic mean of |p_i - p_j|^2 over all ordered pairs of rows,
/// including i == j, optionally probability-weighted.
double mean_pairwise_sqdist(const Eigen::MatrixXd& points,
                            std::span<const double> probabilities = {});

// ---------------------------------------------------------------- MMD

/// Number of Gauss-Legendre nodes used for every MMD integral.
inline constexpr std::size_t kMmdNodes = 512;

/// Squared MMD between two laws under `base`, by tensor Gauss-Legendre
/// quadrature on the union of the supports. Values below 1e-14 are set to 0.
double mmd2(const UnivariateDist& p, const UnivariateDist& q, const GaussianKernel& base);

/// Pairwise squared MMD for a whole sample of laws. Each law is embedded
/// once at the quadrature nodes, so the cost is one pdf sweep per law plus
/// a small dense product.
Eigen::MatrixXd mmd2_matrix(std::span<const UnivariateDist> laws, const GaussianKernel& base);

/// Inner products <mu_P, mu_Q> of the kernel mean embeddings; the squared
/// MMD matrix is G_ii + G_jj - 2 G_ij.
Eigen::MatrixXd embedding_gram(std::span<const UnivariateDist> laws, const GaussianKernel& base);

double mmd_kernel_eval(double lambda_k, const UnivariateDist& p, const UnivariateDist& q,
                       const GaussianKernel& base);

enum class LawBandwidthRule {
  /// lambda = 1 / (mean of MMD^2 over all ordered pairs of sampled laws).
  MeanPairwise,
  /// lambda = 1 / s^2 with s^2 the mean squared MMD to the equal-weight
  /// mixture of the sample.
  MixtureSpread,
};

enum class SpreadNormalization {
  PerLaw,   // s^2 = (1/n1) sum_i MMD^2(P_i, Pbar)
  Squared,  // s^2 = (1/n1^2) sum_i MMD^2(P_i, Pbar)
};

struct LawBandwidthOptions {
  LawBandwidthRule rule = LawBandwidthRule::MeanPairwise;
  SpreadNormalization normalization = SpreadNormalization::PerLaw;
};

/// Bandwidth of the MMD Gaussian kernel on laws from an embedding Gram
/// matrix (see embedding_gram). `probabilities` weights the laws (empty
/// means equal weights). Throws Degenerate when all laws coincide.
double mmd_bandwidth(const Eigen::MatrixXd& embedding, const LawBandwidthOptions& options = {},
                     std::span<const double> probabilities = {});

double mmd_bandwidth(std::span<const UnivariateDist> laws, const GaussianKernel& base,
                     const LawBandwidthOptions& options = {});

// -------------------------------------------------------- permutations

/// Bijection on {0, ..., d-1} stored as an index sequence.
using Permutation = std::vector<std::size_t>;

bool is_permutation(const Permutation& sigma);

std::size_t discordant_pairs(const Permutation& sigma, const Permutation& tau);

double mallows_eval(double lambda, const Permutation& sigma, const Permutation& tau);

/// Inverse of the mean number of discordant pairs over all ordered pairs of
/// the sample, optionally probability-weighted. Throws Degenerate when all
/// permutations coincide.
double mallows_bandwidth(std::span<const Permutation> sample,
                         std::span<const double> probabilities = {});

Eigen::MatrixXd mallows_gram(double lambda, std::span<const Permutation> sample);

}  // namespace hsicgsa
