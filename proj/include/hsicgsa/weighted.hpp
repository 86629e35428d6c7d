#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hsicgsa/distributions.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/rng.hpp"

namespace hsicgsa {

/// Importance ratios f / f~ of a target law against the sampling law,
/// kept per input so that omega_k and omega_{-k} are available.
/// Source of the standardized-kernel bandwidths used with weights.
enum class KernelScaling {
  Target,  // variances under the target law, estimated with the weights
  Sample,  // plain variances of the realized sample
};

struct WeightSet {
  Eigen::MatrixXd factors;  // n x d, omega_k at each point
  Eigen::VectorXd full;     // product over k
  std::size_t capped = 0;   // ratios clipped at the cap
  Eigen::VectorXd factor_variance;  // empirical Var(omega_k), per input
  KernelScaling scaling = KernelScaling::Sample;

  std::size_t size() const { return static_cast<std::size_t>(full.size()); }
  Eigen::VectorXd factor(std::size_t k) const { return factors.col(static_cast<Eigen::Index>(k)); }
  /// Product of all factors except the k-th.
  Eigen::VectorXd others(std::size_t k) const;
};

struct WeightOptions {
  double cap = 1e8;
  double max_capped_fraction = 1e-3;
  KernelScaling scaling = KernelScaling::Sample;
};

/// Throws SupportViolation when a point has f~ = 0 but f > 0, or when the
/// supports of the two laws differ; HeavyTail when more than
/// `max_capped_fraction` of the ratios hit the cap.
WeightSet make_weights(const ProductDist& target, const ProductDist& sampling,
                       const Eigen::MatrixXd& inputs, const WeightOptions& options = {});

WeightSet unit_weights(std::size_t n, std::size_t d);

/// Inverse weighted population variance; equals standardized_bandwidth for
/// unit weights.
double weighted_bandwidth(std::span<const double> values, const Eigen::VectorXd& w);

/// Gram matrices with bandwidths chosen by weights.scaling: input k uses
/// omega_k, the output uses the full weights.
SampleGrams weighted_grams(const SampleSet& sample, const WeightSet& weights);

// Gram-level estimators. `w` is the full weight vector, `wk` the factor of
// the input whose Gram matrix is `lk`, `wmk` the product of the others.

/// (1/n^2) Tr(W Lk W H1 L H2).
double whsic(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l, const Eigen::VectorXd& w);

/// Four weighted V-statistics H1 + H2 * H3 - 2 H4.
double whsic_sum(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l, const Eigen::VectorXd& w);

/// Plug-in null bias (also the null mean, the true value being 0).
double whsic_bias_h0(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                     const Eigen::VectorXd& w, const Eigen::VectorXd& wk,
                     const Eigen::VectorXd& wmk);

/// Null variance estimate from the B matrices; n >= 6.
double whsic_var_h0(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                    const Eigen::VectorXd& w, const Eigen::VectorXd& wk,
                    const Eigen::VectorXd& wmk);

struct H0Moments {
  double mean_h0;
  double var_h0;
  double gamma_shape;
  double gamma_scale;
};

/// How the Gamma mean is taken.
enum class EpsilonMode {
  BiasPlugIn,  // null bias plug-in
  Observed,    // the observed statistic itself
};

/// Throws Degenerate unless both moments are positive and finite.
H0Moments make_h0_moments(double mean, double var, std::size_t n);

double gamma_pvalue(double statistic, const H0Moments& moments, std::size_t n);

// Sample-level operations.

HsicValue whsic(const SampleSet& sample, const WeightSet& weights, std::size_t k);
HsicValue whsic_sum(const SampleSet& sample, const WeightSet& weights, std::size_t k);
double wr2_hsic(const SampleSet& sample, const WeightSet& weights, std::size_t k);
double whsic_bias_h0(const SampleSet& sample, const WeightSet& weights, std::size_t k);
double whsic_var_h0(const SampleSet& sample, const WeightSet& weights, std::size_t k);
H0Moments whsic_h0_moments(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                           EpsilonMode mode = EpsilonMode::BiasPlugIn);
double wgamma_pvalue(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                     EpsilonMode mode = EpsilonMode::BiasPlugIn);

/// Permutation test that moves (X_k, omega_k) together while (Y, omega_{-k})
/// stay in place. Replicate b uses rng.derive(b).
double wperm_pvalue(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                    std::size_t permutations, const RngStream& rng, std::size_t threads = 1);

// Gram-level building blocks shared with the classical tests and gsa2.

struct GramTest {
  double statistic;
  H0Moments moments;
  double pvalue;
};

GramTest gamma_test(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                    const Eigen::VectorXd& wk, const Eigen::VectorXd& wmk,
                    EpsilonMode mode = EpsilonMode::BiasPlugIn);

double permutation_test(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                        const Eigen::VectorXd& wk, const Eigen::VectorXd& wmk,
                        std::size_t permutations, const RngStream& rng, std::size_t threads = 1);

/// Weighted R^2 indices of every input for many weight vectors at once,
/// from one shared sample. Uses the three-term form so each batch costs a
/// handful of matrix products.
class WeightedR2Batch {
 public:
  WeightedR2Batch(std::vector<Eigen::MatrixXd> input_grams, Eigen::MatrixXd output_gram);

  std::size_t dimension() const { return lk_.size(); }

  /// Columns of `weights` are full weight vectors; result is d x m.
  Eigen::MatrixXd r2(const Eigen::MatrixXd& weights) const;

  /// Cross terms HSIC(X_k, Y) only, d x m.
  Eigen::MatrixXd cross(const Eigen::MatrixXd& weights) const;

 private:
  std::vector<Eigen::MatrixXd> lk_;
  std::vector<Eigen::MatrixXd> lk_l_;   // Lk o L
  std::vector<Eigen::MatrixXd> lk_lk_;  // Lk o Lk
  Eigen::MatrixXd l_;
  Eigen::MatrixXd l_l_;
};

}  // namespace hsicgsa
