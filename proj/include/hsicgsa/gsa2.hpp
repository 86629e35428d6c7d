#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hsicgsa/distributions.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/kernels.hpp"
#include "hsicgsa/metalaw.hpp"
#include "hsicgsa/rng.hpp"
#include "hsicgsa/weighted.hpp"

namespace hsicgsa {

enum class QoiKind { R2Vector, Ranking, AsympPvalVector, PermPvalVector };

const char* to_string(QoiKind kind);

struct QoiSpec {
  QoiKind kind = QoiKind::R2Vector;
  std::size_t permutations = 200;  // PermPvalVector only
  EpsilonMode epsilon = EpsilonMode::BiasPlugIn;
};

/// Summary of one first-level analysis: a vector (R^2 indices or p-values)
/// or a ranking where ranking[r] is the input placed r-th.
class Gsa1Result {
 public:
  static Gsa1Result vector(QoiKind kind, std::vector<double> values);
  static Gsa1Result ranking(Permutation order);

  QoiKind kind() const { return kind_; }
  bool is_ranking() const { return std::holds_alternative<Permutation>(payload_); }
  const std::vector<double>& values() const;
  const Permutation& order() const;

 private:
  Gsa1Result(QoiKind kind, std::variant<std::vector<double>, Permutation> payload)
      : kind_(kind), payload_(std::move(payload)) {}
  QoiKind kind_;
  std::variant<std::vector<double>, Permutation> payload_;
};

/// Inputs sorted by descending value, ties by ascending index.
Permutation rank_descending(std::span<const double> values);

/// First-level analyses of one shared sample against many target laws. With
/// sample scaling the Gram matrices are built once; with target scaling the
/// bandwidths follow each target law.
class Gsa1Engine {
 public:
  Gsa1Engine(const SampleSet& sample, QoiSpec spec, WeightOptions weight_options = {});

  const SampleSet& sample() const { return sample_; }
  const QoiSpec& spec() const { return spec_; }

  Gsa1Result evaluate(const ProductDist& target, const RngStream& rng) const;

  /// Target l uses rng.derive(l).
  std::vector<Gsa1Result> evaluate(std::span<const ProductDist> targets, const RngStream& rng,
                                   std::size_t threads = 1) const;

  /// Weighted R^2 vectors, d x m.
  Eigen::MatrixXd r2(std::span<const ProductDist> targets) const;

 private:
  Gsa1Result from_values(std::vector<double> values) const;
  std::vector<double> values(const std::vector<const Eigen::MatrixXd*>& lk,
                             const Eigen::MatrixXd& l, const WeightSet& weights,
                             const RngStream& rng) const;
  std::vector<Gsa1Result> run(std::span<const ProductDist> targets,
                              const std::vector<RngStream>& streams, std::size_t threads) const;

  SampleSet sample_;
  QoiSpec spec_;
  WeightOptions weight_options_;
  SampleGrams grams_;  // sample scaling only
};

Gsa1Result gsa1_qoi(const SampleSet& sample, const ProductDist& target, const QoiSpec& spec,
                    const RngStream& rng);

/// Bandwidth of the Gaussian kernel on vector-valued results.
enum class QoiBandwidthRule {
  MeanPairwise,        // 1 / mean squared distance between result vectors
  CoordinateVariance,  // 1 / mean of the per-coordinate variances
};

struct SecondLevelOptions {
  LawBandwidthOptions law_bandwidth;
  QoiBandwidthRule qoi_bandwidth = QoiBandwidthRule::MeanPairwise;
};

struct Gsa2Result {
  std::vector<double> hsic2;
  std::vector<double> r2;
  std::vector<double> law_bandwidths;
  double qoi_bandwidth = 0.0;
  std::vector<double> base_bandwidths;  // lambda of the kernel inside MMD
  // Audit trail.
  std::vector<ProductDist> laws;
  std::vector<double> probabilities;
  std::vector<Gsa1Result> qois;
  std::size_t model_evaluations = 0;

  /// Inputs ordered by decreasing second-level R^2.
  Permutation ranking() const { return rank_descending(r2); }
};

/// Second-level indices from paired (law, result) samples. `probabilities`
/// weights the pairs (empty means equal weights, as for drawn laws).
Gsa2Result hsic2_estimate(std::span<const ProductDist> laws, std::span<const Gsa1Result> qois,
                          std::span<const GaussianKernel> base_kernels,
                          std::span<const double> probabilities = {},
                          const SecondLevelOptions& options = {});

using Model = std::function<double(std::span<const double>)>;

/// Evaluates the model on every row; throws ModelFailure naming the row on
/// an exception or a non-finite result.
Eigen::VectorXd evaluate_model(const Model& model, const Eigen::MatrixXd& inputs);

struct LawDesign {
  std::vector<ProductDist> laws;
  std::vector<double> probabilities;
};

/// Either n1 independent draws from the priors (law l from rng.derive(l)),
/// or, when `exhaustive`, every combination of the finite priors with its
/// probability.
LawDesign draw_laws(std::span<const DistPrior> priors, std::size_t n1, bool exhaustive,
                    const RngStream& rng);

struct SingleLoopOptions {
  std::vector<ReferenceLawSpec> references{ReferenceLawSpec{}};  // one, or one per input
  QoiSpec qoi;
  bool exhaustive = false;
  SecondLevelOptions second_level;
  WeightOptions weights;
  std::size_t threads = 1;
};

/// Shared sample drawn from the reference law (stream rng.derive(0)).
SampleSet reference_sample(std::span<const DistPrior> priors, const SingleLoopOptions& options,
                           std::size_t n2, const Model& model, const RngStream& rng);

/// Steps 2 and 3 on an existing reference sample; laws from rng.derive(1).
Gsa2Result single_loop_on_sample(const SampleSet& sample, std::span<const DistPrior> priors,
                                 std::size_t n1, const SingleLoopOptions& options,
                                 const RngStream& rng);

/// Same with a fixed law design (used by the bootstrap).
Gsa2Result single_loop_on_sample(const SampleSet& sample, const LawDesign& design,
                                 const SingleLoopOptions& options, const RngStream& rng);

Gsa2Result single_loop(std::span<const DistPrior> priors, std::size_t n1, std::size_t n2,
                       const Model& model, const SingleLoopOptions& options,
                       const RngStream& rng);

struct DoubleLoopOptions {
  QoiSpec qoi;
  bool exhaustive = false;
  SecondLevelOptions second_level;
  std::size_t threads = 1;
};

/// Fresh n2-sample under every law; n1 * n2 model calls.
Gsa2Result double_loop(std::span<const DistPrior> priors, std::size_t n1, std::size_t n2,
                       const Model& model, const DoubleLoopOptions& options,
                       const RngStream& rng);

struct BootstrapRow {
  std::size_t subsample_size;
  std::vector<std::vector<double>> r2;  // reps x d
  std::vector<char> matches;            // per rep: ranking equals the full-sample one
  std::vector<double> spread;           // standard deviation per input
  double ranking_match_rate;
};

struct BootstrapOptions {
  /// Use rows 0..m-1 instead of resampling (degenerate check).
  bool force_identity = false;
};

std::vector<BootstrapRow> bootstrap_robustness(const SampleSet& sample, const LawDesign& design,
                                               std::span<const std::size_t> subsample_sizes,
                                               std::size_t reps,
                                               const SingleLoopOptions& options,
                                               const RngStream& rng,
                                               const BootstrapOptions& boot = {});

}  // namespace hsicgsa
