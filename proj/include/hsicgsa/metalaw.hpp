#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsicgsa/distributions.hpp"

namespace hsicgsa {

enum class ReferenceMethod { Mixture, KLBarycenter, WassersteinBarycenter };

const char* to_string(ReferenceMethod method);

struct ReferenceLawSpec {
  ReferenceMethod method = ReferenceMethod::Mixture;
  std::size_t grid_size = 2048;
};

/// Gauss-Legendre nodes used to discretize a continuous parameter prior.
inline constexpr std::size_t kParamNodes = 256;

/// Candidate laws of a prior with their probabilities; parametric priors are
/// discretized on kParamNodes Gauss-Legendre nodes of the parameter range.
std::vector<WeightedLaw> prior_atoms(const DistPrior& prior);

/// Finite priors give an exact mixture; parametric priors give a quantile
/// grid of `grid_size` nodes built from the exact mixture cdf.
UnivariateDist mixture_reference(const DistPrior& prior, std::size_t grid_size = 2048);

/// Half arithmetic mean plus half normalized geometric mean of the candidate
/// densities, materialized as a quantile grid. A prior with one atom
/// returns that law.
UnivariateDist kl_barycenter(const DistPrior& prior, std::size_t grid_size = 2048);

/// Law whose quantile function is the probability-weighted mean of the
/// candidates' quantile functions.
UnivariateDist wasserstein_barycenter(const DistPrior& prior, std::size_t grid_size = 2048);

/// Same, for an arbitrary weighted family (supports need not coincide).
UnivariateDist wasserstein_barycenter(std::span<const WeightedLaw> laws,
                                      std::size_t grid_size = 2048);

UnivariateDist reference_law(const DistPrior& prior, const ReferenceLawSpec& spec);

/// Independent product of per-input reference laws.
ProductDist reference_law(std::span<const DistPrior> priors,
                          std::span<const ReferenceLawSpec> specs);

}  // namespace hsicgsa
