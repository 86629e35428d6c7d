#include "hsicgsa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/numerics.hpp"

namespace hsicgsa {

GaussianKernel::GaussianKernel(double lambda) : lambda_(lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::InvalidParameter,
          "gaussian kernel: lambda must be positive and finite");
}

double GaussianKernel::operator()(double a, double b) const {
  const double d = a - b;
  return std::exp(-lambda_ * d * d);
}

double GaussianKernel::operator()(std::span<const double> a, std::span<const double> b) const {
  require(a.size() == b.size(), ErrorCode::SizeMismatch, "gaussian kernel: length mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::exp(-lambda_ * sq);
}

double gaussian_eval(double lambda, std::span<const double> z, std::span<const double> zp) {
  return GaussianKernel(lambda)(z, zp);
}

double standardized_bandwidth(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::Degenerate, "bandwidth: need at least two values");
  const double var = numerics::population_variance(values);
  require(var > 0.0 && std::isfinite(var), ErrorCode::Degenerate,
          "bandwidth: sample has zero variance");
  return 1.0 / var;
}

GaussianKernel standardized_kernel(std::span<const double> values) {
  return GaussianKernel(standardized_bandwidth(values));
}

Eigen::MatrixXd gram(const GaussianKernel& kernel, std::span<const double> values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    g(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd gram(const GaussianKernel& kernel, const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd g(n, n);
  const double lambda = kernel.lambda();
  for (Eigen::Index j = 0; j < n; ++j) {
    g(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-lambda * (points.row(i) - points.row(j)).squaredNorm());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

namespace {

Eigen::VectorXd probability_vector(std::span<const double> probabilities, Eigen::Index n) {
  if (probabilities.empty()) return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  require(static_cast<Eigen::Index>(probabilities.size()) == n, ErrorCode::SizeMismatch,
          "probabilities: one weight per element required");
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(probabilities.data(), n);
  const double total = p.sum();
  require(total > 0.0 && (p.array() >= 0.0).all(), ErrorCode::InvalidParameter,
          "probabilities: weights must be nonnegative with a positive sum");
  return p / total;
}

}  // namespace

double mean_pairwise_sqdist(const Eigen::MatrixXd& points, std::span<const double> probabilities) {
  // sum_ij p_i p_j |x_i - x_j|^2 = 2 sum_i p_i |x_i - m|^2 with m the weighted mean.
  const Eigen::VectorXd p = probability_vector(probabilities, points.rows());
  const Eigen::RowVectorXd centroid = p.transpose() * points;
  const Eigen::VectorXd sq = (points.rowwise() - centroid).rowwise().squaredNorm();
  return 2.0 * p.dot(sq);
}

namespace {

struct Embedding {
  numerics::QuadratureRule rule;
  Eigen::MatrixXd values;  // nodes x laws, weight * pdf
};

Embedding embed(std::span<const UnivariateDist> laws) {
  require(!laws.empty(), ErrorCode::InvalidParameter, "mmd: no laws given");
  double lo = laws.front().lower();
  double hi = laws.front().upper();
  for (const auto& law : laws) {
    lo = std::min(lo, law.lower());
    hi = std::max(hi, law.upper());
  }
  Embedding e{numerics::gauss_legendre(kMmdNodes, lo, hi), {}};
  const auto m = static_cast<Eigen::Index>(kMmdNodes);
  e.values.resize(m, static_cast<Eigen::Index>(laws.size()));
  for (std::size_t c = 0; c < laws.size(); ++c) {
    for (std::size_t t = 0; t < kMmdNodes; ++t) {
      e.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
          e.rule.weights[t] * laws[c].pdf(e.rule.nodes[t]);
    }
  }
  return e;
}

Eigen::MatrixXd embedding_product(const Embedding& e, const GaussianKernel& base) {
  const Eigen::MatrixXd k = gram(base, std::span<const double>(e.rule.nodes));
  return e.values.transpose() * (k * e.values);
}

double clamp_mmd2(double v) { return v < 1e-14 ? 0.0 : v; }

}  // namespace

Eigen::MatrixXd embedding_gram(std::span<const UnivariateDist> laws, const GaussianKernel& base) {
  return embedding_product(embed(laws), base);
}

Eigen::MatrixXd mmd2_matrix(std::span<const UnivariateDist> laws, const GaussianKernel& base) {
  const Eigen::MatrixXd g = embedding_gram(laws, base);
  const Eigen::Index n = g.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = clamp_mmd2(g(i, i) + g(j, j) - (g(i, j) + g(j, i)));
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double mmd2(const UnivariateDist& p, const UnivariateDist& q, const GaussianKernel& base) {
  require(p.lower() < q.upper() && q.lower() < p.upper(), ErrorCode::SupportViolation,
          "mmd: laws have disjoint supports");
  if (p == q) return 0.0;
  const UnivariateDist laws[] = {p, q};
  const Eigen::MatrixXd g = embedding_gram(laws, base);
  // Cross terms averaged so that swapping p and q gives the same bits.
  return clamp_mmd2(g(0, 0) + g(1, 1) - (g(0, 1) + g(1, 0)));
}

double mmd_kernel_eval(double lambda_k, const UnivariateDist& p, const UnivariateDist& q,
                       const GaussianKernel& base) {
  require(std::isfinite(lambda_k) && lambda_k > 0.0, ErrorCode::InvalidParameter,
          "mmd kernel: lambda must be positive");
  return std::exp(-lambda_k * mmd2(p, q, base));
}

double mmd_bandwidth(const Eigen::MatrixXd& embedding, const LawBandwidthOptions& options,
                     std::span<const double> probabilities) {
  const Eigen::Index n = embedding.rows();
  require(n >= 2, ErrorCode::Degenerate, "law bandwidth: need at least two laws");
  const Eigen::VectorXd p = probability_vector(probabilities, n);
  // Mean squared distance to the mixture: sum_i p_i G_ii - p'Gp.
  const double spread = p.dot(embedding.diagonal()) - p.dot(embedding * p);
  double s2 = 0.0;
  switch (options.rule) {
    case LawBandwidthRule::MeanPairwise:
      s2 = 2.0 * spread;
      break;
    case LawBandwidthRule::MixtureSpread:
      s2 = options.normalization == SpreadNormalization::PerLaw
               ? spread
               : spread / static_cast<double>(n);
      break;
  }
  require(s2 > 1e-14 && std::isfinite(s2), ErrorCode::Degenerate,
          "law bandwidth: all sampled laws are identical");
  return 1.0 / s2;
}

double mmd_bandwidth(std::span<const UnivariateDist> laws, const GaussianKernel& base,
                     const LawBandwidthOptions& options) {
  return mmd_bandwidth(embedding_gram(laws, base), options);
}

bool is_permutation(const Permutation& sigma) {
  std::vector<bool> seen(sigma.size(), false);
  for (std::size_t v : sigma) {
    if (v >= sigma.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::size_t discordant_pairs(const Permutation& sigma, const Permutation& tau) {
  require(sigma.size() == tau.size(), ErrorCode::SizeMismatch,
          "discordant pairs: permutations differ in length");
  std::size_t count = 0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    for (std::size_t s = r + 1; s < sigma.size(); ++s) {
      const bool a = sigma[r] < sigma[s];
      const bool b = tau[r] < tau[s];
      if (a != b) ++count;
    }
  }
  return count;
}

double mallows_eval(double lambda, const Permutation& sigma, const Permutation& tau) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::InvalidParameter,
          "mallows kernel: lambda must be positive");
  return std::exp(-lambda * static_cast<double>(discordant_pairs(sigma, tau)));
}

double mallows_bandwidth(std::span<const Permutation> sample,
                         std::span<const double> probabilities) {
  require(sample.size() >= 2, ErrorCode::Degenerate, "mallows bandwidth: need two permutations");
  const Eigen::VectorXd p = probability_vector(probabilities, static_cast<Eigen::Index>(sample.size()));
  double mean = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      mean += 2.0 * p(static_cast<Eigen::Index>(i)) * p(static_cast<Eigen::Index>(j)) *
              static_cast<double>(discordant_pairs(sample[i], sample[j]));
    }
  }
  require(mean > 0.0, ErrorCode::Degenerate, "mallows bandwidth: all permutations are identical");
  return 1.0 / mean;
}

Eigen::MatrixXd mallows_gram(double lambda, std::span<const Permutation> sample) {
  const auto n = static_cast<Eigen::Index>(sample.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    g(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = mallows_eval(lambda, sample[static_cast<std::size_t>(i)],
                                    sample[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

}  // namespace hsicgsa
