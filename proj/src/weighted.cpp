#include "hsicgsa/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/kernels.hpp"
#include "hsicgsa/numerics.hpp"
#include "hsicgsa/parallel.hpp"

namespace hsicgsa {

namespace {

void check_square(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l, Eigen::Index n) {
  require(lk.rows() == n && lk.cols() == n && l.rows() == n && l.cols() == n,
          ErrorCode::SizeMismatch, "weighted hsic: Gram matrices and weights differ in size");
}

double support_scale(double a, double b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

Eigen::VectorXd WeightSet::others(std::size_t k) const {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(factors.rows());
  for (Eigen::Index c = 0; c < factors.cols(); ++c) {
    if (static_cast<std::size_t>(c) != k) out = out.cwiseProduct(factors.col(c));
  }
  return out;
}

WeightSet make_weights(const ProductDist& target, const ProductDist& sampling,
                       const Eigen::MatrixXd& inputs, const WeightOptions& options) {
  const std::size_t d = target.dimension();
  require(sampling.dimension() == d && static_cast<std::size_t>(inputs.cols()) == d,
          ErrorCode::SizeMismatch, "weights: dimensions of laws and inputs differ");
  const Eigen::Index n = inputs.rows();
  WeightSet ws;
  ws.factors.resize(n, static_cast<Eigen::Index>(d));
  std::vector<bool> capped_row(static_cast<std::size_t>(n), false);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& f = target.marginal(k);
    const auto& g = sampling.marginal(k);
    const double scale = support_scale(g.lower(), g.upper());
    require(std::abs(f.lower() - g.lower()) <= 1e-12 * scale &&
                std::abs(f.upper() - g.upper()) <= 1e-12 * scale,
            ErrorCode::SupportViolation,
            "weights: target and sampling laws of input " + std::to_string(k) +
                " have different supports");
    const auto col = static_cast<Eigen::Index>(k);
    if (f == g) {
      ws.factors.col(col).setOnes();
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = inputs(i, col);
      const double num = f.pdf(x);
      const double den = g.pdf(x);
      double ratio = 0.0;
      if (den > 0.0) {
        ratio = num / den;
      } else {
        require(num == 0.0, ErrorCode::SupportViolation,
                "weights: sampling density vanishes at row " + std::to_string(i) + ", input " +
                    std::to_string(k) + " where the target is positive");
      }
      if (ratio > options.cap) {
        ratio = options.cap;
        ++ws.capped;
        capped_row[static_cast<std::size_t>(i)] = true;
      }
      ws.factors(i, col) = ratio;
    }
  }
  const auto rows_capped =
      static_cast<double>(std::count(capped_row.begin(), capped_row.end(), true));
  require(rows_capped <= options.max_capped_fraction * static_cast<double>(n), ErrorCode::HeavyTail,
          "weights: " + std::to_string(static_cast<long long>(rows_capped)) +
              " points exceed the ratio cap; the sampling law is too light-tailed for the target");
  ws.full = ws.factors.rowwise().prod();
  ws.scaling = options.scaling;
  ws.factor_variance.resize(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    ws.factor_variance(col) = numerics::population_variance(
        std::span<const double>(ws.factors.col(col).data(), static_cast<std::size_t>(n)));
  }
  return ws;
}

WeightSet unit_weights(std::size_t n, std::size_t d) {
  WeightSet ws;
  ws.factors = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ws.full = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  ws.factor_variance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  return ws;
}

double whsic(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l, const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  check_square(lk, l, n);
  const double nn = static_cast<double>(n);
  // H1 L H2 has entries L_ij - (c_i + c_j)/n + s/n^2 with c = L w, s = w'c.
  const Eigen::VectorXd c = l * w;
  const double s = w.dot(c);
  const double shift = s / (nn * nn);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double col = 0.0;
    const double cj = c(j) / nn;
    for (Eigen::Index i = 0; i < n; ++i) {
      col += w(i) * lk(i, j) * (l(i, j) - c(i) / nn - cj + shift);
    }
    total += w(j) * col;
  }
  return total / (nn * nn);
}

double whsic_sum(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l, const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  check_square(lk, l, n);
  const double nn = static_cast<double>(n);
  const Eigen::VectorXd lkw = lk * w;
  const Eigen::VectorXd lw = l * w;
  const double h1 = w.dot(lk.cwiseProduct(l) * w) / (nn * nn);
  const double h2 = w.dot(lkw) / (nn * nn);
  const double h3 = w.dot(lw) / (nn * nn);
  const double h4 = w.cwiseProduct(lkw).dot(lw) / (nn * nn * nn);
  return h1 + h2 * h3 - 2.0 * h4;
}

double whsic_bias_h0(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                     const Eigen::VectorXd& w, const Eigen::VectorXd& wk,
                     const Eigen::VectorXd& wmk) {
  const Eigen::Index n = w.size();
  check_square(lk, l, n);
  const double nn = static_cast<double>(n);
  const Eigen::VectorXd lkwk = lk * wk;
  const Eigen::VectorXd lwmk = l * wmk;
  const double e_w = w.squaredNorm() / nn;
  const double e_wk = wk.squaredNorm() / nn;
  const double e_wmk = wmk.squaredNorm() / nn;
  const double e_x = wk.dot(lkwk) / (nn * nn);
  const double e_y = wmk.dot(lwmk) / (nn * nn);
  const double e_xw = wk.cwiseProduct(wk).dot(lkwk) / (nn * nn);
  const double e_yw = wmk.cwiseProduct(wmk).dot(lwmk) / (nn * nn);
  return (2.0 / nn) * (e_wk - e_xw) * (e_wmk - e_yw) - (1.0 / nn) * (e_w - e_x) * (e_w - e_y) +
         (1.0 / nn) * e_w * (e_w - 1.0);
}

double whsic_var_h0(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                    const Eigen::VectorXd& w, const Eigen::VectorXd& wk,
                    const Eigen::VectorXd& wmk) {
  const Eigen::Index n = w.size();
  check_square(lk, l, n);
  require(n >= 6, ErrorCode::SizeMismatch, "null variance: need at least 6 points");
  const double nn = static_cast<double>(n);
  // 6 E[h | z_i, z_j] with the remaining two arguments integrated out; the
  // second-order projection stays centered only with the (1 - w) terms.
  const Eigen::VectorXd a = lk * wk / nn;
  const Eigen::VectorXd b = l * wmk / nn;
  const double abar = wk.dot(a) / nn;
  const double bbar = wmk.dot(b) / nn;
  const Eigen::VectorXd g =
      (a.cwiseProduct(b) - bbar * a - abar * b).cwiseProduct(w);
  const double ab = abar * bbar;
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double wj = w(j);
    const double aj = a(j);
    const double bj = b(j);
    const double gj = g(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wi = w(i);
      const double kc = lk(i, j) - a(i) - aj + abar;
      const double lc = l(i, j) - b(i) - bj + bbar;
      const double bij =
          wi * wj * kc * lc + g(i) * (1.0 - wj) + gj * (1.0 - wi) + ab * (1.0 - wi * wj);
      total += bij * bij;
    }
  }
  const double factor =
      2.0 * (nn - 4.0) * (nn - 5.0) / (nn * nn * nn * (nn - 1.0) * (nn - 2.0) * (nn - 3.0));
  return factor * total;
}

H0Moments make_h0_moments(double mean, double var, std::size_t n) {
  require(std::isfinite(mean) && mean > 0.0 && std::isfinite(var) && var > 0.0,
          ErrorCode::Degenerate, "gamma test: null moments must be positive");
  const double nn = static_cast<double>(n);
  return {mean, var, mean * mean / var, nn * var / mean};
}

double gamma_pvalue(double statistic, const H0Moments& moments, std::size_t n) {
  return numerics::gamma_survival(static_cast<double>(n) * statistic, moments.gamma_shape,
                                  moments.gamma_scale);
}

GramTest gamma_test(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                    const Eigen::VectorXd& wk, const Eigen::VectorXd& wmk, EpsilonMode mode) {
  const Eigen::VectorXd w = wk.cwiseProduct(wmk);
  const double stat = whsic(lk, l, w);
  const double mean = mode == EpsilonMode::BiasPlugIn ? whsic_bias_h0(lk, l, w, wk, wmk) : stat;
  const H0Moments m = make_h0_moments(mean, whsic_var_h0(lk, l, w, wk, wmk),
                                      static_cast<std::size_t>(w.size()));
  return {stat, m, gamma_pvalue(stat, m, static_cast<std::size_t>(w.size()))};
}

double permutation_test(const Eigen::MatrixXd& lk, const Eigen::MatrixXd& l,
                        const Eigen::VectorXd& wk, const Eigen::VectorXd& wmk,
                        std::size_t permutations, const RngStream& rng, std::size_t threads) {
  require(permutations >= 1, ErrorCode::InvalidParameter, "permutation test: need B >= 1");
  const Eigen::Index n = wk.size();
  const double observed = whsic(lk, l, wk.cwiseProduct(wmk));
  const double nn = static_cast<double>(n);
  std::vector<char> exceed(permutations, 0);
  parallel_for(permutations, threads, [&](std::size_t b) {
    RngStream stream = rng.derive(b);
    const auto perm = stream.permutation(static_cast<std::size_t>(n));
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i) = wk(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])) * wmk(i);
    }
    const Eigen::VectorXd c = l * w;
    const double shift = w.dot(c) / (nn * nn);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto pj = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]);
      const double cj = c(j) / nn;
      double col = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto pi = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
        col += w(i) * lk(pi, pj) * (l(i, j) - c(i) / nn - cj + shift);
      }
      total += w(j) * col;
    }
    exceed[b] = total / (nn * nn) > observed ? 1 : 0;
  });
  std::size_t count = 0;
  for (char e : exceed) count += static_cast<std::size_t>(e);
  return static_cast<double>(count) / static_cast<double>(permutations);
}

double weighted_bandwidth(std::span<const double> values, const Eigen::VectorXd& w) {
  require(static_cast<Eigen::Index>(values.size()) == w.size(), ErrorCode::SizeMismatch,
          "bandwidth: values and weights differ in length");
  if ((w.array() == 1.0).all()) return standardized_bandwidth(values);
  const double sw = w.sum();
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += w(static_cast<Eigen::Index>(i)) * values[i];
  mean /= sw;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += w(static_cast<Eigen::Index>(i)) * d * d;
  }
  var /= sw;
  require(sw > 0.0 && var > 0.0 && std::isfinite(var), ErrorCode::Degenerate,
          "bandwidth: weighted sample has zero variance");
  return 1.0 / var;
}

SampleGrams weighted_grams(const SampleSet& sample, const WeightSet& weights) {
  if (weights.scaling == KernelScaling::Sample) return compute_grams(sample);
  SampleGrams grams;
  for (std::size_t k = 0; k < sample.dimension(); ++k) {
    const auto col = sample.column(k);
    grams.inputs.push_back(gram(GaussianKernel(weighted_bandwidth(col, weights.factor(k))), col));
  }
  const auto y = sample.output_span();
  grams.output = gram(GaussianKernel(weighted_bandwidth(y, weights.full)), y);
  return grams;
}

namespace {

struct GramPair {
  Eigen::MatrixXd lk;
  Eigen::MatrixXd l;
};

GramPair grams_for(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  require(k < sample.dimension(), ErrorCode::InvalidParameter, "weighted hsic: input index out of range");
  require(weights.size() == sample.size(), ErrorCode::SizeMismatch,
          "weighted hsic: weights and sample differ in size");
  if (weights.scaling == KernelScaling::Sample) return {input_gram(sample, k), output_gram(sample)};
  const auto col = sample.column(k);
  const auto y = sample.output_span();
  return {gram(GaussianKernel(weighted_bandwidth(col, weights.factor(k))), col),
          gram(GaussianKernel(weighted_bandwidth(y, weights.full)), y)};
}

}  // namespace

HsicValue whsic(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  const auto g = grams_for(sample, weights, k);
  return {whsic(g.lk, g.l, weights.full), HsicKind::Weighted, k};
}

HsicValue whsic_sum(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  const auto g = grams_for(sample, weights, k);
  return {whsic_sum(g.lk, g.l, weights.full), HsicKind::Weighted, k};
}

double wr2_hsic(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  const auto g = grams_for(sample, weights, k);
  const auto& w = weights.full;
  return r2_from_values(whsic(g.lk, g.l, w), whsic(g.lk, g.lk, w), whsic(g.l, g.l, w));
}

double whsic_bias_h0(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  const auto g = grams_for(sample, weights, k);
  return whsic_bias_h0(g.lk, g.l, weights.full, weights.factor(k), weights.others(k));
}

double whsic_var_h0(const SampleSet& sample, const WeightSet& weights, std::size_t k) {
  const auto g = grams_for(sample, weights, k);
  return whsic_var_h0(g.lk, g.l, weights.full, weights.factor(k), weights.others(k));
}

H0Moments whsic_h0_moments(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                           EpsilonMode mode) {
  const auto g = grams_for(sample, weights, k);
  return gamma_test(g.lk, g.l, weights.factor(k), weights.others(k), mode).moments;
}

double wgamma_pvalue(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                     EpsilonMode mode) {
  const auto g = grams_for(sample, weights, k);
  return gamma_test(g.lk, g.l, weights.factor(k), weights.others(k), mode).pvalue;
}

// The permutation moves omega_k with X_k, so the kernel bandwidths stay those
// of the observed pairing.
double wperm_pvalue(const SampleSet& sample, const WeightSet& weights, std::size_t k,
                    std::size_t permutations, const RngStream& rng, std::size_t threads) {
  const auto g = grams_for(sample, weights, k);
  return permutation_test(g.lk, g.l, weights.factor(k), weights.others(k), permutations, rng,
                          threads);
}

namespace {

// (1/n^2) w'(A o B)w + (1/n^4)(w'Aw)(w'Bw) - (2/n^3) sum_i w_i (Aw)_i (Bw)_i per column.
Eigen::RowVectorXd combine(const Eigen::RowVectorXd& quad_ab, const Eigen::RowVectorXd& quad_a,
                           const Eigen::RowVectorXd& quad_b, const Eigen::RowVectorXd& cubic,
                           double n) {
  return (quad_ab / (n * n) + quad_a.cwiseProduct(quad_b) / (n * n * n * n) -
          2.0 * cubic / (n * n * n));
}

}  // namespace

WeightedR2Batch::WeightedR2Batch(std::vector<Eigen::MatrixXd> input_grams,
                                 Eigen::MatrixXd output_gram)
    : lk_(std::move(input_grams)), l_(std::move(output_gram)) {
  require(!lk_.empty(), ErrorCode::InvalidParameter, "R2 batch: no inputs");
  for (const auto& lk : lk_) check_square(lk, l_, l_.rows());
  l_l_ = l_.cwiseProduct(l_);
  for (const auto& lk : lk_) {
    lk_l_.push_back(lk.cwiseProduct(l_));
    lk_lk_.push_back(lk.cwiseProduct(lk));
  }
}

Eigen::MatrixXd WeightedR2Batch::cross(const Eigen::MatrixXd& weights) const {
  require(weights.rows() == l_.rows(), ErrorCode::SizeMismatch, "R2 batch: weight length");
  const double n = static_cast<double>(weights.rows());
  const Eigen::MatrixXd lw = l_ * weights;
  const Eigen::RowVectorXd quad_l = weights.cwiseProduct(lw).colwise().sum();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(lk_.size()), weights.cols());
  for (std::size_t k = 0; k < lk_.size(); ++k) {
    const Eigen::MatrixXd lkw = lk_[k] * weights;
    const Eigen::RowVectorXd quad_k = weights.cwiseProduct(lkw).colwise().sum();
    const Eigen::RowVectorXd quad_kl = weights.cwiseProduct(lk_l_[k] * weights).colwise().sum();
    const Eigen::RowVectorXd cubic = weights.cwiseProduct(lkw).cwiseProduct(lw).colwise().sum();
    out.row(static_cast<Eigen::Index>(k)) = combine(quad_kl, quad_k, quad_l, cubic, n);
  }
  return out;
}

Eigen::MatrixXd WeightedR2Batch::r2(const Eigen::MatrixXd& weights) const {
  require(weights.rows() == l_.rows(), ErrorCode::SizeMismatch, "R2 batch: weight length");
  const double n = static_cast<double>(weights.rows());
  const Eigen::MatrixXd lw = l_ * weights;
  const Eigen::RowVectorXd quad_l = weights.cwiseProduct(lw).colwise().sum();
  const Eigen::RowVectorXd self_y =
      combine(weights.cwiseProduct(l_l_ * weights).colwise().sum(), quad_l, quad_l,
              weights.cwiseProduct(lw).cwiseProduct(lw).colwise().sum(), n);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(lk_.size()), weights.cols());
  for (std::size_t k = 0; k < lk_.size(); ++k) {
    const Eigen::MatrixXd lkw = lk_[k] * weights;
    const Eigen::RowVectorXd quad_k = weights.cwiseProduct(lkw).colwise().sum();
    const Eigen::RowVectorXd cross =
        combine(weights.cwiseProduct(lk_l_[k] * weights).colwise().sum(), quad_k, quad_l,
                weights.cwiseProduct(lkw).cwiseProduct(lw).colwise().sum(), n);
    const Eigen::RowVectorXd self_x =
        combine(weights.cwiseProduct(lk_lk_[k] * weights).colwise().sum(), quad_k, quad_k,
                weights.cwiseProduct(lkw).cwiseProduct(lkw).colwise().sum(), n);
    for (Eigen::Index m = 0; m < weights.cols(); ++m) {
      out(static_cast<Eigen::Index>(k), m) = r2_from_values(cross(m), self_x(m), self_y(m));
    }
  }
  return out;
}

}  // namespace hsicgsa
