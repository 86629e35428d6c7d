#include "hsicgsa/gsa2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/parallel.hpp"

namespace hsicgsa {

const char* to_string(QoiKind kind) {
  switch (kind) {
    case QoiKind::R2Vector: return "r2";
    case QoiKind::Ranking: return "ranking";
    case QoiKind::AsympPvalVector: return "asymp_pval";
    case QoiKind::PermPvalVector: return "perm_pval";
  }
  return "unknown";
}

Gsa1Result Gsa1Result::vector(QoiKind kind, std::vector<double> values) {
  require(kind != QoiKind::Ranking, ErrorCode::InvalidParameter,
          "gsa1 result: rankings carry a permutation payload");
  return {kind, std::move(values)};
}

Gsa1Result Gsa1Result::ranking(Permutation order) {
  require(is_permutation(order), ErrorCode::InvalidParameter, "gsa1 result: invalid ranking");
  return {QoiKind::Ranking, std::move(order)};
}

const std::vector<double>& Gsa1Result::values() const {
  require(!is_ranking(), ErrorCode::Unsupported, "gsa1 result: ranking has no value vector");
  return std::get<std::vector<double>>(payload_);
}

const Permutation& Gsa1Result::order() const {
  require(is_ranking(), ErrorCode::Unsupported, "gsa1 result: not a ranking");
  return std::get<Permutation>(payload_);
}

Permutation rank_descending(std::span<const double> values) {
  Permutation order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

Gsa1Engine::Gsa1Engine(const SampleSet& sample, QoiSpec spec, WeightOptions weight_options)
    : sample_(sample), spec_(spec), weight_options_(weight_options) {
  require(spec_.kind != QoiKind::PermPvalVector || spec_.permutations >= 1,
          ErrorCode::InvalidParameter, "qoi: permutation count must be >= 1");
  if (weight_options_.scaling == KernelScaling::Sample) grams_ = compute_grams(sample_);
}

Gsa1Result Gsa1Engine::from_values(std::vector<double> values) const {
  if (spec_.kind == QoiKind::Ranking) return Gsa1Result::ranking(rank_descending(values));
  return Gsa1Result::vector(spec_.kind, std::move(values));
}

std::vector<double> Gsa1Engine::values(const std::vector<const Eigen::MatrixXd*>& lk,
                                       const Eigen::MatrixXd& l, const WeightSet& weights,
                                       const RngStream& rng) const {
  std::vector<double> out(sample_.dimension());
  if (spec_.kind == QoiKind::R2Vector || spec_.kind == QoiKind::Ranking) {
    const auto& w = weights.full;
    const double self_y = whsic(l, l, w);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = r2_from_values(whsic(*lk[k], l, w), whsic(*lk[k], *lk[k], w), self_y);
    }
    return out;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::VectorXd wk = weights.factor(k);
    const Eigen::VectorXd wmk = weights.others(k);
    if (spec_.kind == QoiKind::AsympPvalVector) {
      out[k] = gamma_test(*lk[k], l, wk, wmk, spec_.epsilon).pvalue;
    } else {
      out[k] = permutation_test(*lk[k], l, wk, wmk, spec_.permutations, rng.derive(k));
    }
  }
  return out;
}

Gsa1Result Gsa1Engine::evaluate(const ProductDist& target, const RngStream& rng) const {
  const std::vector<RngStream> streams{rng};
  return std::move(run(std::span<const ProductDist>(&target, 1), streams, 1).front());
}

std::vector<Gsa1Result> Gsa1Engine::evaluate(std::span<const ProductDist> targets,
                                             const RngStream& rng, std::size_t threads) const {
  std::vector<RngStream> streams;
  for (std::size_t t = 0; t < targets.size(); ++t) streams.push_back(rng.derive(t));
  return run(targets, streams, threads);
}

std::vector<Gsa1Result> Gsa1Engine::run(std::span<const ProductDist> targets,
                                        const std::vector<RngStream>& streams,
                                        std::size_t threads) const {
  const std::size_t m = targets.size();
  const std::size_t d = sample_.dimension();
  std::vector<WeightSet> weights(m);
  parallel_for(m, threads, [&](std::size_t t) {
    weights[t] = make_weights(targets[t], sample_.generating_law(), sample_.inputs(), weight_options_);
  });
  std::vector<std::vector<double>> vals(m);
  if (weight_options_.scaling == KernelScaling::Sample) {
    std::vector<const Eigen::MatrixXd*> lk;
    for (const auto& g : grams_.inputs) lk.push_back(&g);
    if (spec_.kind == QoiKind::R2Vector || spec_.kind == QoiKind::Ranking) {
      const Eigen::MatrixXd r = r2(targets);
      for (std::size_t t = 0; t < m; ++t) {
        const Eigen::VectorXd col = r.col(static_cast<Eigen::Index>(t));
        vals[t].assign(col.data(), col.data() + col.size());
      }
    } else {
      parallel_for(m, threads, [&](std::size_t t) {
        vals[t] = values(lk, grams_.output, weights[t], streams[t]);
      });
    }
  } else {
    // Input Grams depend on one marginal only and repeat across targets
    // drawn from finite priors; they are shared when few are distinct.
    std::vector<std::vector<double>> lambda(d, std::vector<double>(m));
    std::vector<std::vector<double>> distinct(d);
    std::size_t total = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const auto col = sample_.column(k);
      for (std::size_t t = 0; t < m; ++t) lambda[k][t] = weighted_bandwidth(col, weights[t].factor(k));
      distinct[k] = lambda[k];
      std::sort(distinct[k].begin(), distinct[k].end());
      distinct[k].erase(std::unique(distinct[k].begin(), distinct[k].end()), distinct[k].end());
      total += distinct[k].size();
    }
    const bool share = total <= 8 * d;
    std::vector<std::vector<Eigen::MatrixXd>> cache(d);
    if (share) {
      std::vector<std::pair<std::size_t, std::size_t>> jobs;
      for (std::size_t k = 0; k < d; ++k) {
        cache[k].resize(distinct[k].size());
        for (std::size_t j = 0; j < distinct[k].size(); ++j) jobs.emplace_back(k, j);
      }
      parallel_for(jobs.size(), threads, [&](std::size_t i) {
        const auto [k, j] = jobs[i];
        cache[k][j] = gram(GaussianKernel(distinct[k][j]), sample_.column(k));
      });
    }
    parallel_for(m, threads, [&](std::size_t t) {
      std::vector<Eigen::MatrixXd> own;
      std::vector<const Eigen::MatrixXd*> lk(d);
      if (!share) own.reserve(d);
      for (std::size_t k = 0; k < d; ++k) {
        if (share) {
          const auto j = static_cast<std::size_t>(
              std::lower_bound(distinct[k].begin(), distinct[k].end(), lambda[k][t]) -
              distinct[k].begin());
          lk[k] = &cache[k][j];
        } else {
          own.push_back(gram(GaussianKernel(lambda[k][t]), sample_.column(k)));
          lk[k] = &own.back();
        }
      }
      const auto y = sample_.output_span();
      const Eigen::MatrixXd l = gram(GaussianKernel(weighted_bandwidth(y, weights[t].full)), y);
      vals[t] = values(lk, l, weights[t], streams[t]);
    });
  }
  std::vector<Gsa1Result> out;
  out.reserve(m);
  for (auto& v : vals) out.push_back(from_values(std::move(v)));
  return out;
}

Eigen::MatrixXd Gsa1Engine::r2(std::span<const ProductDist> targets) const {
  if (weight_options_.scaling == KernelScaling::Target) {
    Gsa1Engine plain(*this);
    plain.spec_.kind = QoiKind::R2Vector;
    const auto res = plain.evaluate(targets, RngStream(0));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(sample_.dimension()),
                        static_cast<Eigen::Index>(targets.size()));
    for (std::size_t t = 0; t < res.size(); ++t) {
      const auto& v = res[t].values();
      out.col(static_cast<Eigen::Index>(t)) = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
    return out;
  }
  Eigen::MatrixXd w(static_cast<Eigen::Index>(sample_.size()),
                    static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    w.col(static_cast<Eigen::Index>(t)) =
        make_weights(targets[t], sample_.generating_law(), sample_.inputs(), weight_options_).full;
  }
  const WeightedR2Batch batch(grams_.inputs, grams_.output);
  return batch.r2(w);
}

Gsa1Result gsa1_qoi(const SampleSet& sample, const ProductDist& target, const QoiSpec& spec,
                    const RngStream& rng) {
  return Gsa1Engine(sample, spec).evaluate(target, rng);
}

namespace {

Eigen::MatrixXd qoi_gram(std::span<const Gsa1Result> qois, std::span<const double> probabilities,
                         QoiBandwidthRule rule, double& lambda) {
  if (qois.front().is_ranking()) {
    std::vector<Permutation> perms;
    for (const auto& q : qois) perms.push_back(q.order());
    lambda = mallows_bandwidth(perms, probabilities);
    return mallows_gram(lambda, perms);
  }
  const auto dim = static_cast<Eigen::Index>(qois.front().values().size());
  Eigen::MatrixXd points(static_cast<Eigen::Index>(qois.size()), dim);
  for (std::size_t i = 0; i < qois.size(); ++i) {
    const auto& v = qois[i].values();
    require(static_cast<Eigen::Index>(v.size()) == dim, ErrorCode::SizeMismatch,
            "hsic2: result vectors differ in length");
    points.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
  }
  double spread = mean_pairwise_sqdist(points, probabilities);
  // Mean squared distance is 2 * dim times the mean coordinate variance.
  if (rule == QoiBandwidthRule::CoordinateVariance) spread /= 2.0 * static_cast<double>(dim);
  require(spread > 0.0 && std::isfinite(spread), ErrorCode::Degenerate,
          "hsic2: all first-level results are identical");
  lambda = 1.0 / spread;
  return gram(GaussianKernel(lambda), points);
}

}  // namespace

Gsa2Result hsic2_estimate(std::span<const ProductDist> laws, std::span<const Gsa1Result> qois,
                          std::span<const GaussianKernel> base_kernels,
                          std::span<const double> probabilities,
                          const SecondLevelOptions& options) {
  require(laws.size() >= 2, ErrorCode::Degenerate, "hsic2: need at least two laws");
  require(laws.size() == qois.size(), ErrorCode::SizeMismatch,
          "hsic2: laws and results differ in number");
  require(probabilities.empty() || probabilities.size() == laws.size(), ErrorCode::SizeMismatch,
          "hsic2: one probability per law required");
  const std::size_t d = laws.front().dimension();
  require(base_kernels.size() == d, ErrorCode::SizeMismatch, "hsic2: one base kernel per input");
  for (const auto& q : qois) {
    require(q.kind() == qois.front().kind(), ErrorCode::InvalidParameter,
            "hsic2: all results must have the same kind");
  }
  const auto n1 = static_cast<Eigen::Index>(laws.size());
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n1);
  if (!probabilities.empty()) {
    w = Eigen::Map<const Eigen::VectorXd>(probabilities.data(), n1);
    w *= static_cast<double>(n1) / w.sum();
  }

  Gsa2Result result;
  const Eigen::MatrixXd lr = qoi_gram(qois, probabilities, options.qoi_bandwidth, result.qoi_bandwidth);
  const double self_r = whsic(lr, lr, w);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<UnivariateDist> marginals;
    marginals.reserve(laws.size());
    for (const auto& law : laws) marginals.push_back(law.marginal(k));
    const Eigen::MatrixXd g = embedding_gram(marginals, base_kernels[k]);
    const double lambda = mmd_bandwidth(g, options.law_bandwidth, probabilities);
    Eigen::MatrixXd ld(n1, n1);
    for (Eigen::Index j = 0; j < n1; ++j) {
      ld(j, j) = 1.0;
      for (Eigen::Index i = j + 1; i < n1; ++i) {
        double m2 = g(i, i) + g(j, j) - 2.0 * g(i, j);
        if (m2 < 1e-14) m2 = 0.0;
        ld(i, j) = ld(j, i) = std::exp(-lambda * m2);
      }
    }
    const double cross = whsic(ld, lr, w);
    result.hsic2.push_back(cross);
    result.r2.push_back(r2_from_values(cross, whsic(ld, ld, w), self_r));
    result.law_bandwidths.push_back(lambda);
    result.base_bandwidths.push_back(base_kernels[k].lambda());
  }
  for (const auto& law : laws) result.laws.push_back(law);
  result.qois.assign(qois.begin(), qois.end());
  if (probabilities.empty()) {
    result.probabilities.assign(laws.size(), 1.0 / static_cast<double>(laws.size()));
  } else {
    for (Eigen::Index i = 0; i < n1; ++i) {
      result.probabilities.push_back(w(i) / static_cast<double>(n1));
    }
  }
  return result;
}

Eigen::VectorXd evaluate_model(const Model& model, const Eigen::MatrixXd& inputs) {
  Eigen::VectorXd y(inputs.rows());
  std::vector<double> x(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) x[static_cast<std::size_t>(k)] = inputs(i, k);
    auto describe = [&] {
      std::ostringstream os;
      os.precision(17);
      os << "model evaluation failed at row " << i << " (x =";
      for (double v : x) os << ' ' << v;
      os << ")";
      return os.str();
    };
    double v = 0.0;
    try {
      v = model(x);
    } catch (const std::exception& e) {
      fail(ErrorCode::ModelFailure, describe() + ": " + e.what());
    }
    require(std::isfinite(v), ErrorCode::ModelFailure, describe() + ": non-finite output");
    y(i) = v;
  }
  return y;
}

LawDesign draw_laws(std::span<const DistPrior> priors, std::size_t n1, bool exhaustive,
                    const RngStream& rng) {
  LawDesign design;
  if (exhaustive) {
    for (auto& wp : enumerate_prior(priors)) {
      design.laws.push_back(std::move(wp.law));
      design.probabilities.push_back(wp.probability);
    }
    return design;
  }
  require(n1 >= 2, ErrorCode::InvalidParameter, "law sample: n1 must be >= 2");
  for (std::size_t l = 0; l < n1; ++l) {
    RngStream stream = rng.derive(l);
    std::vector<UnivariateDist> marginals;
    for (const auto& prior : priors) marginals.push_back(draw_law(prior, stream));
    design.laws.emplace_back(std::move(marginals));
  }
  design.probabilities.assign(n1, 1.0 / static_cast<double>(n1));
  return design;
}

SampleSet reference_sample(std::span<const DistPrior> priors, const SingleLoopOptions& options,
                           std::size_t n2, const Model& model, const RngStream& rng) {
  require(n2 >= 6, ErrorCode::InvalidParameter, "single loop: n2 must be >= 6");
  ProductDist ref = reference_law(priors, options.references);
  RngStream stream = rng.derive(0);
  Eigen::MatrixXd x = ref.sample(n2, stream);
  Eigen::VectorXd y = evaluate_model(model, x);
  return {std::move(x), std::move(y), std::move(ref)};
}

Gsa2Result single_loop_on_sample(const SampleSet& sample, const LawDesign& design,
                                 const SingleLoopOptions& options, const RngStream& rng) {
  const Gsa1Engine engine(sample, options.qoi, options.weights);
  const auto qois = engine.evaluate(design.laws, rng.derive(2), options.threads);
  std::vector<GaussianKernel> base;
  for (std::size_t k = 0; k < sample.dimension(); ++k) {
    base.push_back(standardized_kernel(sample.column(k)));
  }
  return hsic2_estimate(design.laws, qois, base, design.probabilities, options.second_level);
}

Gsa2Result single_loop_on_sample(const SampleSet& sample, std::span<const DistPrior> priors,
                                 std::size_t n1, const SingleLoopOptions& options,
                                 const RngStream& rng) {
  require(priors.size() == sample.dimension(), ErrorCode::SizeMismatch,
          "single loop: one prior per input required");
  const LawDesign design = draw_laws(priors, n1, options.exhaustive, rng.derive(1));
  return single_loop_on_sample(sample, design, options, rng);
}

Gsa2Result single_loop(std::span<const DistPrior> priors, std::size_t n1, std::size_t n2,
                       const Model& model, const SingleLoopOptions& options,
                       const RngStream& rng) {
  const SampleSet sample = reference_sample(priors, options, n2, model, rng);
  Gsa2Result result = single_loop_on_sample(sample, priors, n1, options, rng);
  result.model_evaluations = n2;
  return result;
}

Gsa2Result double_loop(std::span<const DistPrior> priors, std::size_t n1, std::size_t n2,
                       const Model& model, const DoubleLoopOptions& options,
                       const RngStream& rng) {
  require(n2 >= 6, ErrorCode::InvalidParameter, "double loop: n2 must be >= 6");
  const LawDesign design = draw_laws(priors, n1, options.exhaustive, rng.derive(1));
  const std::size_t m = design.laws.size();
  std::vector<std::optional<Gsa1Result>> qois(m);
  const RngStream samples = rng.derive(2);
  parallel_for(m, options.threads, [&](std::size_t l) {
    RngStream stream = samples.derive(l);
    const ProductDist& law = design.laws[l];
    Eigen::MatrixXd x = law.sample(n2, stream);
    Eigen::VectorXd y = evaluate_model(model, x);
    const SampleSet sample(std::move(x), std::move(y), law);
    qois[l] = Gsa1Engine(sample, options.qoi).evaluate(law, stream.derive(1));
  });
  std::vector<Gsa1Result> results;
  for (auto& q : qois) results.push_back(std::move(*q));
  // Base kernel per input: standardized on the mixture of the drawn laws.
  std::vector<GaussianKernel> base;
  for (std::size_t k = 0; k < design.laws.front().dimension(); ++k) {
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      const auto& marginal = design.laws[l].marginal(k);
      mean += design.probabilities[l] * marginal.mean();
      second += design.probabilities[l] * (marginal.variance() + marginal.mean() * marginal.mean());
    }
    const double var = second - mean * mean;
    require(var > 0.0, ErrorCode::Degenerate, "double loop: input law mixture has zero variance");
    base.emplace_back(1.0 / var);
  }
  Gsa2Result result =
      hsic2_estimate(design.laws, results, base, design.probabilities, options.second_level);
  result.model_evaluations = m * n2;
  return result;
}

std::vector<BootstrapRow> bootstrap_robustness(const SampleSet& sample, const LawDesign& design,
                                               std::span<const std::size_t> subsample_sizes,
                                               std::size_t reps,
                                               const SingleLoopOptions& options,
                                               const RngStream& rng,
                                               const BootstrapOptions& boot) {
  require(reps >= 1, ErrorCode::InvalidParameter, "bootstrap: reps must be >= 1");
  const Permutation full = single_loop_on_sample(sample, design, options, rng).ranking();
  std::vector<BootstrapRow> rows;
  for (std::size_t s = 0; s < subsample_sizes.size(); ++s) {
    const std::size_t m = subsample_sizes[s];
    require(m >= 6 && m <= sample.size(), ErrorCode::InvalidParameter,
            "bootstrap: subsample sizes must lie in [6, n2]");
    BootstrapRow row{m, {}, {}, {}, 0.0};
    std::size_t matches = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      RngStream stream = rng.derive(100 + s).derive(r);
      std::vector<std::size_t> idx(m);
      for (std::size_t i = 0; i < m; ++i) idx[i] = boot.force_identity ? i : stream.below(sample.size());
      const Gsa2Result res = single_loop_on_sample(sample.select(idx), design, options, stream);
      const bool match = res.ranking() == full;
      matches += match ? 1 : 0;
      row.matches.push_back(match ? 1 : 0);
      row.r2.push_back(res.r2);
    }
    const std::size_t d = sample.dimension();
    row.spread.assign(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (const auto& v : row.r2) mean += v[k];
      mean /= static_cast<double>(reps);
      double var = 0.0;
      for (const auto& v : row.r2) var += (v[k] - mean) * (v[k] - mean);
      row.spread[k] = std::sqrt(var / static_cast<double>(reps));
    }
    row.ranking_match_rate = static_cast<double>(matches) / static_cast<double>(reps);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hsicgsa
