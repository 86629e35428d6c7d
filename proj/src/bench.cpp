#include "hsicgsa/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/parallel.hpp"

namespace hsicgsa {

const char* to_string(ModelVariant variant) {
  return variant == ModelVariant::Coef18 ? "coef18" : "coef15";
}

double ishigami_h(std::span<const double> x, ModelVariant variant) {
  require(x.size() == 3, ErrorCode::SizeMismatch, "ishigami: expects 3 inputs");
  const double c = variant == ModelVariant::Coef18 ? 1.8 : 1.5;
  const double s1 = std::sin(x[0]);
  const double s2 = std::sin(x[1]);
  const double x3 = x[2] * x[2];
  return s1 + c * s2 * s2 + 0.5 * x3 * x3 * s1;
}

Model ishigami_model(ModelVariant variant) {
  return [variant](std::span<const double> x) { return ishigami_h(x, variant); };
}

std::vector<DistPrior> analytical_priors() {
  const double third = 1.0 / 3.0;
  std::vector<DistPrior> priors;
  for (int k = 0; k < 3; ++k) {
    priors.push_back(DistPrior::finite({{UnivariateDist::uniform(0.0, 1.0), third},
                                        {UnivariateDist::triangular(0.0, 1.0, 0.4), third},
                                        {UnivariateDist::trunc_normal(0.0, 1.0, 0.6, 0.2), third}}));
  }
  return priors;
}

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::Gsa1Convergence: return "gsa1-convergence";
    case Scenario::Gsa2Convergence: return "gsa2-convergence";
    case Scenario::BudgetComparison: return "budget";
    case Scenario::Bootstrap: return "bootstrap";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::Gsa1Convergence, Scenario::Gsa2Convergence,
                     Scenario::BudgetComparison, Scenario::Bootstrap}) {
    if (name == to_string(s)) return s;
  }
  fail(ErrorCode::InvalidParameter, "unknown bench scenario '" + name + "'");
}

ExperimentSpec default_spec(Scenario scenario, bool full) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.reps = full ? 200 : 50;
  switch (scenario) {
    case Scenario::Gsa1Convergence:
      spec.sizes = {100, 200, 300, 400, 500, 700, 1000};
      if (full) spec.sizes.push_back(1500);
      spec.variant = ModelVariant::Coef18;
      break;
    case Scenario::Gsa2Convergence:
      spec.sizes = {100, 300, 500, 700, 1000};
      if (full) spec.sizes.push_back(1500);
      spec.variant = ModelVariant::Coef15;
      spec.references = {{ReferenceMethod::Mixture, 2048},
                         {ReferenceMethod::KLBarycenter, 2048},
                         {ReferenceMethod::WassersteinBarycenter, 2048}};
      break;
    case Scenario::BudgetComparison:
      spec.sizes = {1026};
      spec.variant = ModelVariant::Coef15;
      spec.references = {{ReferenceMethod::Mixture, 2048}, {ReferenceMethod::KLBarycenter, 2048}};
      break;
    case Scenario::Bootstrap:
      spec.sizes = {100, 200, 300, 400, 500, 600, 700, 800};
      spec.reps = 20;
      spec.variant = ModelVariant::Coef15;
      spec.references = {{ReferenceMethod::Mixture, 2048}};
      break;
  }
  return spec;
}

void validate(const ExperimentSpec& spec) {
  require(spec.reps >= 1, ErrorCode::InvalidParameter, "experiment: reps must be >= 1");
  require(spec.exhaustive_laws || spec.n1 >= 6, ErrorCode::InvalidParameter,
          "experiment: n1 must be >= 6");
  require(!spec.sizes.empty(), ErrorCode::InvalidParameter, "experiment: sizes must be nonempty");
  for (std::size_t i = 0; i < spec.sizes.size(); ++i) {
    require(spec.sizes[i] >= 6, ErrorCode::InvalidParameter, "experiment: sizes must be >= 6");
    if (i > 0) {
      require(spec.sizes[i] > spec.sizes[i - 1], ErrorCode::InvalidParameter,
              "experiment: sizes must be ascending");
    }
  }
  if (spec.scenario != Scenario::Gsa1Convergence) {
    require(!spec.references.empty(), ErrorCode::InvalidParameter,
            "experiment: at least one reference law option required");
  }
}

std::pair<double, double> wilson_interval(std::size_t good, std::size_t total) {
  if (total == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(good) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const RateRow& ExperimentTable::row(const std::string& option, std::size_t n) const {
  for (const auto& r : summary) {
    if (r.option == option && r.n == n) return r;
  }
  fail(ErrorCode::InvalidParameter, "experiment table: no row for " + option);
}

namespace {

double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Collects one d-vector per replicate and appends the summary row.
void summarize(ExperimentTable& table, const ExperimentSpec& spec, const std::string& option,
               std::size_t n, const std::vector<std::vector<double>>& values,
               const std::vector<char>& good) {
  RateRow row;
  row.scenario = to_string(spec.scenario);
  row.option = option;
  row.n = n;
  row.reps = values.size();
  row.good = static_cast<std::size_t>(std::count(good.begin(), good.end(), 1));
  row.rate = static_cast<double>(row.good) / static_cast<double>(row.reps);
  std::tie(row.lower, row.upper) = wilson_interval(row.good, row.reps);
  const std::size_t d = values.front().size();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> col;
    for (const auto& v : values) col.push_back(v[k]);
    row.inputs.push_back({quantile7(col, 0.25), quantile7(col, 0.5), quantile7(col, 0.75)});
  }
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      table.values.push_back({row.scenario, option, n, r, k, values[r][k]});
    }
  }
  table.summary.push_back(std::move(row));
}

RngStream replicate_stream(const ExperimentSpec& spec, std::uint64_t option, std::size_t n,
                           std::size_t rep) {
  return RngStream(derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.scenario), option,
                                           static_cast<std::uint64_t>(n),
                                           static_cast<std::uint64_t>(rep)}));
}

// Second-level analysis on one reference sample with the spec's law design.
Gsa2Result single_loop_for(const ExperimentSpec& spec, const SampleSet& sample,
                           std::span<const DistPrior> priors, const LawDesign& design,
                           const SingleLoopOptions& options, const RngStream& rng) {
  if (spec.exhaustive_laws) return single_loop_on_sample(sample, design, options, rng);
  return single_loop_on_sample(sample, priors, spec.n1, options, rng);
}

ProductDist iid_law(const UnivariateDist& law, std::size_t d) {
  return ProductDist(std::vector<UnivariateDist>(d, law));
}

}  // namespace

ExperimentTable run_gsa1_convergence(const ExperimentSpec& spec) {
  validate(spec);
  const ProductDist target = iid_law(UnivariateDist::triangular(0.0, 1.0, spec.triangular_mode), 3);
  const ProductDist uniform = iid_law(UnivariateDist::uniform(0.0, 1.0), 3);
  const Model model = ishigami_model(spec.variant);
  ExperimentTable table;
  const char* options[] = {"classical", "weighted"};
  for (std::uint64_t opt = 0; opt < 2; ++opt) {
    const ProductDist& sampling = opt == 0 ? target : uniform;
    for (std::size_t n : spec.sizes) {
      std::vector<std::vector<double>> values(spec.reps);
      std::vector<char> good(spec.reps, 0);
      parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
        RngStream rng = replicate_stream(spec, opt, n, rep);
        Eigen::MatrixXd x = sampling.sample(n, rng);
        Eigen::VectorXd y = evaluate_model(model, x);
        const SampleSet sample(std::move(x), std::move(y), sampling);
        const Gsa1Result r = gsa1_qoi(sample, target, {}, rng);
        values[rep] = r.values();
        good[rep] = rank_descending(values[rep]) == kGsa1Ordering ? 1 : 0;
      });
      summarize(table, spec, options[opt], n, values, good);
    }
  }
  return table;
}

ExperimentTable run_gsa2_convergence(const ExperimentSpec& spec) {
  validate(spec);
  const auto priors = analytical_priors();
  const LawDesign design = draw_laws(priors, 0, true, RngStream(spec.seed));
  const Model model = ishigami_model(spec.variant);
  ExperimentTable table;
  for (std::uint64_t opt = 0; opt < spec.references.size(); ++opt) {
    const ReferenceLawSpec ref_spec = spec.references[opt];
    const std::vector<ReferenceLawSpec> refs{ref_spec};
    const ProductDist ref = reference_law(priors, refs);
    SingleLoopOptions options;
    options.references = refs;
    for (std::size_t n : spec.sizes) {
      std::vector<std::vector<double>> values(spec.reps);
      std::vector<char> good(spec.reps, 0);
      parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
        RngStream rng = replicate_stream(spec, opt, n, rep);
        Eigen::MatrixXd x = ref.sample(n, rng);
        Eigen::VectorXd y = evaluate_model(model, x);
        const SampleSet sample(std::move(x), std::move(y), ref);
        const Gsa2Result r = single_loop_for(spec, sample, priors, design, options, rng);
        values[rep] = r.r2;
        good[rep] = r.ranking() == kGsa2Ordering ? 1 : 0;
      });
      summarize(table, spec, to_string(ref_spec.method), n, values, good);
    }
  }
  return table;
}

ExperimentTable run_budget_comparison(const ExperimentSpec& spec) {
  validate(spec);
  const auto priors = analytical_priors();
  const LawDesign design = draw_laws(priors, 0, true, RngStream(spec.seed));
  const Model model = ishigami_model(spec.variant);
  ExperimentTable table;
  for (std::size_t budget : spec.sizes) {
    for (std::uint64_t opt = 0; opt < spec.references.size(); ++opt) {
      const std::vector<ReferenceLawSpec> refs{spec.references[opt]};
      const ProductDist ref = reference_law(priors, refs);
      SingleLoopOptions options;
      options.references = refs;
      std::vector<std::vector<double>> values(spec.reps);
      std::vector<char> good(spec.reps, 0);
      parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
        RngStream rng = replicate_stream(spec, opt, budget, rep);
        Eigen::MatrixXd x = ref.sample(budget, rng);
        Eigen::VectorXd y = evaluate_model(model, x);
        const SampleSet sample(std::move(x), std::move(y), ref);
        const Gsa2Result r = single_loop_for(spec, sample, priors, design, options, rng);
        values[rep] = r.r2;
        good[rep] = r.ranking() == kGsa2Ordering ? 1 : 0;
      });
      summarize(table, spec, std::string("single-") + to_string(refs[0].method), budget, values,
                good);
    }
    const std::size_t n2 = budget / design.laws.size();
    std::vector<std::vector<double>> values(spec.reps);
    std::vector<char> good(spec.reps, 0);
    DoubleLoopOptions options;
    options.exhaustive = true;
    parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
      const RngStream rng = replicate_stream(spec, 99, budget, rep);
      const Gsa2Result r = double_loop(priors, 0, n2, model, options, rng);
      values[rep] = r.r2;
      good[rep] = r.ranking() == kGsa2Ordering ? 1 : 0;
    });
    summarize(table, spec, "double", budget, values, good);
  }
  return table;
}

ExperimentTable run_bootstrap(const ExperimentSpec& spec) {
  validate(spec);
  const auto priors = analytical_priors();
  const LawDesign design = draw_laws(priors, 0, true, RngStream(spec.seed));
  const Model model = ishigami_model(spec.variant);
  const std::vector<ReferenceLawSpec> refs{spec.references.front()};
  const ProductDist ref = reference_law(priors, refs);
  SingleLoopOptions options;
  options.references = refs;
  const std::size_t n2 = std::max<std::size_t>(1000, spec.sizes.back());
  RngStream rng = replicate_stream(spec, 0, n2, 0);
  Eigen::MatrixXd x = ref.sample(n2, rng);
  Eigen::VectorXd y = evaluate_model(model, x);
  const SampleSet sample(std::move(x), std::move(y), ref);
  const auto rows = bootstrap_robustness(sample, design, spec.sizes, spec.reps, options, rng);
  ExperimentTable table;
  for (const auto& row : rows) {
    // Rate column: agreement with the full-sample ranking.
    summarize(table, spec, to_string(refs[0].method), row.subsample_size, row.r2, row.matches);
  }
  return table;
}

ExperimentTable run_experiment(const ExperimentSpec& spec) {
  switch (spec.scenario) {
    case Scenario::Gsa1Convergence: return run_gsa1_convergence(spec);
    case Scenario::Gsa2Convergence: return run_gsa2_convergence(spec);
    case Scenario::BudgetComparison: return run_budget_comparison(spec);
    case Scenario::Bootstrap: return run_bootstrap(spec);
  }
  fail(ErrorCode::InvalidParameter, "unknown scenario");
}

void write_summary_csv(std::ostream& out, const ExperimentTable& table) {
  std::size_t d = 0;
  for (const auto& r : table.summary) d = std::max(d, r.inputs.size());
  out << "scenario,option,n,reps,good,rate,rate_lo95,rate_hi95";
  for (std::size_t k = 0; k < d; ++k) {
    out << ",q1_" << k + 1 << ",median_" << k + 1 << ",q3_" << k + 1;
  }
  out << '\n';
  for (const auto& r : table.summary) {
    out << r.scenario << ',' << r.option << ',' << r.n << ',' << r.reps << ',' << r.good << ','
        << format_double(r.rate) << ',' << format_double(r.lower) << ','
        << format_double(r.upper);
    for (const auto& s : r.inputs) {
      out << ',' << format_double(s.q1) << ',' << format_double(s.median) << ','
          << format_double(s.q3);
    }
    out << '\n';
  }
}

void write_long_csv(std::ostream& out, const ExperimentTable& table) {
  out << "scenario,option,n,rep,input,value\n";
  for (const auto& v : table.values) {
    out << v.scenario << ',' << v.option << ',' << v.n << ',' << v.rep << ',' << v.input + 1 << ','
        << format_double(v.value) << '\n';
  }
}

}  // namespace hsicgsa
