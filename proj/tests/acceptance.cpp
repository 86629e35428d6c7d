// Acceptance checks, one per criterion. Each prints a single PASS/FAIL line;
// the exit status is nonzero when any selected check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsicgsa/bench.hpp"
#include "hsicgsa/errors.hpp"
#include "hsicgsa/gsa2.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/parallel.hpp"
#include "hsicgsa/weighted.hpp"
#include "oracles.hpp"
#include "unit_binaries.hpp"

using namespace hsicgsa;

namespace {

struct Options {
  bool full = false;
  std::size_t threads = 1;
};

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss] " << what;
    } else {
      detail << ' ' << what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.1f%%", 100.0 * v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

const UnivariateDist kU = UnivariateDist::uniform(0, 1);
const UnivariateDist kT = UnivariateDist::triangular(0, 1, 0.5);
const ProductDist kUniform2({kU, kU});
const ProductDist kTri2({kT, kT});

// Y depends on the second input only, so input 0 is independent of the
// output under any product law.
SampleSet null_sample(std::size_t n, std::uint64_t seed, const ProductDist& law) {
  RngStream rng(seed);
  Eigen::MatrixXd x = law.sample(n, rng);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::sin(5.0 * x(i, 1)) + rng.uniform();
  return SampleSet(std::move(x), std::move(y), law);
}

SampleSet weak_signal(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd x = kUniform2.sample(n, rng);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 0.25 * x(i, 0) + rng.uniform();
  return SampleSet(std::move(x), std::move(y), kUniform2);
}

bool criterion1(const Options&, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2024);
  double worst_classical = 0.0;
  double worst_weighted = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(gen() % 26);
    const Eigen::MatrixXd lk = oracle::random_gram(n, gen);
    const Eigen::MatrixXd l = oracle::random_gram(n, gen);
    const Eigen::VectorXd w = oracle::random_weights(n, gen);
    const double brute_c = oracle::hsic_quadruple(lk, l, Eigen::VectorXd::Ones(n));
    const double brute_w = oracle::hsic_quadruple(lk, l, w);
    worst_classical = std::max({worst_classical, oracle::rel_strict(hsic_v(lk, l), brute_c),
                                oracle::rel_strict(hsic_v_sum(lk, l), brute_c)});
    worst_weighted = std::max({worst_weighted, oracle::rel_strict(whsic(lk, l, w), brute_w),
                               oracle::rel_strict(whsic_sum(lk, l, w), brute_w)});
  }
  const double secs = seconds_since(t0);
  v.check(worst_classical <= 1e-12, "classical max rel " + fmt("%.2e", worst_classical) + " <= 1e-12");
  v.check(worst_weighted <= 1e-12, "weighted max rel " + fmt("%.2e", worst_weighted) + " <= 1e-12");
  v.check(secs < 10.0, "time " + fmt("%.1fs", secs) + " < 10s");
  return v.pass;
}

bool criterion2(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const SampleSet s = null_sample(60 + 3 * static_cast<std::size_t>(rep), 300 + rep, kUniform2);
    const std::size_t n = s.size();
    const WeightSet ones = unit_weights(n, 2);
    const Eigen::MatrixXd l = output_gram(s);
    const double nn = static_cast<double>(n);
    const double ey = l.sum() / (nn * nn);
    const double c = 2.0 * (nn - 4) * (nn - 5) / (nn * nn * nn * (nn - 1) * (nn - 2) * (nn - 3));
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(s.size(), s.size()) -
                              Eigen::MatrixXd::Constant(s.size(), s.size(), 1.0 / nn);
    for (std::size_t k = 0; k < 2; ++k) {
      const Eigen::MatrixXd lk = input_gram(s, k);
      const double ex = lk.sum() / (nn * nn);
      const double var = c * ((h * lk * h).cwiseProduct(h * l * h)).squaredNorm();
      worst = std::max({worst, oracle::rel_strict(whsic(s, ones, k).value, hsic_v(s, k).value),
                        oracle::rel_strict(whsic_sum(s, ones, k).value, hsic_v_sum(s, k).value),
                        oracle::rel_strict(wr2_hsic(s, ones, k), r2_hsic(s, k)),
                        oracle::rel_strict(whsic_bias_h0(s, ones, k), (1 - ex) * (1 - ey) / nn),
                        oracle::rel_strict(whsic_var_h0(s, ones, k), var)});
    }
  }
  v.check(worst <= 1e-12, "estimators max rel " + fmt("%.2e", worst) + " <= 1e-12");

  // Rejection rates of the classical and unit-weight tests on shared data.
  const std::size_t reps = 500;
  const std::size_t n = 100;
  std::vector<char> reject(4 * reps, 0);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    const SampleSet s = weak_signal(n, 5000 + r);
    const WeightSet ones = unit_weights(n, 2);
    const RngStream rng(7000 + r);
    reject[4 * r + 0] = asymp_pvalue(s, 0) <= 0.05;
    reject[4 * r + 1] = wgamma_pvalue(s, ones, 0) <= 0.05;
    reject[4 * r + 2] = perm_pvalue(s, 0, 100, rng) <= 0.05;
    reject[4 * r + 3] = wperm_pvalue(s, ones, 0, 100, rng) <= 0.05;
  });
  double rate[4] = {0, 0, 0, 0};
  for (std::size_t r = 0; r < reps; ++r) {
    for (int t = 0; t < 4; ++t) rate[t] += reject[4 * r + t] / static_cast<double>(reps);
  }
  v.check(std::abs(rate[0] - rate[1]) < 0.03,
          "gamma rates " + pct(rate[0]) + "/" + pct(rate[1]) + " differ < 3 pts");
  v.check(std::abs(rate[2] - rate[3]) < 0.03,
          "permutation rates " + pct(rate[2]) + "/" + pct(rate[3]) + " differ < 3 pts");
  const double secs = seconds_since(t0);
  v.check(secs < 300.0, "time " + fmt("%.0fs", secs) + " < 300s");
  return v.pass;
}

bool criterion3(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = default_spec(Scenario::Gsa1Convergence, opt.full);
  spec.reps = 200;
  spec.sizes = {100, 200, 500, 700, 1000};
  if (opt.full) spec.sizes.push_back(1500);
  spec.threads = opt.threads;
  const ExperimentTable t = run_gsa1_convergence(spec);
  for (std::size_t n : spec.sizes) {
    const double rate = t.row("weighted", n).rate;
    if (n == 100) {
      v.check(std::abs(rate - 0.88) <= 0.06, "n=100 " + pct(rate) + " in 88+-6");
    } else if (n == 200) {
      v.check(std::abs(rate - 0.935) <= 0.05, "n=200 " + pct(rate) + " in 93.5+-5");
    } else {
      v.check(rate >= 0.97, "n=" + std::to_string(n) + " " + pct(rate) + " >= 97");
    }
  }
  const double secs = seconds_since(t0);
  v.check(secs < 1200.0, "time " + fmt("%.0fs", secs) + " < 1200s");
  return v.pass;
}

bool criterion4(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto priors = analytical_priors();
  const Model model = ishigami_model(ModelVariant::Coef15);
  DoubleLoopOptions options;
  options.exhaustive = true;
  options.threads = opt.threads;
  const int reps = 10;
  std::vector<std::vector<double>> hsic2(3), r2(3);
  for (int r = 0; r < reps; ++r) {
    const Gsa2Result res = double_loop(priors, 0, 1000, model, options, RngStream(derive_seed(4, {static_cast<std::uint64_t>(r)})));
    for (std::size_t k = 0; k < 3; ++k) {
      hsic2[k].push_back(res.hsic2[k]);
      r2[k].push_back(res.r2[k]);
    }
  }
  const double target_h[3] = {0.0414, 0.0261, 0.0009};
  const double target_r[3] = {0.4152, 0.2516, 0.0086};
  for (std::size_t k = 0; k < 3; ++k) {
    const double h = median(hsic2[k]);
    const double q = median(r2[k]);
    v.check(std::abs(h - target_h[k]) <= 0.005,
            "HSIC2_" + std::to_string(k + 1) + " " + fmt("%.4f", h) + " vs " + fmt("%.4f", target_h[k]));
    v.check(std::abs(q - target_r[k]) <= 0.05,
            "R2_" + std::to_string(k + 1) + " " + fmt("%.4f", q) + " vs " + fmt("%.4f", target_r[k]));
  }
  const double secs = seconds_since(t0);
  v.check(secs < 900.0, "time " + fmt("%.0fs", secs) + " < 900s");
  return v.pass;
}

bool criterion5(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = default_spec(Scenario::Gsa2Convergence, opt.full);
  spec.reps = opt.full ? 200 : 50;
  spec.sizes = {100, 300, 500, 1000};
  spec.threads = opt.threads;
  const ExperimentTable t = run_gsa2_convergence(spec);
  struct Target {
    const char* option;
    double rates[3];
    double band;
  };
  const Target targets[] = {{"mixture", {0.74, 0.945, 1.0}, opt.full ? 0.07 : 0.12},
                            {"kl", {0.755, 0.92, 0.995}, opt.full ? 0.07 : 0.12},
                            {"wasserstein", {0.575, 0.82, 0.935}, opt.full ? 0.08 : 0.12}};
  const std::size_t checked[] = {100, 500, 1000};
  for (const auto& target : targets) {
    for (int i = 0; i < 3; ++i) {
      const double rate = t.row(target.option, checked[i]).rate;
      v.check(std::abs(rate - target.rates[i]) <= target.band + 1e-12,
              std::string(target.option) + " n2=" + std::to_string(checked[i]) + " " + pct(rate) +
                  " in " + fmt("%.1f", 100 * target.rates[i]) + "+-" + fmt("%.0f", 100 * target.band));
    }
  }
  for (std::size_t n : {std::size_t{100}, std::size_t{300}}) {
    const double m = t.row("mixture", n).rate;
    const double k = t.row("kl", n).rate;
    const double w = t.row("wasserstein", n).rate;
    v.check(w < std::min(m, k) && std::abs(m - k) <= (opt.full ? 0.07 : 0.12),
            "n2=" + std::to_string(n) + " order M " + pct(m) + " ~ KL " + pct(k) + " > W " + pct(w));
  }
  const double secs = seconds_since(t0);
  v.check(secs < 7200.0, "time " + fmt("%.0fs", secs) + " < 7200s");
  return v.pass;
}

bool criterion6(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = default_spec(Scenario::BudgetComparison, opt.full);
  spec.reps = 200;
  spec.threads = opt.threads;
  const ExperimentTable t = run_budget_comparison(spec);
  const double dbl = t.row("double", 1026).rate;
  const double mix = t.row("single-mixture", 1026).rate;
  const double kl = t.row("single-kl", 1026).rate;
  v.check(std::abs(dbl - 0.675) <= 0.10, "double " + pct(dbl) + " in 67.5+-10");
  v.check(mix >= 0.95, "single mixture " + pct(mix) + " >= 95");
  v.check(kl >= 0.93, "single KL " + pct(kl) + " >= 93");
  const double secs = seconds_since(t0);
  v.check(secs < 2400.0, "time " + fmt("%.0fs", secs) + " < 2400s");
  return v.pass;
}

bool criterion7(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t reps = 500;
  const std::size_t n = 500;
  const std::size_t perms = 200;
  std::vector<char> reject(4 * reps, 0);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    const RngStream rng(derive_seed(7, {r}));
    const SampleSet classical = null_sample(n, derive_seed(70, {r}), kUniform2);
    reject[4 * r + 0] = asymp_pvalue(classical, 0) <= 0.05;
    reject[4 * r + 1] = perm_pvalue(classical, 0, perms, rng.derive(0)) <= 0.05;
    const SampleSet sampled = null_sample(n, derive_seed(71, {r}), kUniform2);
    const WeightSet w = make_weights(kTri2, kUniform2, sampled.inputs());
    reject[4 * r + 2] = wgamma_pvalue(sampled, w, 0) <= 0.05;
    reject[4 * r + 3] = wperm_pvalue(sampled, w, 0, perms, rng.derive(1)) <= 0.05;
  });
  const char* names[] = {"classical gamma", "classical permutation", "weighted gamma",
                         "weighted permutation"};
  for (int t = 0; t < 4; ++t) {
    double rate = 0.0;
    for (std::size_t r = 0; r < reps; ++r) rate += reject[4 * r + t];
    rate /= static_cast<double>(reps);
    v.check(rate >= 0.02 && rate <= 0.10, std::string(names[t]) + " " + pct(rate) + " in [2,10]");
  }
  const double secs = seconds_since(t0);
  v.check(secs < 1800.0, "time " + fmt("%.0fs", secs) + " < 1800s");
  return v.pass;
}

struct NullDraws {
  std::vector<double> stat;
  std::vector<double> bias;
  std::vector<double> var;
};

NullDraws weighted_null(std::size_t n, std::size_t reps, std::uint64_t seed, bool with_var,
                        std::size_t threads) {
  NullDraws d{std::vector<double>(reps), std::vector<double>(reps), std::vector<double>(reps)};
  parallel_for(reps, threads, [&](std::size_t r) {
    const SampleSet s = null_sample(n, derive_seed(seed, {n, r}), kUniform2);
    const WeightSet w = make_weights(kTri2, kUniform2, s.inputs());
    d.stat[r] = whsic(s, w, 0).value;
    d.bias[r] = whsic_bias_h0(s, w, 0);
    if (with_var) d.var[r] = whsic_var_h0(s, w, 0);
  });
  return d;
}

bool criterion8(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const NullDraws big = weighted_null(500, 2000, 8, true, opt.threads);
  const double ratio = mean(big.var) / variance(big.stat);
  v.check(ratio >= 0.7 && ratio <= 1.3, "n=500 estimate/MC variance " + fmt("%.3f", ratio) + " in [0.7,1.3]");
  const NullDraws half = weighted_null(250, 500, 8, true, opt.threads);
  const double rate = mean(half.var) / mean(big.var);
  v.check(std::abs(rate - 4.0) <= 1.0, "var(250)/var(500) " + fmt("%.3f", rate) + " in 4+-1");
  const double secs = seconds_since(t0);
  v.check(secs < 1800.0, "time " + fmt("%.0fs", secs) + " < 1800s");
  return v.pass;
}

bool criterion9(const Options& opt, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> means;
  for (std::size_t n : {std::size_t{250}, std::size_t{500}, std::size_t{1000}}) {
    const NullDraws d = weighted_null(n, 2000, 9, false, opt.threads);
    const double e = mean(d.stat);
    const double b = mean(d.bias);
    means.push_back(e);
    v.check(std::abs(e - b) < 0.5 * std::abs(e),
            "n=" + std::to_string(n) + " |E-bias| " + fmt("%.3e", std::abs(e - b)) + " < " + fmt("%.3e", 0.5 * std::abs(e)));
  }
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    const double ratio = means[i] / means[i + 1];
    v.check(std::abs(ratio - 2.0) <= 0.3, "E ratio " + fmt("%.3f", ratio) + " in 2+-0.3");
  }
  const double secs = seconds_since(t0);
  v.check(secs < 1800.0, "time " + fmt("%.0fs", secs) + " < 1800s");
  return v.pass;
}

bool criterion10(const Options&, Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const std::string path : kUnitTestBinaries) {
    const std::string cmd = "\"" + path + "\" --gtest_brief=1 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    v.check(status == 0, path.substr(path.find_last_of('/') + 1));
  }
  const double secs = seconds_since(t0);
  v.check(secs < 900.0, "time " + fmt("%.0fs", secs) + " < 900s");
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> criteria;
  Options opt;
  app.add_option("--criterion", criteria, "criterion numbers (default: all)")->check(CLI::Range(1, 10));
  app.add_flag("--full", opt.full, "full-scale replicate counts and bands");
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) {
    criteria.resize(10);
    std::iota(criteria.begin(), criteria.end(), 1);
  }
  const std::function<bool(const Options&, Verdict&)> checks[] = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  bool all = true;
  for (int c : criteria) {
    Verdict v;
    bool ok = false;
    try {
      ok = checks[c - 1](opt, v);
    } catch (const std::exception& e) {
      v.detail << " error: " << e.what();
    }
    std::printf("criterion %d: %s%s\n", c, ok ? "PASS" : "FAIL", v.detail.str().c_str());
    std::fflush(stdout);
    all = all && ok;
  }
  return all ? 0 : 1;
}
