#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hsicgsa/distributions.hpp"
#include "hsicgsa/gsa2.hpp"
#include "hsicgsa/metalaw.hpp"

namespace hsicgsa {

enum class ModelVariant { Coef18, Coef15 };

const char* to_string(ModelVariant variant);

/// sin x1 + c sin^2 x2 + 0.5 x3^4 sin x1 with c = 1.8 or 1.5.
double ishigami_h(std::span<const double> x, ModelVariant variant);

Model ishigami_model(ModelVariant variant);

/// Three equiprobable candidates per input: U(0,1), T(0,1,0.4), Nt(0,1,0.6,0.2).
std::vector<DistPrior> analytical_priors();

/// Inputs ranked by decreasing first-level R^2 in the first-level study.
inline const Permutation kGsa1Ordering{1, 0, 2};
/// Laws ranked by decreasing second-level R^2 in the analytical example.
inline const Permutation kGsa2Ordering{0, 1, 2};

enum class Scenario { Gsa1Convergence, Gsa2Convergence, BudgetComparison, Bootstrap };

const char* to_string(Scenario scenario);
Scenario parse_scenario(const std::string& name);

struct ExperimentSpec {
  Scenario scenario = Scenario::Gsa1Convergence;
  std::vector<std::size_t> sizes;
  std::size_t reps = 50;
  std::vector<ReferenceLawSpec> references;
  std::uint64_t seed = 20240611;
  ModelVariant variant = ModelVariant::Coef18;
  double triangular_mode = 0.5;  // first-level study target
  /// Single-loop law design: n1 independent draws, or every combination of
  /// the finite priors when `exhaustive_laws`. The double loop and the
  /// bootstrap always use every combination.
  std::size_t n1 = 50;
  bool exhaustive_laws = false;
  std::size_t threads = 1;
};

/// Desk-scale defaults (50 reps, n <= 1000), or the full protocol
/// (200 reps, n up to 1500).
ExperimentSpec default_spec(Scenario scenario, bool full = false);

void validate(const ExperimentSpec& spec);

struct InputSummary {
  double q1;
  double median;
  double q3;
};

struct RateRow {
  std::string scenario;
  std::string option;
  std::size_t n;
  std::size_t reps;
  std::size_t good;
  double rate;
  double lower;  // Wilson 95% interval
  double upper;
  std::vector<InputSummary> inputs;
};

struct LongRow {
  std::string scenario;
  std::string option;
  std::size_t n;
  std::size_t rep;
  std::size_t input;
  double value;
};

struct ExperimentTable {
  std::vector<RateRow> summary;
  std::vector<LongRow> values;

  const RateRow& row(const std::string& option, std::size_t n) const;
};

ExperimentTable run_gsa1_convergence(const ExperimentSpec& spec);
ExperimentTable run_gsa2_convergence(const ExperimentSpec& spec);
ExperimentTable run_budget_comparison(const ExperimentSpec& spec);
ExperimentTable run_bootstrap(const ExperimentSpec& spec);
ExperimentTable run_experiment(const ExperimentSpec& spec);

/// One row per (scenario, option, n): rate, interval and per-input quartiles.
void write_summary_csv(std::ostream& out, const ExperimentTable& table);
/// One row per (scenario, option, n, rep, input) for box plots.
void write_long_csv(std::ostream& out, const ExperimentTable& table);

std::pair<double, double> wilson_interval(std::size_t good, std::size_t total);

std::string format_double(double value);

}  // namespace hsicgsa
