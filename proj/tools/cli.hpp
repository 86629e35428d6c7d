#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsicgsa/bench.hpp"
#include "hsicgsa/distributions.hpp"
#include "hsicgsa/errors.hpp"
#include "hsicgsa/gsa2.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/metalaw.hpp"

namespace hsicgsa::cli {

using Json = nlohmann::ordered_json;

struct InputConfig {
  std::string name;
  DistPrior prior;                      // fixed law when `law` is set
  std::optional<UnivariateDist> law;    // gsa1 sampling law
  std::optional<UnivariateDist> target; // gsa1 target law (weighted estimators)
};

struct ModelConfig {
  std::optional<ModelVariant> builtin;
  std::filesystem::path sample;  // used when builtin is empty
};

struct RunConfig {
  std::vector<InputConfig> inputs;
  std::vector<ReferenceLawSpec> references{ReferenceLawSpec{}};
  QoiSpec qoi;
  SecondLevelOptions second_level;
  std::size_t n1 = 50;
  std::size_t n2 = 1000;
  std::size_t permutations = 200;  // B
  std::uint64_t seed = 1;
  bool seed_given = false;  // bench keeps its own default seed otherwise
  bool exhaustive = false;
  std::size_t threads = 1;
  ModelConfig model;
  std::filesystem::path out_dir = "out";
  bool write_sample = false;
  Json bench;  // raw overrides for `bench`, validated at parse time

  /// Resolved configuration with every default filled in.
  Json resolved;
};

/// Parses and validates a config document. Every error names the offending
/// key as a JSON pointer. `base` resolves relative sample paths.
RunConfig parse_config(const Json& doc, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);

UnivariateDist parse_law(const Json& j, const std::string& path);
DistPrior parse_prior(const Json& j, const std::string& path);

/// Reads a sample: header naming the inputs in config order plus one output
/// column, then numeric rows. Points outside the law's support are errors.
SampleSet ingest_sample(const std::filesystem::path& csv, const std::vector<std::string>& names,
                        const ProductDist& law);
SampleSet parse_sample(const std::string& text, const std::string& source,
                       const std::vector<std::string>& names, const ProductDist& law);

std::string sample_csv(const SampleSet& sample, const std::vector<std::string>& names);

/// Writes through a temporary file renamed into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> threads;
  std::optional<std::filesystem::path> out_dir;
  bool full = false;
};

ExperimentSpec bench_spec(Scenario scenario, const RunConfig* config, const Overrides& o);

/// Subcommands. Each returns the list of files written.
std::vector<std::filesystem::path> run_gsa1(RunConfig config, const Overrides& o);
std::vector<std::filesystem::path> run_gsa2(RunConfig config, const Overrides& o);
std::vector<std::filesystem::path> run_bench(Scenario scenario, const RunConfig* config,
                                             const Overrides& o);

/// Distinct process exit status per error family.
int exit_code(ErrorCode code);

const char* version();

}  // namespace hsicgsa::cli
