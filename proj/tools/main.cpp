#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace cli = hsicgsa::cli;

int main(int argc, char** argv) {
  CLI::App app{"HSIC-based first- and second-level sensitivity analysis"};
  app.set_version_flag("--version", cli::version());
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::size_t threads = 0;
  std::string out_dir;
  cli::Overrides o;

  const auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    if (config_required) opt->required();
    sub->add_option("--seed", seed, "override the seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* gsa1 = app.add_subcommand("gsa1", "first-level indices and independence tests");
  common(gsa1, true);
  auto* gsa2 = app.add_subcommand("gsa2", "single-loop second-level indices");
  common(gsa2, true);
  auto* bench = app.add_subcommand("bench", "benchmark tables on the analytical example");
  common(bench, false);
  bench->add_option("scenario", scenario, "gsa1-convergence | gsa2-convergence | budget | bootstrap")
      ->required();
  bench->add_option("--reps", reps, "replicates per size")->check(CLI::PositiveNumber);
  bench->add_flag("--full", o.full, "full protocol (200 reps, larger sizes)");
  auto* validate = app.add_subcommand("validate", "check a configuration, write nothing");
  validate->add_option("--config", config_path, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (CLI::App* sub : {gsa1, gsa2, bench}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--out")) o.out_dir = out_dir;
    if (sub->count("--threads")) o.threads = threads;
  }
  if (bench->parsed() && bench->count("--reps")) o.reps = reps;

  try {
    std::vector<std::filesystem::path> written;
    if (validate->parsed()) {
      cli::load_config(config_path);
      std::cout << "ok " << config_path << "\n";
      return 0;
    }
    if (gsa1->parsed()) written = cli::run_gsa1(cli::load_config(config_path), o);
    if (gsa2->parsed()) written = cli::run_gsa2(cli::load_config(config_path), o);
    if (bench->parsed()) {
      const hsicgsa::Scenario s = hsicgsa::parse_scenario(scenario);
      if (config_path.empty()) {
        written = cli::run_bench(s, nullptr, o);
      } else {
        const cli::RunConfig c = cli::load_config(config_path);
        written = cli::run_bench(s, &c, o);
      }
    }
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  } catch (const hsicgsa::Error& e) {
    std::cerr << "error [" << hsicgsa::to_string(e.code()) << "]: " << e.what() << "\n";
    // An unknown scenario name is a usage error.
    if (bench->parsed() && e.code() == hsicgsa::ErrorCode::InvalidParameter &&
        std::string(e.what()).rfind("unknown bench scenario", 0) == 0) {
      return 2;
    }
    return cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
