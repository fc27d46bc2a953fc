#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "incmap/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitPipeline = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental measurement-synchronized mapping"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic stream + ground truth");
  simulate->add_option("--config", config_path, "run configuration (key = value)")->required();
  simulate->add_option("--out", out_dir, "output directory");
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  simulate->add_option("--seed", seed_override, "override the config seed")
      ->each([&](const std::string&) { seed_given = true; });

  std::string stream_path, truth_path, scenario = "base";
  std::string run_config, run_out = "out";
  int workers = -1;
  auto* run = app.add_subcommand("run", "build and solve the trajectory for one scenario");
  run->add_option("--stream", stream_path, "measurement stream file")->required();
  run->add_option("--truth", truth_path, "ground-truth trajectory file");
  run->add_option("--scenario", scenario, "base | min-time-shift | min-solver-error | mom");
  run->add_option("--config", run_config, "run configuration for pipeline settings");
  run->add_option("--workers", workers, "candidate evaluation threads (0 = auto)");
  run->add_option("--out", run_out, "output directory");

  std::vector<std::string> run_dirs;
  std::string csv_out;
  auto* report = app.add_subcommand("report", "join run reports into a comparison table");
  report->add_option("runs", run_dirs, "run output directories")->required();
  report->add_option("--out", csv_out, "combined CSV output path");

  int n = 4;
  bool list = false;
  auto* enumerate = app.add_subcommand("enumerate", "candidate counts for n core measurements");
  enumerate->add_option("n", n, "number of core measurements")->required();
  enumerate->add_flag("--list", list, "print every combination and connection tiling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      if (seed_given) {
        incmap::RunConfig cfg = incmap::RunConfig::parse(incmap::read_file(config_path));
        cfg.seed = seed_override;
        const std::filesystem::path tmp =
            std::filesystem::path(out_dir) / "config.resolved.txt";
        incmap::write_file(tmp, cfg.canonical());
        incmap::cmd_simulate(tmp, out_dir);
      } else {
        incmap::cmd_simulate(config_path, out_dir);
      }
    } else if (run->parsed()) {
      incmap::cmd_run(stream_path, truth_path, scenario, run_out, run_config, workers);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      std::cout << incmap::cmd_report(dirs, csv_out);
    } else if (enumerate->parsed()) {
      std::cout << incmap::cmd_enumerate(n, list);
    }
  } catch (const incmap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const incmap::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const incmap::PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
