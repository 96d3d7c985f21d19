#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "semiclab/error.hpp"
#include "semiclab/lab.hpp"

namespace {

std::string default_dir(const semiclab::ExperimentConfig& cfg, const std::string& suffix) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return (std::filesystem::path("runs") / (cfg.name + suffix)).string();
}

int finish(const semiclab::LadderRun& run, const std::string& dir) {
  semiclab::write_report(run, dir);
  std::cout << semiclab::summarize(run) << "report written to " << dir << "\n";
  bool ok = true;
  for (const auto& c : run.checks) ok = ok && c.verdict;
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiclassical lab: ladder experiments, bound checks and reports"};
  app.require_subcommand(1);

  std::string run_config, run_out;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", run_out, "run directory (overrides experiment.output)");

  std::string check_name, check_config, check_out;
  auto* check = app.add_subcommand("check", "run one bound check over the configured ladder");
  check->add_option("bound", check_name, "bound name")
      ->required()
      ->check(CLI::IsMember({"gaussian_decomposition", "commutator_trace", "commutator_lp", "kinetic_interpolation", "weighted_weyl", "exchange",
                             "b_t", "classical_stability", "moment"}));
  check->add_option("config", check_config, "config file")->required()->check(CLI::ExistingFile);
  check->add_option("-o,--out", check_out, "run directory (overrides experiment.output)");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize a stored run directory");
  report->add_option("run_dir", report_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const semiclab::ExperimentConfig cfg = semiclab::load_config(run_config);
      const semiclab::LadderRun result = semiclab::run_experiment(cfg);
      return finish(result, run_out.empty() ? default_dir(cfg, "") : run_out);
    }
    if (*check) {
      const semiclab::ExperimentConfig cfg = semiclab::load_config(check_config);
      const semiclab::LadderRun result = semiclab::run_bound_check(check_name, cfg);
      return finish(result, check_out.empty() ? default_dir(cfg, "_" + check_name) : check_out);
    }
    if (*report) {
      std::cout << semiclab::summarize(semiclab::read_report(report_dir));
      return 0;
    }
  } catch (const semiclab::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
