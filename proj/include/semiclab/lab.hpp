#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "semiclab/dynamics.hpp"
#include "semiclab/estimates.hpp"
#include "semiclab/kernel.hpp"

namespace semiclab {

constexpr int kReportSchema = 1;

struct InitialData {
  std::string kind = "gaussian";  // gaussian | double_bump
  double center_x = 0.0;
  double center_xi = 0.0;
  double variance_x = 0.1;
  double variance_xi = 0.1;
  double separation = 1.5;  // double_bump: bump centers at center_x -/+ separation / 2
  double weight = 0.5;      // double_bump: mass of the left bump
};

// Normalized phase-space density on the given grid.
PhaseSpaceField build_initial(const InitialData& init, const PhaseSpaceGrid& grid);
// Same data as a pointwise function of (x, xi).
Symbol initial_symbol(const InitialData& init);

struct ExperimentConfig {
  std::string name = "run";
  std::string experiment = "hartree_vs_vlasov";
  std::uint64_t seed = 1;
  KernelSpec kernel{1, 0.5, false, 1.0, -1.0};
  LadderSpec ladder;
  EvolutionConfig evolution{1e-3, 0.5, 0.1, 50};
  InitialData initial;
  std::vector<double> norms;  // extra L^p distances tracked at checkpoints
  double slope_target = 1.0;
  double slope_band = 0.25;
  bool self_convergence = false;  // rerun the finest point at 2n and report the grid error
  double memory_budget_mb = 4096.0;

  // bound checks
  double factor = 10.0;
  int z_points = 8;
  double z_extent = 1.5;  // z spread uniformly over [-z_extent, z_extent]
  double lp = 1.0;
  int weight_n = 2;
  int weight_n1 = 2;
  std::vector<double> radii{0.05, 0.1, 0.3, 1.0, 3.0};
  std::vector<double> perturbations{0.01, 0.05, 0.1};
  double moment_p = 2.0;
  double moment_n = 2.0;
  std::size_t classical_n = 128;
  double classical_xi_length = 8.0;

  // synthetic rate injection
  double synthetic_exponent = 1.0;
  double synthetic_constant = 1.0;
  double synthetic_noise = 0.0;  // relative log-normal noise, seeded

  std::string output_dir;
};

// Flat INI-style text: [section] headers with key = value lines; lists are comma separated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Checkpoint {
  double t = 0.0;
  std::vector<double> values;  // aligned with LadderRun::columns
};

struct LadderPoint {
  double hbar = 0.0;
  std::size_t n = 0;
  bool ok = true;
  std::string error;
  std::vector<Checkpoint> checkpoints;
  std::map<std::string, double> summary;  // final-time errors and per-point scalars
  double wallclock = 0.0;                 // seconds; written to timing.json only
};

struct LadderRun {
  int schema = kReportSchema;
  std::string name;
  std::string experiment;
  nlohmann::json config;
  std::vector<std::string> columns;
  std::vector<LadderPoint> points;
  nlohmann::json fits = nlohmann::json::object();  // metric -> {slope, intercept, r2, ...} or {error}
  std::vector<BoundCheck> checks;
  nlohmann::json notes = nlohmann::json::object();
};

// Maximum parallel jobs: LAB_THREADS if set and positive, else the hardware concurrency.
unsigned lab_threads();

LadderRun run_experiment(const ExperimentConfig& cfg);
// Runs one named bound check through the configured ladder.
LadderRun run_bound_check(const std::string& name, const ExperimentConfig& cfg);

nlohmann::json to_json(const LadderRun& run);
LadderRun ladder_run_from_json(const nlohmann::json& j);

// report.json, checkpoints.csv, series.dat, timing.json under dir.
void write_report(const LadderRun& run, const std::string& dir);
LadderRun read_report(const std::string& dir);
// Human-readable summary of a stored run.
std::string summarize(const LadderRun& run);

}  // namespace semiclab
