#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semiclab/error.hpp"
#include "semiclab/lab.hpp"

using namespace semiclab;

namespace {

const char* kSmallEvolution = R"(
[experiment]
name = small
type = hartree_vs_vlasov
seed = 3

[kernel]
a = 0.5
softening = auto

[ladder]
hbar = 0.4, 0.2, 0.1
length = 8
xi_extent = 2
min_n = 64

[evolution]
dt = 0.01
t_final = 0.1
record_every = 5

[initial]
variance_x = 0.2
variance_xi = 0.2
)";

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a config error");
  return ErrorCode::Config;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScopedEnv {
  std::string name;
  ScopedEnv(const std::string& n, const std::string& v) : name(n) { setenv(n.c_str(), v.c_str(), 1); }
  ~ScopedEnv() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kSmallEvolution);
  CHECK(c.name == "small");
  CHECK(c.seed == 3);
  CHECK(c.kernel.softening < 0.0);
  CHECK(c.ladder.hbar == std::vector<double>{0.4, 0.2, 0.1});
  CHECK(c.evolution.record_every == 5);
  CHECK(c.norms.empty());

  CHECK(code_of("[experiment]\ntype = nonsense\n") == ErrorCode::Config);
  CHECK(code_of("[experiment]\nbogus = 1\n") == ErrorCode::Config);
  CHECK(code_of("[ladder]\nhbar = 0.1, 0.2\n") == ErrorCode::Config);
  CHECK(code_of("[ladder]\nhbar = 0.2, 0.2\n") == ErrorCode::Config);
  CHECK(code_of("[evolution]\ndt = fast\n") == ErrorCode::Config);
  CHECK(code_of("[initial]\nvariance_x = 0.05\n") == ErrorCode::Config);
  CHECK(code_of("[report]\nnorms = 0.5\n") == ErrorCode::Exponent);
  CHECK(code_of("[kernel]\nd = 3\n") == ErrorCode::Dimension);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), Error);

  const ExperimentConfig inf = parse_config("[report]\nnorms = 4, inf\n");
  CHECK(std::isinf(inf.norms[1]));
  CHECK(to_json(inf)["report"]["norms"][1] == "inf");
}

TEST_CASE("thread cap") {
  {
    ScopedEnv env("LAB_THREADS", "3");
    CHECK(lab_threads() == 3);
  }
  {
    ScopedEnv env("LAB_THREADS", "zero");
    CHECK(lab_threads() >= 1);
  }
}

TEST_CASE("synthetic rate injection") {
  ExperimentConfig c;
  c.experiment = "synthetic";
  c.synthetic_constant = 0.3;
  for (double e : {1.0, 2.0, 0.75}) {
    c.synthetic_exponent = e;
    const LadderRun run = run_experiment(c);
    CHECK(std::abs(run.fits["trace_distance"]["slope"].get<double>() - e) < 1e-6);
    CHECK(run.fits["trace_distance"]["r2"].get<double>() == doctest::Approx(1.0));
  }
  c.ladder.hbar = {0.2, 0.1};
  const LadderRun few = run_experiment(c);
  CHECK(few.fits["trace_distance"]["error"] == "FIT_UNDERDETERMINED");

  c.ladder.hbar = {0.2, 0.1, 0.05, 0.025};
  c.synthetic_noise = 0.05;
  const std::string a = to_json(run_experiment(c)).dump();
  CHECK(a == to_json(run_experiment(c)).dump());
  c.seed = 2;
  CHECK(a != to_json(run_experiment(c)).dump());
}

TEST_CASE("evolution ladder") {
  const ExperimentConfig c = parse_config(kSmallEvolution);
  const LadderRun run = run_experiment(c);
  REQUIRE(run.points.size() == 3);
  CHECK(run.columns == std::vector<std::string>{"mass", "trace", "energy_classical", "energy_quantum", "trace_distance", "l2_distance", "density_l1"});
  for (const auto& p : run.points) {
    CHECK(p.ok);
    CHECK(p.checkpoints.size() == 3);
    for (const auto& cp : p.checkpoints) {
      CHECK(cp.values[6] <= cp.values[4] * (1.0 + 1e-10) + 1e-13);
      CHECK(cp.values[0] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(cp.values[1] == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(p.summary.at("trace_distance") > 0.0);
    CHECK(p.summary.at("softening") == doctest::Approx(2.0 * 8.0 / p.n));
  }
  CHECK(run.fits["trace_distance"].contains("slope"));
  CHECK(run.fits["exchange_size"]["target"].get<double>() == doctest::Approx(0.5));

  SUBCASE("determinism across thread counts") {
    ScopedEnv env("LAB_THREADS", "2");
    CHECK(to_json(run_experiment(c)).dump() == to_json(run).dump());
  }
  SUBCASE("tracked norms add columns") {
    ExperimentConfig c2 = c;
    c2.norms = {4.0};
    c2.ladder.hbar = {0.4};
    const LadderRun r2 = run_experiment(c2);
    CHECK(r2.columns.back() == "lp_4");
    CHECK(r2.fits["trace_distance"]["error"] == "FIT_UNDERDETERMINED");
  }
  SUBCASE("per-point failures are recorded") {
    ExperimentConfig c3 = c;
    c3.memory_budget_mb = 1.0;  // only the n = 64 points fit
    c3.ladder.hbar = {0.4, 0.2, 0.1, 0.05};
    const LadderRun r3 = run_experiment(c3);
    CHECK(r3.points[0].ok);
    CHECK_FALSE(r3.points[3].ok);
    CHECK(r3.points[3].error.find("CONFIG_ERROR") == 0);
    CHECK(r3.notes["failed_points"].get<std::size_t>() >= 1);
  }
  SUBCASE("hartree against hartree-fock") {
    ExperimentConfig c4 = c;
    c4.experiment = "hartree_vs_hf";
    const LadderRun r4 = run_experiment(c4);
    CHECK(r4.columns.size() == 11);
    for (const auto& p : r4.points) CHECK(p.ok);
    CHECK(r4.notes.contains("exchange_subleading"));
  }
}

TEST_CASE("report files round trip") {
  ExperimentConfig c = parse_config(kSmallEvolution);
  c.ladder.hbar = {0.4, 0.2};
  c.norms = {std::numeric_limits<double>::infinity()};
  const LadderRun run = run_experiment(c);
  const auto dir = std::filesystem::temp_directory_path() / "semiclab_report_test";
  std::filesystem::remove_all(dir);
  write_report(run, dir.string());
  for (const char* f : {"report.json", "checkpoints.csv", "series.dat", "timing.json"}) CHECK(std::filesystem::exists(dir / f));

  const LadderRun back = read_report(dir.string());
  CHECK(to_json(back).dump() == to_json(run).dump());
  CHECK(back.points[1].wallclock == run.points[1].wallclock);
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["schema"] == 1);
  CHECK_FALSE(slurp(dir / "report.json").find("wallclock") != std::string::npos);

  const std::string csv = slurp(dir / "checkpoints.csv");
  CHECK(csv.rfind("hbar,n,t,mass,trace,energy_classical,energy_quantum,trace_distance,l2_distance,density_l1,lp_inf\n", 0) == 0);

  // A second run writes a byte-identical report.
  const auto dir2 = std::filesystem::temp_directory_path() / "semiclab_report_test2";
  write_report(run_experiment(c), dir2.string());
  CHECK(slurp(dir / "report.json") == slurp(dir2 / "report.json"));
  CHECK(slurp(dir / "checkpoints.csv") == slurp(dir2 / "checkpoints.csv"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
  CHECK_THROWS_AS(read_report(dir.string()), Error);
}

TEST_CASE("bound checks through the lab") {
  ExperimentConfig c;
  c.ladder.hbar = {0.2, 0.1};
  c.ladder.min_n = 128;
  c.initial.variance_x = 0.2;
  c.initial.variance_xi = 0.1;

  const LadderRun bt = run_bound_check("b_t", c);
  REQUIRE(bt.checks.size() == 1);
  CHECK(bt.checks[0].details["quadratic_zero"].get<bool>());
  CHECK(bt.checks[0].points.size() == 2);

  c.z_points = 4;
  const LadderRun ct = run_bound_check("commutator_trace", c);
  CHECK(ct.checks[0].points.size() == 8);
  CHECK(ct.checks[0].details["translation_ok"].get<bool>());

  const LadderRun gd = run_bound_check("gaussian_decomposition", c);
  CHECK(gd.checks[0].verdict);

  CHECK_THROWS_AS(run_bound_check("nonsense", c), Error);
}
