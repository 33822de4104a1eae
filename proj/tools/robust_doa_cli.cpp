// robust_doa command-line front end: single-scenario solves and Monte Carlo
// sweeps written as CSV.

#include "robust_doa/bench.hpp"
#include "robust_doa/config.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using robust_doa::SweepAxis;

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kFullScaleTrials = 1000;

struct SweepCommand {
  SweepAxis axis;
  std::vector<double> default_values;
  CLI::App* app = nullptr;
};

struct SweepFlags {
  int trials = 100;
  std::uint64_t seed = 1;
  double grid_spacing = 2.0;
  std::string out;
  std::string baseline;
  bool full_scale = false;
  std::vector<double> values;
  double snr = 10.0;
  double sor = -20.0;
  int snapshots = 30;
  double outlier_prob = 0.1;
  int elements = 10;
  unsigned threads = 0;
  bool timing = false;
  std::optional<int> max_iters;
};

nlohmann::json solve_to_json(const robust_doa::RunConfig& cfg) {
  using namespace robust_doa;
  const AngleGrid grid = AngleGrid::uniform(cfg.grid_spacing_deg);
  const SnapshotData data = synthesize(cfg.scenario);
  const PipelineOutput out = estimate_doas(data.observations, cfg.scenario.geometry, grid,
                                           cfg.scenario.num_sources(), cfg.effective_admm(),
                                           cfg.pipeline);

  nlohmann::json support = nlohmann::json::array();
  for (Eigen::Index t = 0; t < out.admm.O.cols(); ++t)
    for (Eigen::Index m = 0; m < out.admm.O.rows(); ++m)
      if (out.admm.O(m, t) != Complex(0.0, 0.0)) support.push_back({m, t});

  nlohmann::json j;
  j["true_doas_deg"] = cfg.scenario.true_doas_deg;
  j["doas_deg"] = out.doas_deg;
  j["ongrid_doas_deg"] = out.picks.angles_deg;
  j["matched_errors_deg"] = match_errors(out.doas_deg, cfg.scenario.true_doas_deg);
  j["outlier_support"] = support;
  j["admm"] = {{"iterations", out.admm.iterations}, {"converged", out.admm.converged}};
  nlohmann::json refine_info = {{"enabled", cfg.pipeline.refine}, {"failed", out.refine_failed}};
  if (out.refined) {
    refine_info["iterations"] = out.refined->iterations;
    refine_info["converged"] = out.refined->converged;
    refine_info["gaps_deg"] = out.refined->gaps_deg;
  }
  j["refine"] = refine_info;
  return j;
}

int write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    return kExitBadConfig;
  }
  f << text;
  return kExitOk;
}

int run_solve(const std::string& config_path, const std::string& out_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return kExitBadConfig;
  }
  robust_doa::RunConfig cfg;
  try {
    cfg = robust_doa::parse_run_config(in);
  } catch (const robust_doa::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  try {
    return write_output(out_path, solve_to_json(cfg).dump(2) + "\n");
  } catch (const robust_doa::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const robust_doa::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
}

int run_sweep_command(const SweepCommand& cmd, const SweepFlags& f) {
  using namespace robust_doa;
  ExperimentSpec spec;
  spec.sweep_axis = cmd.axis;
  spec.sweep_values = f.values.empty() ? cmd.default_values : f.values;
  spec.num_trials = f.full_scale ? kFullScaleTrials : f.trials;
  spec.master_seed = f.seed;
  spec.grid_spacing_deg = f.grid_spacing;
  spec.music_baseline = f.baseline == "music";
  spec.record_timing = f.timing;
  spec.threads = f.threads;
  spec.scenario_template.geometry.num_elements = f.elements;
  spec.scenario_template.snr_db = f.snr;
  spec.scenario_template.sor_db = f.sor;
  spec.scenario_template.num_snapshots = f.snapshots;
  spec.scenario_template.outlier_prob = f.outlier_prob;
  spec.max_iters = f.max_iters;

  SweepReport report;
  try {
    report = run_sweep(spec);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }

  std::ostringstream csv;
  write_csv(csv, report.rows);
  const int rc = write_output(f.out, csv.str());
  if (rc != kExitOk) return rc;
  if (report.numerical_failure) {
    std::cerr << "error: every trial failed numerically for some axis value\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust DOA estimation: sparse recovery with MLC-penalized outliers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string solve_out;
  auto* solve = app.add_subcommand("solve", "Solve one scenario from a JSON config; prints JSON");
  solve->add_option("config", config_path, "Path to the JSON config")->required();
  solve->add_option("--out", solve_out, "Write the JSON result here instead of stdout");

  SweepFlags flags;
  std::vector<SweepCommand> sweeps = {
      {SweepAxis::kSnr, {0, 5, 10, 15, 20}},
      {SweepAxis::kSnapshots, {10, 20, 30, 50, 100}},
      {SweepAxis::kOutlierProb, {0.02, 0.05, 0.1, 0.15, 0.2}},
      {SweepAxis::kSeparation, {0.5, 1, 2, 4, 6, 8, 10}},
      {SweepAxis::kCoherentSnr, {0, 5, 10, 15, 20}},
  };
  const std::map<SweepAxis, std::pair<const char*, const char*>> names = {
      {SweepAxis::kSnr, {"sweep-snr", "RMSE versus SNR (dB)"}},
      {SweepAxis::kSnapshots, {"sweep-snapshots", "RMSE versus snapshot count"}},
      {SweepAxis::kOutlierProb, {"sweep-outlier-prob", "RMSE versus outlier probability"}},
      {SweepAxis::kSeparation, {"sweep-separation", "Resolution versus angular separation (deg)"}},
      {SweepAxis::kCoherentSnr, {"sweep-coherent", "RMSE versus SNR with coherent sources"}},
  };
  for (auto& s : sweeps) {
    const auto& [name, help] = names.at(s.axis);
    s.app = app.add_subcommand(name, help);
    auto* sub = s.app;
    sub->add_option("--trials", flags.trials, "Monte Carlo trials per axis value")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--grid-spacing", flags.grid_spacing, "Grid spacing in degrees");
    sub->add_option("--out", flags.out, "CSV output path (stdout if omitted)");
    sub->add_option("--baseline", flags.baseline, "Add a comparator row per axis value")
        ->check(CLI::IsMember({"music"}));
    sub->add_flag("--full-scale", flags.full_scale, "Run 1000 trials per axis value");
    sub->add_option("--values", flags.values, "Override the swept values")->delimiter(',');
    sub->add_option("--snr", flags.snr, "SNR in dB when not swept");
    sub->add_option("--sor", flags.sor, "Signal-to-outlier ratio in dB");
    sub->add_option("--snapshots", flags.snapshots, "Snapshots when not swept");
    sub->add_option("--outlier-prob", flags.outlier_prob, "Outlier probability when not swept");
    sub->add_option("--elements", flags.elements, "Number of array elements");
    sub->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
    sub->add_flag("--timing", flags.timing, "Fill mean_runtime_ms (output no longer reproducible)");
    sub->add_option("--max-iters", flags.max_iters, "ADMM iteration cap");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  if (solve->parsed()) return run_solve(config_path, solve_out);
  for (const auto& s : sweeps)
    if (s.app->parsed()) return run_sweep_command(s, flags);
  return kExitBadConfig;
}
