#pragma once

// Monte Carlo harness: one trial runs synthesis -> ADMM -> on-grid picks ->
// off-grid refinement; sweeps aggregate RMSE over trials whose worst matched
// error is below the 3 degree gate.

#include "robust_doa/admm.hpp"
#include "robust_doa/array_model.hpp"
#include "robust_doa/music.hpp"
#include "robust_doa/offgrid.hpp"
#include "robust_doa/types.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <locale>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace robust_doa {

inline constexpr double kInclusionGateDeg = 3.0;

enum class PickRule { kTopRows, kPeaks };

struct PipelineOptions {
  PickRule pick = PickRule::kPeaks;
  bool refine = true;
  /// Cap each refinement step at half the grid spacing.
  bool clamp_refine_step = true;
  RefineOptions refine_options{};
};

struct PipelineOutput {
  AdmmResult admm;
  OnGridPicks picks;
  std::optional<RefineResult> refined;
  /// Refined angles, or the on-grid picks when refinement is off or failed.
  std::vector<double> doas_deg;
  bool refine_failed = false;
};

/// Full estimator on one data matrix. Refinement failures fall back to the
/// on-grid angles; ADMM divergence propagates as DivergenceError.
inline PipelineOutput estimate_doas(const ComplexMatrix& y, const ArrayGeometry& geometry,
                                    const AngleGrid& grid, std::size_t num_sources,
                                    const AdmmConfig& cfg, const PipelineOptions& opts = {}) {
  if (num_sources == 0 || grid.size() <= 2 * num_sources)
    throw DomainError("grid must have more than 2K points");
  PipelineOutput out;
  out.admm = solve(grid_dictionary(geometry, grid), y, cfg);
  out.picks = opts.pick == PickRule::kPeaks ? pick_peaks(out.admm.X, grid, num_sources)
                                            : pick_on_grid(out.admm.X, grid, num_sources);
  out.doas_deg = out.picks.angles_deg;
  if (opts.refine) {
    RefineOptions ro = opts.refine_options;
    if (opts.clamp_refine_step && !ro.max_step_deg) ro.max_step_deg = grid.spacing_deg() / 2.0;
    try {
      out.refined = refine(y, out.admm.O, out.picks, geometry, ro);
      out.doas_deg = out.refined->doas_deg;
    } catch (const RefinementError&) {
      out.refine_failed = true;
    }
  }
  return out;
}

struct TrialEstimate {
  std::vector<double> estimated_doas_deg;
  std::vector<double> true_doas_deg;
  /// |estimate - truth| per true source after optimal assignment.
  std::vector<double> matched_errors_deg;
  bool included_in_rmse = false;
  bool resolved = false;
  int solver_iterations = 0;
  bool failed = false;
  bool refine_failed = false;
  /// On-grid picks before refinement and their matched errors.
  std::vector<double> ongrid_doas_deg;
  std::vector<double> ongrid_errors_deg;
  double runtime_ms = 0.0;
};

/// Assigns estimates to truths minimizing the total absolute error (exhaustive
/// over permutations) and returns the errors in truth order.
///
/// In 1-D the total absolute error is often tied between assignments (nested
/// intervals), so ties up to rounding are broken by the smaller sum of squares.
/// Without that the result would depend on the order of the estimates.
inline std::vector<double> match_errors(std::span<const double> estimated,
                                        std::span<const double> truth) {
  if (estimated.size() != truth.size())
    throw DomainError("estimate and truth counts differ");
  if (truth.size() > 8) throw DomainError("exhaustive matching supports at most 8 sources");
  const std::size_t k = truth.size();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  double best_total = std::numeric_limits<double>::infinity();
  double best_sq = std::numeric_limits<double>::infinity();
  std::vector<double> errs(k);
  do {
    double total = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      errs[i] = std::abs(estimated[perm[i]] - truth[i]);
      total += errs[i];
      sq += errs[i] * errs[i];
    }
    const double slack = 1e-9 * (1.0 + std::min(total, best_total));
    const bool better = total < best_total - slack ||
                        (std::abs(total - best_total) <= slack && sq < best_sq);
    if (better) {
      best_total = total;
      best_sq = sq;
      best = errs;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Two sources count as resolved when both matched errors are below half
/// their separation.
inline bool resolution_flag(const TrialEstimate& e) {
  if (e.true_doas_deg.size() != 2 || e.matched_errors_deg.size() != 2)
    throw DomainError("resolution is defined for exactly two sources");
  const double half_sep = std::abs(e.true_doas_deg[0] - e.true_doas_deg[1]) / 2.0;
  return std::max(e.matched_errors_deg[0], e.matched_errors_deg[1]) < half_sep;
}

/// Fills the matched errors and the gate/resolution flags from the angles.
inline TrialEstimate make_estimate(std::vector<double> estimated, std::vector<double> truth) {
  TrialEstimate e;
  e.matched_errors_deg = match_errors(estimated, truth);
  e.estimated_doas_deg = std::move(estimated);
  e.true_doas_deg = std::move(truth);
  e.included_in_rmse = *std::max_element(e.matched_errors_deg.begin(),
                                         e.matched_errors_deg.end()) < kInclusionGateDeg;
  e.resolved = e.true_doas_deg.size() == 2 && resolution_flag(e);
  return e;
}

inline TrialEstimate failed_estimate(std::vector<double> truth) {
  TrialEstimate e;
  e.failed = true;
  e.true_doas_deg = std::move(truth);
  return e;
}

/// Synthesizes the scenario and runs the proposed estimator. Solver divergence
/// is recorded as a failed, excluded trial.
inline TrialEstimate run_trial(const ArrayScenario& scenario, const AngleGrid& grid,
                               const AdmmConfig& cfg, const PipelineOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  const SnapshotData data = synthesize(scenario);
  TrialEstimate e;
  try {
    const PipelineOutput out = estimate_doas(data.observations, scenario.geometry, grid,
                                             scenario.num_sources(), cfg, opts);
    e = make_estimate(out.doas_deg, scenario.true_doas_deg);
    e.solver_iterations = out.admm.iterations;
    e.refine_failed = out.refine_failed;
    e.ongrid_doas_deg = out.picks.angles_deg;
    e.ongrid_errors_deg = match_errors(e.ongrid_doas_deg, e.true_doas_deg);
  } catch (const DivergenceError& err) {
    e = failed_estimate(scenario.true_doas_deg);
    e.solver_iterations = err.iteration();
  }
  e.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return e;
}

/// Same data as run_trial, estimated with grid MUSIC.
inline TrialEstimate run_music_trial(const ArrayScenario& scenario, const AngleGrid& grid) {
  const auto start = std::chrono::steady_clock::now();
  const SnapshotData data = synthesize(scenario);
  TrialEstimate e = make_estimate(
      music_baseline(data.observations, grid, scenario.num_sources(), scenario.geometry),
      scenario.true_doas_deg);
  e.ongrid_doas_deg = e.estimated_doas_deg;
  e.ongrid_errors_deg = e.matched_errors_deg;
  e.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return e;
}

struct RmseSummary {
  /// Absent when no trial passed the gate.
  std::optional<double> rmse_deg;
  double inclusion_fraction = 0.0;
  std::size_t included = 0;
};

/// sqrt(sum of squared matched errors / (N_included * K)) over gated trials;
/// the inclusion fraction is over all trials.
inline RmseSummary rmse(std::span<const TrialEstimate> estimates) {
  if (estimates.empty()) throw DomainError("rmse needs at least one trial");
  double sum_sq = 0.0;
  std::size_t terms = 0;
  RmseSummary s;
  for (const auto& e : estimates) {
    if (!e.included_in_rmse) continue;
    ++s.included;
    for (double err : e.matched_errors_deg) {
      sum_sq += err * err;
      ++terms;
    }
  }
  s.inclusion_fraction = static_cast<double>(s.included) / static_cast<double>(estimates.size());
  if (terms > 0) s.rmse_deg = std::sqrt(sum_sq / static_cast<double>(terms));
  return s;
}

enum class SweepAxis { kSnr, kSnapshots, kOutlierProb, kSeparation, kCoherentSnr };

inline std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSnr: return "snr";
    case SweepAxis::kSnapshots: return "snapshots";
    case SweepAxis::kOutlierProb: return "outlier_prob";
    case SweepAxis::kSeparation: return "separation";
    case SweepAxis::kCoherentSnr: return "coherent_snr";
  }
  return "unknown";
}

struct AngleInterval {
  double lo_deg;
  double hi_deg;
};

struct ExperimentSpec {
  /// Fields not driven by the axis are taken from here. true_doas_deg and
  /// rng_seed are overwritten per trial.
  ArrayScenario scenario_template{};
  SweepAxis sweep_axis = SweepAxis::kSnr;
  std::vector<double> sweep_values;
  int num_trials = 100;
  double grid_spacing_deg = 2.0;
  std::uint64_t master_seed = 1;
  /// One DOA per interval, drawn uniformly each trial (non-separation axes).
  std::vector<AngleInterval> doa_intervals{{-10.0, 0.0}, {20.0, 30.0}};
  /// First source of the separation sweep; the second sits at anchor + value.
  double separation_anchor_deg = -10.8;
  /// Fixed solver settings; unset selects the SNR preset per axis value.
  std::optional<AdmmConfig> admm{};
  /// Overrides max_iters of whichever solver config is in effect.
  std::optional<int> max_iters{};
  PipelineOptions pipeline{};
  bool music_baseline = false;
  /// Wall-clock timing makes the CSV non-reproducible, so it is opt-in.
  bool record_timing = false;
  unsigned threads = 0;

  void validate() const {
    if (sweep_values.empty()) throw DomainError("sweep needs at least one value");
    if (!std::is_sorted(sweep_values.begin(), sweep_values.end()))
      throw DomainError("sweep values must be sorted");
    if (num_trials < 1) throw DomainError("num_trials must be at least 1");
    if (sweep_axis != SweepAxis::kSeparation && doa_intervals.empty())
      throw DomainError("need at least one DOA interval");
    for (const auto& iv : doa_intervals)
      if (!(iv.lo_deg <= iv.hi_deg) || iv.lo_deg <= -90.0 || iv.hi_deg >= 90.0)
        throw DomainError("DOA intervals must be ordered and inside (-90, 90)");
    if (admm) admm->validate();
    if (max_iters && *max_iters < 1) throw DomainError("max_iters must be positive");
    AngleGrid::uniform(grid_spacing_deg);
  }
};

/// Scenario for one (axis value, trial) cell; deterministic in
/// (master_seed, axis_index, trial_index).
inline ArrayScenario make_trial_scenario(const ExperimentSpec& spec, std::size_t axis_index,
                                         std::size_t trial_index) {
  ArrayScenario s = spec.scenario_template;
  const double v = spec.sweep_values.at(axis_index);
  std::mt19937_64 rng(derive_seed(spec.master_seed, axis_index, trial_index));

  switch (spec.sweep_axis) {
    case SweepAxis::kSnr: s.snr_db = v; break;
    case SweepAxis::kSnapshots:
      if (!(v >= 1.0) || v != std::floor(v)) throw DomainError("snapshot counts must be integers >= 1");
      s.num_snapshots = static_cast<int>(v);
      break;
    case SweepAxis::kOutlierProb: s.outlier_prob = v; break;
    case SweepAxis::kSeparation: break;
    case SweepAxis::kCoherentSnr:
      s.snr_db = v;
      s.coherent = true;
      break;
  }

  if (spec.sweep_axis == SweepAxis::kSeparation) {
    s.true_doas_deg = {spec.separation_anchor_deg, spec.separation_anchor_deg + v};
  } else {
    s.true_doas_deg.clear();
    for (const auto& iv : spec.doa_intervals)
      s.true_doas_deg.push_back(std::uniform_real_distribution<double>(iv.lo_deg, iv.hi_deg)(rng));
  }
  s.rng_seed = rng();
  return s;
}

inline AdmmConfig admm_for(const ExperimentSpec& spec, const ArrayScenario& s) {
  AdmmConfig cfg = spec.admm ? *spec.admm : AdmmConfig::preset_for_snr(s.snr_db);
  if (spec.max_iters) cfg.max_iters = *spec.max_iters;
  return cfg;
}

namespace detail {

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// its own slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Proposed-method trials for one axis value, in trial-index order.
inline std::vector<TrialEstimate> run_axis_trials(const ExperimentSpec& spec,
                                                  std::size_t axis_index) {
  const AngleGrid grid = AngleGrid::uniform(spec.grid_spacing_deg);
  std::vector<TrialEstimate> out(static_cast<std::size_t>(spec.num_trials));
  detail::parallel_for(out.size(), spec.threads, [&](std::size_t j) {
    const ArrayScenario s = make_trial_scenario(spec, axis_index, j);
    out[j] = run_trial(s, grid, admm_for(spec, s), spec.pipeline);
  });
  return out;
}

inline std::vector<TrialEstimate> run_axis_music_trials(const ExperimentSpec& spec,
                                                        std::size_t axis_index) {
  const AngleGrid grid = AngleGrid::uniform(spec.grid_spacing_deg);
  std::vector<TrialEstimate> out(static_cast<std::size_t>(spec.num_trials));
  detail::parallel_for(out.size(), spec.threads, [&](std::size_t j) {
    out[j] = run_music_trial(make_trial_scenario(spec, axis_index, j), grid);
  });
  return out;
}

struct SweepResult {
  SweepAxis axis = SweepAxis::kSnr;
  double axis_value = 0.0;
  std::string method;
  std::optional<double> rmse_deg;
  double inclusion_fraction = 0.0;
  /// Separation sweeps only.
  std::optional<double> resolution_prob;
  std::optional<double> mean_iterations;
  std::optional<double> mean_runtime_ms;
  int trials = 0;
  int failed_trials = 0;
  std::uint64_t seed = 0;
};

inline SweepResult summarize(const ExperimentSpec& spec, std::size_t axis_index,
                             std::string method, std::span<const TrialEstimate> trials,
                             bool iterative) {
  SweepResult r;
  r.axis = spec.sweep_axis;
  r.axis_value = spec.sweep_values.at(axis_index);
  r.method = std::move(method);
  r.trials = static_cast<int>(trials.size());
  r.seed = spec.master_seed;
  const RmseSummary s = rmse(trials);
  r.rmse_deg = s.rmse_deg;
  r.inclusion_fraction = s.inclusion_fraction;

  double iters = 0.0;
  double runtime = 0.0;
  int resolved = 0;
  for (const auto& t : trials) {
    iters += t.solver_iterations;
    runtime += t.runtime_ms;
    if (t.failed) ++r.failed_trials;
    if (t.resolved) ++resolved;
  }
  const double n = static_cast<double>(trials.size());
  if (iterative) r.mean_iterations = iters / n;
  if (spec.record_timing) r.mean_runtime_ms = runtime / n;
  if (spec.sweep_axis == SweepAxis::kSeparation) r.resolution_prob = resolved / n;
  return r;
}

struct SweepReport {
  std::vector<SweepResult> rows;
  /// Some axis value had every proposed-method trial fail numerically.
  bool numerical_failure = false;
};

inline SweepReport run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  SweepReport report;
  for (std::size_t a = 0; a < spec.sweep_values.size(); ++a) {
    const auto trials = run_axis_trials(spec, a);
    SweepResult row = summarize(spec, a, "proposed", trials, true);
    if (row.failed_trials == row.trials) report.numerical_failure = true;
    report.rows.push_back(std::move(row));
    if (spec.music_baseline)
      report.rows.push_back(summarize(spec, a, "music", run_axis_music_trials(spec, a), false));
  }
  return report;
}

namespace detail {

inline std::string format_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  os << v;
  return os.str();
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string{};
}

}  // namespace detail

inline constexpr std::string_view kCsvHeader =
    "axis_name,axis_value,method,rmse_deg,inclusion_fraction,resolution_prob,mean_iterations,"
    "mean_runtime_ms,trials,seed";

inline void write_csv(std::ostream& os, std::span<const SweepResult> rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << axis_name(r.axis) << ',' << detail::format_number(r.axis_value) << ',' << r.method
       << ',' << detail::format_optional(r.rmse_deg) << ','
       << detail::format_number(r.inclusion_fraction) << ','
       << detail::format_optional(r.resolution_prob) << ','
       << detail::format_optional(r.mean_iterations) << ','
       << detail::format_optional(r.mean_runtime_ms) << ',' << r.trials << ',' << r.seed << '\n';
  }
}

}  // namespace robust_doa
