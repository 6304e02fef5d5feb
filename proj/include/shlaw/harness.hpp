#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shlaw/allocator.hpp"
#include "shlaw/scaling_law.hpp"
#include "shlaw/synthgen.hpp"

namespace shlaw {

enum class Strategy { UA, SH, SH_LMC, SH_DE_PL, SH_DE_EXP, SH_DE_MMF };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

enum class DatasetKind { SyntheticHoffmann, SyntheticBesiroglu, RecordedFile };

std::string_view dataset_name(DatasetKind d);
DatasetKind dataset_from_name(std::string_view name);

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::SyntheticHoffmann;
  std::string recorded_path;  // curve file when dataset == RecordedFile
  std::vector<int> pool_sizes;
  std::vector<double> budgets_pflops;  // converted to FLOPs at 1e15
  std::vector<Strategy> strategies;
  int runs = 100;
  NoiseConfig noise;
  double region_lo = 1e18;
  double region_hi = 1e20;
  std::uint64_t base_seed = 0;
  int eta = 2;
  int points_per_curve = 20;
  // Surrogate fitting budgets passed through to the allocator.
  int gp_restarts = 2;
  int gp_max_iter = 80;
  double gp_tol = 1e-5;
  int de_iterations = 1000;
  int prediction_grid = 256;
  // Post-allocation GP extrapolation (laws with confidence bounds).
  bool extrapolate = false;
  double z = 2.0;

  void validate() const;
};

// Per-(cell, strategy) aggregates. Paired statistics versus SH are computed
// over runs where both sides succeeded; improvement/degradation additionally
// condition on runs where SH does not attain the pool oracle. NaN marks an
// aggregate with no contributing runs.
struct StrategyStats {
  Strategy strategy = Strategy::SH;
  int runs_attempted = 0;
  int runs_failed = 0;
  double mean_loss = 0;
  double loss_std = 0;
  double mean_improvement = 0;
  double max_improvement = 0;
  double mean_degradation = 0;
  double max_degradation = 0;  // most negative observed value
  int wins = 0;
  int equals = 0;
  int losses = 0;
  double mean_regret = 0;
  double mean_abc_full_data = 0;
  double mean_abc_entire_lcs = 0;
  double mean_abc_gp_mean = 0;
  double mean_abc_gp_ucb = 0;
  double mean_abc_gp_lcb = 0;
  double mean_spent = 0;     // FLOPs
  double cost_saving = 0;    // vs mean full-training cost of the run pools
  std::uint64_t pool_hash = 0;  // folded over the pools this strategy received
  std::vector<std::string> failures;
  std::vector<std::string> winners;  // selected model id per successful run

  // Exemplar artifacts from the first successful run (plot data).
  CurveSet exemplar_curves;
  std::optional<PowerScalingLaw> exemplar_law;
  std::optional<ExtrapolatedLaws> exemplar_extrapolated;
};

struct CellReport {
  int pool_size = 0;
  double budget_pflops = 0;
  std::uint64_t pool_hash = 0;  // canonical per-run pool fold for the cell
  double oracle_mean_loss = 0;
  int conditioning_runs = 0;  // runs where SH does not attain the oracle
  std::vector<StrategyStats> strategies;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellReport> cells;
};

// (l_sh - l_surr) / l_sh; positive when the surrogate strategy is better.
double relative_improvement(double l_sh, double l_surr);

// obtained - oracle. The oracle must be finite ("available").
double regret(double obtained, double oracle);

// 1 - budget / full_training_cost; negative (with *warning set when provided)
// if full training costs less than the budget.
double cost_saving(double budget, double full_training_cost, std::string* warning = nullptr);

ExperimentReport run_campaign(const ExperimentConfig& config);

// Delimiter-separated per-(cell, strategy) table of every aggregate.
void emit_table(const ExperimentReport& report, std::ostream& os);
// Exemplar curve series and fitted-law samples for external plotting.
void emit_plotdata(const ExperimentReport& report, std::ostream& os);

}  // namespace shlaw
