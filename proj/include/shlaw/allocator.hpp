#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shlaw/curves.hpp"
#include "shlaw/gp_lmc.hpp"
#include "shlaw/synthgen.hpp"
#include "shlaw/util.hpp"

namespace shlaw {

enum class SurrogateKind { None, Lmc, DePl, DeExp, DeMmf };

std::string_view surrogate_name(SurrogateKind kind);
SurrogateKind surrogate_from_name(std::string_view name);

struct AllocConfig {
  double total_budget = 0;  // FLOPs
  int eta = 2;
  SurrogateKind surrogate = SurrogateKind::None;
  int points_per_curve = 20;  // per-curve subsampling before surrogate fits
  std::uint64_t seed = 0;
  // Surrogate fitting budgets. The defaults keep full campaigns tractable;
  // standalone GP fits outside the allocator default to 20 restarts.
  int gp_restarts = 2;
  int gp_max_iter = 80;
  double gp_tol = 1e-5;
  int de_iterations = 1000;
  int prediction_grid = 256;

  void validate() const;
};

// Training curves for a model pool; implementations must return identical data
// for identical (model, max_compute) requests so paired strategies stay paired.
class CurveSource {
 public:
  virtual ~CurveSource() = default;
  // Trained prefix of the model's curve with compute <= max_compute. May be
  // empty when not even the first checkpoint fits the target.
  virtual LearningCurve slice(const ModelSpec& m, double max_compute) = 0;
  // The model's complete curve (oracles, ground-truth laws).
  virtual LearningCurve full_curve(const ModelSpec& m) = 0;
};

// Pregenerates each model's full (optionally noisy) curve up to `horizon` on a
// log grid once, then serves slices, so every strategy sees the same data.
class SyntheticCurveSource final : public CurveSource {
 public:
  SyntheticCurveSource(const ChinchillaParams& params, const std::vector<ModelSpec>& pool,
                       double horizon, const NoiseConfig& noise, std::uint64_t seed,
                       int grid_points = 512);
  LearningCurve slice(const ModelSpec& m, double max_compute) override;
  LearningCurve full_curve(const ModelSpec& m) override;

 private:
  const LearningCurve& stored(const ModelSpec& m) const;
  std::map<std::string, LearningCurve> curves_;
};

// Serves slices of pre-collected curves (Trained points only).
class RecordedCurveSource final : public CurveSource {
 public:
  explicit RecordedCurveSource(CurveSet curves);
  LearningCurve slice(const ModelSpec& m, double max_compute) override;
  LearningCurve full_curve(const ModelSpec& m) override;
  std::vector<ModelSpec> models() const;
  const CurveSet& full_set() const { return curves_; }

 private:
  CurveSet curves_;
};

// ceil(log_eta(initial_pool)); a singleton pool trains in one round.
int num_rounds(int initial_pool, int eta);
// max(1, floor(pool_size / eta))
int survivor_count(int pool_size, int eta);
// floor(total_budget / (current_pool * num_rounds(initial_pool, eta)))
double round_budget(double total_budget, int current_pool, int initial_pool, int eta);
// Cumulative per-model budget of a full survivor: sum of round budgets over
// the deterministic pool-size schedule.
double projected_final_cumulative(double total_budget, int initial_pool, int eta);

struct StepQuant {
  std::int64_t steps = 0;
  double consumed = 0;  // steps * 6 * n_params * tokens_per_step
};
// Whole optimizer steps affordable under `allocated` FLOPs (exact integer
// arithmetic); leftover carries to the model's next allocation.
StepQuant quantize_steps(double allocated, const ModelSpec& model);

struct SelectionScore {
  std::string model_id;
  double score = 0;  // minimum loss over trained + predicted points
};

struct RoundRecord {
  int round = 0;
  double budget_per_model = 0;  // C_r handed to every live model this round
  double bonus_per_model = 0;   // final-round remainder grant
  std::vector<SelectionScore> scores;  // ranked, best first
  std::vector<std::string> survivors;
  std::vector<std::string> notes;
};

struct AllocationTrace {
  std::vector<RoundRecord> rounds;
  CurveSet final_curves;               // longest trained curve per model
  std::vector<std::string> final_pool;  // survivors after the last round
  double spent = 0;                     // exact total consumed FLOPs
  std::vector<std::string> notes;
};

struct PoolMember {
  ModelSpec model;
  LearningCurve curve;  // trained points only
  flops_t carry = 0;    // allocated-but-unconsumed FLOPs
  flops_t consumed = 0;
};

// Ranks live members by minimum loss over their working curves (ties: smaller
// n_params, then id) and returns the indices of the top max(1, floor(n/eta)).
std::vector<std::size_t> top_k_indices(const std::vector<LearningCurve>& working, int eta);

// One round of training plus optional surrogate extension: extends each live
// member to its new cumulative target and returns working curves carrying
// Predicted tails out to `final_cumulative` when a surrogate is configured.
// The per-model budget is integral so carries and totals stay exact.
std::vector<LearningCurve> obtain_lcs(std::vector<PoolMember>& live, flops_t budget_per_model,
                                      double final_cumulative, const AllocConfig& cfg,
                                      CurveSource& source, int round,
                                      std::optional<KernelHyperparams>* warm_start,
                                      std::vector<std::string>* notes);

AllocationTrace run_sh(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                       CurveSource& source);
AllocationTrace run_uniform(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                            CurveSource& source);

struct OracleResult {
  std::string model_id;
  double loss = 0;
};
// Best loss attainable by any single pool model surviving every round under
// the same quantized accounting (regret reference and optimality filter).
OracleResult pool_oracle(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                         CurveSource& source);

}  // namespace shlaw
