#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shlaw {

// Whether a point was actually trained or extrapolated by a surrogate.
enum class Provenance { Trained, Predicted };

std::string_view provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view name);

struct ModelSpec {
  std::string id;
  std::int64_t n_params = 1;
  // Tokens consumed per optimizer step; one step costs 6 * n_params * tokens_per_step FLOPs.
  std::int64_t tokens_per_step = 1;

  void validate() const;
};

struct CurvePoint {
  double compute = 0;  // cumulative training FLOPs at this point
  double loss = 0;     // linear-space validation loss
  Provenance provenance = Provenance::Trained;
};

// One model's loss-vs-compute trajectory, strictly increasing in compute.
struct LearningCurve {
  ModelSpec model;
  std::vector<CurvePoint> points;

  void validate() const;

  bool has_trained() const;
  // Largest compute over Trained points; 0 if the curve has no trained point.
  double max_trained_compute() const;
  // Smallest loss over Trained points; +inf if none.
  double min_trained_loss() const;
  // Smallest loss over all points regardless of provenance; +inf if empty.
  double min_loss_any() const;
};

// Immutable collection of curves keyed by model id (insertion order preserved).
class CurveSet {
 public:
  CurveSet() = default;
  explicit CurveSet(std::vector<LearningCurve> curves);

  const LearningCurve* find(std::string_view id) const;
  const std::vector<LearningCurve>& curves() const { return curves_; }
  bool empty() const { return curves_.empty(); }
  std::size_t size() const { return curves_.size(); }

 private:
  std::vector<LearningCurve> curves_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Sum over curves of each curve's maximum compute, counted over Trained points only.
double total_compute(const CurveSet& set);

struct MinLossResult {
  std::string model_id;
  double loss = std::numeric_limits<double>::infinity();
};

// Globally minimal Trained loss; ties broken by smaller n_params, then id.
MinLossResult min_loss(const CurveSet& set);

// CSV exchange format: header "model_id,n_params,compute_flops,loss,provenance",
// rows sorted by (model_id, compute_flops). Round-trips all fields losslessly.
void write_curve_file(const CurveSet& set, std::ostream& os);
void write_curve_file(const CurveSet& set, const std::filesystem::path& path);
CurveSet read_curve_file(std::istream& is);
CurveSet read_curve_file(const std::filesystem::path& path);

}  // namespace shlaw
