#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shlaw/curves.hpp"

namespace shlaw {

// Affine maps used before handing curves to surrogates: compute to [0, 1],
// loss to [0, loss_scale_max]. Bounds live in the same units as the values
// being normalized (callers working in log space pass log-space bounds).
struct NormalizationSpec {
  double compute_lo = 0;
  double compute_hi = 1;
  double loss_lo = 0;
  double loss_hi = 1;
  double loss_scale_max = 10.0;

  void validate() const;

  double norm_compute(double c) const { return (c - compute_lo) / (compute_hi - compute_lo); }
  double denorm_compute(double x) const { return compute_lo + x * (compute_hi - compute_lo); }
  double norm_loss(double l) const {
    return (l - loss_lo) / (loss_hi - loss_lo) * loss_scale_max;
  }
  double denorm_loss(double y) const {
    return loss_lo + y / loss_scale_max * (loss_hi - loss_lo);
  }
};

// Savitzky-Golay least-squares smoothing of the loss values in index space.
// Endpoints are handled by evaluating the boundary window's fitted polynomial
// at the boundary offsets. Curves shorter than the window are returned
// unchanged; *too_short is set when provided.
LearningCurve savgol_smooth(const LearningCurve& curve, int window, int poly_order,
                            bool* too_short = nullptr);

// Raw-vector variant used by the curve-based overload and by recorded-data
// ingestion paths.
std::vector<double> savgol_smooth(std::span<const double> values, int window, int poly_order,
                                  bool* too_short = nullptr);

// Applies the spec's affine maps per point. Compute outside
// [compute_lo, compute_hi] (beyond a tiny relative slack) raises an error
// naming the offending point; losses may map outside [0, loss_scale_max].
LearningCurve normalize(const LearningCurve& curve, const NormalizationSpec& spec);

// k points evenly spaced in log-compute, always including the first and last
// point; the result is a subsequence of the input. Curves with <= k points are
// returned whole.
LearningCurve subsample(const LearningCurve& curve, int k);
std::vector<std::size_t> subsample_indices(std::span<const double> compute, int k);

}  // namespace shlaw
