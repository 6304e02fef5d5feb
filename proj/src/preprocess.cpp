#include "shlaw/preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

void NormalizationSpec::validate() const {
  if (!(compute_hi > compute_lo)) fail("normalization: compute_hi must exceed compute_lo");
  if (!(loss_hi > loss_lo)) fail("normalization: loss_hi must exceed loss_lo");
  if (!(loss_scale_max > 0)) fail("normalization: loss_scale_max must be positive");
}

std::vector<double> savgol_smooth(std::span<const double> values, int window, int poly_order,
                                  bool* too_short) {
  if (window < 1 || window % 2 == 0) fail("savgol: window must be odd and positive");
  if (poly_order < 0 || poly_order >= window)
    fail("savgol: polynomial order must be in [0, window)");
  if (too_short) *too_short = false;

  std::vector<double> out(values.begin(), values.end());
  const int n = static_cast<int>(values.size());
  if (n < window) {
    if (too_short) *too_short = true;
    return out;
  }

  // Least-squares projection onto degree-`poly_order` polynomials over the
  // window, sampled at integer offsets -h..h. Row t+h of P gives the fitted
  // value at offset t, so interior points use row h and the boundary windows
  // use the remaining rows (polynomial boundary handling).
  const int h = window / 2;
  Eigen::MatrixXd a(window, poly_order + 1);
  for (int r = 0; r < window; ++r) {
    double x = r - h, p = 1.0;
    for (int c = 0; c <= poly_order; ++c) {
      a(r, c) = p;
      p *= x;
    }
  }
  Eigen::MatrixXd proj = a * (a.transpose() * a).ldlt().solve(a.transpose());

  auto window_dot = [&](int row, int start) {
    double s = 0;
    for (int j = 0; j < window; ++j) s += proj(row, j) * values[start + j];
    return s;
  };
  for (int i = 0; i < h; ++i) out[i] = window_dot(i, 0);
  for (int i = h; i < n - h; ++i) out[i] = window_dot(h, i - h);
  for (int i = n - h; i < n; ++i) out[i] = window_dot(i - (n - window), n - window);
  return out;
}

LearningCurve savgol_smooth(const LearningCurve& curve, int window, int poly_order,
                            bool* too_short) {
  curve.validate();
  std::vector<double> losses(curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) losses[i] = curve.points[i].loss;
  std::vector<double> smoothed = savgol_smooth(losses, window, poly_order, too_short);
  LearningCurve out = curve;
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i].loss = smoothed[i];
  return out;
}

LearningCurve normalize(const LearningCurve& curve, const NormalizationSpec& spec) {
  spec.validate();
  const double slack = 1e-9 * (spec.compute_hi - spec.compute_lo);
  LearningCurve out = curve;
  out.model = curve.model;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    double c = curve.points[i].compute;
    if (c < spec.compute_lo - slack || c > spec.compute_hi + slack)
      fail("normalize: curve '" + curve.model.id + "' point " + std::to_string(i) +
           " compute " + std::to_string(c) + " lies outside [" +
           std::to_string(spec.compute_lo) + ", " + std::to_string(spec.compute_hi) + "]");
    out.points[i].compute = spec.norm_compute(c);
    out.points[i].loss = spec.norm_loss(curve.points[i].loss);
  }
  return out;
}

std::vector<std::size_t> subsample_indices(std::span<const double> compute, int k) {
  if (k < 2) fail("subsample requires k >= 2");
  const std::size_t n = compute.size();
  if (n < 2) fail("subsample requires at least two points");
  std::vector<std::size_t> idx;
  if (n <= static_cast<std::size_t>(k)) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }

  std::vector<double> logc(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(compute[i] > 0)) fail("subsample: compute values must be positive");
    logc[i] = std::log(compute[i]);
  }

  idx.resize(k);
  for (int j = 0; j < k; ++j) {
    double target = logc.front() + (logc.back() - logc.front()) * j / (k - 1);
    auto it = std::lower_bound(logc.begin(), logc.end(), target);
    std::size_t cand = static_cast<std::size_t>(it - logc.begin());
    if (cand == n || (cand > 0 && target - logc[cand - 1] <= logc[cand] - target)) --cand;
    idx[j] = cand;
  }
  idx.front() = 0;
  idx.back() = n - 1;
  // Nearest-point picks can collide; push duplicates apart while keeping the
  // selection a strictly increasing subsequence that retains both endpoints.
  for (int j = 1; j < k; ++j)
    if (idx[j] <= idx[j - 1]) idx[j] = idx[j - 1] + 1;
  for (int j = k - 2; j >= 0; --j)
    if (idx[j] >= idx[j + 1]) idx[j] = idx[j + 1] - 1;
  return idx;
}

LearningCurve subsample(const LearningCurve& curve, int k) {
  curve.validate();
  if (curve.points.size() < 2) fail("subsample requires at least two points");
  std::vector<double> compute(curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) compute[i] = curve.points[i].compute;
  std::vector<std::size_t> idx = subsample_indices(compute, k);
  LearningCurve out;
  out.model = curve.model;
  out.points.reserve(idx.size());
  for (std::size_t i : idx) out.points.push_back(curve.points[i]);
  return out;
}

}  // namespace shlaw
