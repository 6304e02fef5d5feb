#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "shlaw/curves.hpp"

namespace shlaw {

// Parametric loss surface L(N, D) = nc / N^alpha + dc / D^beta + e.
struct ChinchillaParams {
  double nc = 0;     // parameter-count coefficient
  double dc = 0;     // token-count coefficient
  double e = 0;      // irreducible loss
  double alpha = 0;  // parameter exponent
  double beta = 0;   // token exponent

  void validate() const;
};

ChinchillaParams hoffmann_params();   // {406.40, 410.7, 1.6934, 0.3478, 0.3658}
ChinchillaParams besiroglu_params();  // {482.01, 2085.43, 1.8172, 0.3392, 0.2849}
ChinchillaParams preset_params(std::string_view name);  // "hoffmann" | "besiroglu"

double loss_surface(const ChinchillaParams& params, double n, double d);

enum class NoiseKind { None, Awgn, Brownian, Ou };

NoiseKind noise_kind_from_name(std::string_view name);
std::string_view noise_kind_name(NoiseKind kind);

struct NoiseConfig {
  NoiseKind kind = NoiseKind::None;
  double sigma2 = 0.0;  // base noise variance
  double weight = 0.0;  // noise weight w
  double ou_mu = 0.0;   // OU mean level
  double ou_tau = 1.0;  // OU relaxation time (in log-compute units)
  // Noise is attenuated to zero from the first point whose |log-log slope|
  // drops below this threshold (the curve's inclination point).
  double gradient_threshold = 1e-3;

  void validate() const;
};

// Stateful additive log-loss noise stream shared by sample_noise and the
// synthetic curve source. dt is the log-compute step from the previous point
// (ignored for the first call); slope is the local log-log curve slope.
class NoiseProcess {
 public:
  NoiseProcess(const NoiseConfig& cfg, std::uint64_t seed);

  double next(double dt, double slope);

 private:
  NoiseConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double state_ = 0;
  bool first_ = true;
  bool attenuated_ = false;
};

// Additive log-loss noise for a compute grid. slopes[i] is the log-log slope
// of the underlying curve at grid[i] and drives inclination attenuation.
std::vector<double> sample_noise(const NoiseConfig& cfg, std::span<const double> compute_grid,
                                 std::span<const double> slopes, std::uint64_t seed);

// Synthetic curve on the given compute grid: d = C / (6 n_params), loss =
// exp(log L(n, d) + noise). Grid points with d < 1 are skipped.
LearningCurve generate_curve(const ChinchillaParams& params, const ModelSpec& model,
                             std::span<const double> compute_grid, const NoiseConfig& noise,
                             std::uint64_t seed);

std::vector<double> log_spaced(double lo, double hi, int n);

// Distinct power-of-two model sizes 2^k, k drawn uniformly from [2, 42].
std::vector<ModelSpec> sample_models(int count, std::uint64_t seed);

}  // namespace shlaw
