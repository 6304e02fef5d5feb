#include "shlaw/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "shlaw/util.hpp"

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

void ChinchillaParams::validate() const {
  if (!(nc > 0) || !(dc > 0)) fail("surface coefficients nc, dc must be positive");
  if (!(e >= 0)) fail("irreducible loss e must be non-negative");
  if (!(alpha > 0) || !(beta > 0)) fail("surface exponents alpha, beta must be positive");
}

ChinchillaParams hoffmann_params() { return {406.40, 410.7, 1.6934, 0.3478, 0.3658}; }
ChinchillaParams besiroglu_params() { return {482.01, 2085.43, 1.8172, 0.3392, 0.2849}; }

ChinchillaParams preset_params(std::string_view name) {
  if (name == "hoffmann") return hoffmann_params();
  if (name == "besiroglu") return besiroglu_params();
  fail("unknown surface preset '" + std::string(name) + "'");
}

double loss_surface(const ChinchillaParams& params, double n, double d) {
  params.validate();
  if (!(n > 0) || !(d > 0)) fail("loss_surface requires positive n and d");
  return params.nc / std::pow(n, params.alpha) + params.dc / std::pow(d, params.beta) + params.e;
}

NoiseKind noise_kind_from_name(std::string_view name) {
  if (name == "none") return NoiseKind::None;
  if (name == "awgn") return NoiseKind::Awgn;
  if (name == "brownian") return NoiseKind::Brownian;
  if (name == "ou") return NoiseKind::Ou;
  fail("unknown noise kind '" + std::string(name) + "'");
}

std::string_view noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Awgn: return "awgn";
    case NoiseKind::Brownian: return "brownian";
    case NoiseKind::Ou: return "ou";
  }
  fail("bad noise kind");
}

void NoiseConfig::validate() const {
  if (!(sigma2 >= 0)) fail("noise sigma2 must be non-negative");
  if (!(weight >= 0)) fail("noise weight must be non-negative");
  if (kind == NoiseKind::Ou && !(ou_tau > 0)) fail("OU relaxation time must be positive");
  if (!(gradient_threshold >= 0)) fail("gradient_threshold must be non-negative");
}

NoiseProcess::NoiseProcess(const NoiseConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
}

double NoiseProcess::next(double dt, double slope) {
  // Attenuation latches at the inclination point; no draws are consumed after
  // it so noise paths are stable prefixes regardless of grid length.
  if (attenuated_ || std::abs(slope) < cfg_.gradient_threshold) {
    attenuated_ = true;
    first_ = false;
    return 0.0;
  }
  bool first = first_;
  first_ = false;
  switch (cfg_.kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Awgn:
      return cfg_.weight * std::sqrt(cfg_.sigma2) * normal_(rng_);
    case NoiseKind::Brownian:
      // Increments ~ N(0, w sigma2 dt); the path starts at zero.
      if (!first) state_ += std::sqrt(cfg_.weight * cfg_.sigma2 * dt) * normal_(rng_);
      return state_;
    case NoiseKind::Ou: {
      if (first) {
        state_ = cfg_.ou_mu;
      } else {
        // Exact discretization of dX = -(X - mu)/tau dt + sqrt(2 sigma2/tau)... reduced
        // to the standard update with stationary variance sigma2.
        double a = std::exp(-dt / cfg_.ou_tau);
        state_ = cfg_.ou_mu + (state_ - cfg_.ou_mu) * a +
                 std::sqrt(cfg_.sigma2 * (1.0 - a * a)) * normal_(rng_);
      }
      return cfg_.weight * state_;
    }
  }
  fail("bad noise kind");
}

std::vector<double> sample_noise(const NoiseConfig& cfg, std::span<const double> compute_grid,
                                 std::span<const double> slopes, std::uint64_t seed) {
  if (compute_grid.size() != slopes.size())
    fail("sample_noise: grid and slope lengths differ");
  NoiseProcess proc(cfg, seed);
  std::vector<double> out(compute_grid.size());
  double prev_log = 0;
  for (std::size_t i = 0; i < compute_grid.size(); ++i) {
    if (!(compute_grid[i] > 0)) fail("sample_noise: compute grid must be positive");
    double lc = std::log(compute_grid[i]);
    double dt = i == 0 ? 0.0 : lc - prev_log;
    if (i > 0 && !(dt > 0)) fail("sample_noise: compute grid must be strictly increasing");
    out[i] = proc.next(dt, slopes[i]);
    prev_log = lc;
  }
  return out;
}

LearningCurve generate_curve(const ChinchillaParams& params, const ModelSpec& model,
                             std::span<const double> compute_grid, const NoiseConfig& noise,
                             std::uint64_t seed) {
  params.validate();
  model.validate();
  if (compute_grid.empty()) fail("generate_curve: empty compute grid");

  // Keep grid points where the implied token count reaches at least one token.
  std::vector<double> computes, logc, logl;
  for (double c : compute_grid) {
    if (!(c > 0)) fail("generate_curve: compute grid must be positive");
    if (!computes.empty() && !(c > computes.back()))
      fail("generate_curve: compute grid must be strictly increasing");
    double d = c / (6.0 * static_cast<double>(model.n_params));
    if (d < 1.0) continue;
    computes.push_back(c);
    logc.push_back(std::log(c));
    logl.push_back(std::log(loss_surface(params, static_cast<double>(model.n_params), d)));
  }
  if (computes.empty())
    fail("generate_curve: model '" + model.id + "' never reaches one token on this grid");

  // Log-log slopes of the noiseless curve (central differences, one-sided ends).
  std::size_t n = computes.size();
  std::vector<double> slopes(n, 0.0);
  if (n == 1) {
    slopes[0] = std::numeric_limits<double>::infinity();  // undefined; never attenuate
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = i == 0 ? 0 : i - 1;
      std::size_t b = i + 1 == n ? n - 1 : i + 1;
      slopes[i] = (logl[b] - logl[a]) / (logc[b] - logc[a]);
    }
  }

  std::vector<double> eps = sample_noise(noise, computes, slopes, seed);

  LearningCurve curve;
  curve.model = model;
  curve.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    curve.points.push_back({computes[i], std::exp(logl[i] + eps[i]), Provenance::Trained});
  curve.validate();
  return curve;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi > lo)) fail("log_spaced requires 0 < lo < hi");
  if (n < 2) fail("log_spaced requires n >= 2");
  std::vector<double> grid(n);
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    grid[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<ModelSpec> sample_models(int count, std::uint64_t seed) {
  constexpr int kMinExp = 2, kMaxExp = 42;
  if (count < 1 || count > kMaxExp - kMinExp + 1)
    fail("sample_models: count must be in [1, " + std::to_string(kMaxExp - kMinExp + 1) + "]");
  std::mt19937_64 rng(seed);
  std::vector<int> exps(kMaxExp - kMinExp + 1);
  std::iota(exps.begin(), exps.end(), kMinExp);
  // Partial Fisher-Yates: the first `count` entries are a uniform distinct sample.
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(exps.size()) - 1);
    std::swap(exps[i], exps[pick(rng)]);
  }
  std::vector<ModelSpec> models(count);
  for (int i = 0; i < count; ++i) {
    models[i].n_params = std::int64_t{1} << exps[i];
    models[i].id = "m" + std::to_string(i) + "_p" + std::to_string(exps[i]);
    models[i].tokens_per_step = 1;
  }
  return models;
}

}  // namespace shlaw
