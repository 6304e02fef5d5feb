#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shlaw/curves.hpp"
#include "shlaw/gp_lmc.hpp"
#include "shlaw/preprocess.hpp"
#include "shlaw/synthgen.hpp"

namespace shlaw {

// L(C) = (C / alpha_c)^(-gamma), fitted over [region_lo, region_hi].
struct PowerScalingLaw {
  double alpha_c = 1;
  double gamma = 0;
  double region_lo = 0;
  double region_hi = 0;

  void validate() const;
  double eval(double compute) const;
};

struct FrontierPoint {
  double compute = 0;
  double loss = 0;
  std::string source_model;
};

// Lower envelope of the curve set over a log-spaced grid spanning the region:
// at each grid compute, the minimum interpolated loss among the curves whose
// point range covers it (linear interpolation in log-log space), with a
// running minimum so the sequence is non-increasing. Grid points covered by
// no curve are skipped; an entirely uncovered region is an error.
std::vector<FrontierPoint> efficient_frontier(const CurveSet& set, double region_lo,
                                              double region_hi, int grid_points = 512);

// Ordinary least squares on (ln C, ln L) over the frontier points inside the
// region: ln L = -gamma (ln C - ln alpha). Requires a decreasing frontier.
PowerScalingLaw fit_lc_law(const std::vector<FrontierPoint>& frontier, double region_lo,
                           double region_hi);

struct LndObservation {
  double n_params = 0;  // N
  double tokens = 0;    // D
  double loss = 0;      // final loss at (N, D)
};

struct LndFitOptions {
  double huber_delta = 1e-3;
  int restarts = 20;
  int max_iter = 500;
  double tol = 1e-8;
};

struct LndFit {
  ChinchillaParams params;
  double objective = 0;  // total Huber objective in log space at the optimum
  bool converged = false;
};

// Fits L(N, D) = nc/N^alpha + dc/D^beta + e by minimizing the Huber loss
// between predicted and observed log losses over {ln nc, ln dc, ln e} and
// softplus-reparameterized {alpha, beta}, via seeded L-BFGS restarts.
// Needs >= 5 observations spanning >= 2 distinct N and D values.
LndFit fit_lnd_law(const std::vector<LndObservation>& observations, std::uint64_t seed,
                   const LndFitOptions& options = {});

// Area between curves: integral of |ln L_a(C) - ln L_b(C)| against log10 C
// over the region, by trapezoid rule on at least 512 log-spaced points.
double abc(const PowerScalingLaw& a, const PowerScalingLaw& b, double region_lo, double region_hi,
           int grid_points = 512);

struct GroundTruthLaws {
  PowerScalingLaw full_data_law;   // frontier over every curve in the dataset
  PowerScalingLaw entire_lcs_law;  // frontier over the selected models' complete curves
};

GroundTruthLaws ground_truth_laws(const CurveSet& full_dataset,
                                  const std::vector<std::string>& selected_models,
                                  double region_lo, double region_hi);

struct ExtrapolatedLaws {
  PowerScalingLaw mean_law;
  PowerScalingLaw ucb_law;  // fitted on the mean + z * sd extension
  PowerScalingLaw lcb_law;  // fitted on the mean - z * sd extension
};

// Extends each curve (task i = i-th curve of the set, matching the surrogate's
// task order) with the GP posterior mean and mean +- z*sd out to region_hi in
// the given normalization, then runs the frontier + fit pipeline on the mean,
// upper, and lower extended sets.
ExtrapolatedLaws extrapolated_laws(const LmcSurrogate& surrogate, const NormalizationSpec& norm,
                                   const CurveSet& set, double region_lo, double region_hi,
                                   double z, int grid_points = 256);

}  // namespace shlaw
