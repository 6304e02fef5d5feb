#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>

namespace shlaw {

// Objective callback: returns f(x); fills *grad with the analytic gradient
// when grad is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeOptions {
  int max_iter = 500;
  double tol = 1e-8;   // convergence on the gradient infinity norm
  int memory = 10;     // L-BFGS history length
};

struct OptimResult {
  Eigen::VectorXd params;
  double objective = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  int restart_index = 0;
};

// L-BFGS with Armijo backtracking (factor 0.5 from unit step). Never returns a
// point worse than the initial one; non-finite evaluations abort the run with
// the best iterate so far.
OptimResult minimize(const Objective& objective, const Eigen::VectorXd& init,
                     const MinimizeOptions& options = {});

using InitSampler = std::function<Eigen::VectorXd(std::mt19937_64& rng)>;

// Independent seeded restarts; returns the best final objective, ties broken
// by the earlier restart index. Deterministic given the seed.
OptimResult minimize_with_restarts(const Objective& objective, const InitSampler& sampler,
                                   int restarts, std::uint64_t seed,
                                   const MinimizeOptions& options = {});

// Huber loss: r^2/2 for |r| <= delta, else delta (|r| - delta/2).
double huber(double r, double delta);
double huber_grad(double r, double delta);

// Max per-coordinate relative discrepancy between the analytic gradient and
// central differences with step eps; the per-coordinate denominator is floored
// at one so sub-resolution components are compared absolutely.
double check_gradient(const Objective& objective, const Eigen::VectorXd& point, double eps);

// Smooth positivity reparameterization helpers.
double softplus(double x);
double softplus_inv(double y);
double sigmoid(double x);

}  // namespace shlaw
