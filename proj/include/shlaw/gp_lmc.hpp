#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "shlaw/numopt.hpp"

namespace shlaw {

// One task's observations in normalized space: inputs ascending in [0, 1],
// outputs on the [0, loss_scale_max] scale.
struct TaskData {
  Eigen::VectorXd inputs;
  Eigen::VectorXd outputs;
};

// Hyperparameters of the LMC kernel
//   Sigma = B1 (x) K_ExpDec + B2 (x) K_White + B3 (x) K_Bias,
// with rank-one-plus-diagonal coregionalization B_j = w_j w_j^T + diag(kappa_j).
// The bias component fixes W3 = 0 and unit kernel variance, so task means are
// governed by the positive vector kappa3 alone.
struct KernelHyperparams {
  double expdec_alpha = 1.0;  // ExpDec decay exponent
  double expdec_beta = 1.0;   // ExpDec length/offset
  double expdec_var = 1.0;    // ExpDec signal variance
  double white_var = 1e-4;    // white kernel variance
  double noise_var = 1e-4;    // observation noise variance
  Eigen::VectorXd w1, kappa1;  // ExpDec coregionalization (both positive)
  Eigen::VectorXd w2, kappa2;  // white coregionalization (w2 free, kappa2 >= 0)
  Eigen::VectorXd kappa3;      // bias coregionalization diagonal (positive)

  int num_tasks() const { return static_cast<int>(w1.size()); }
  void validate() const;
};

// K_ExpDec(x, x') = var * beta^alpha / (x + x' + beta)^alpha.
double expdec_kernel(double x, double x2, double alpha, double beta, double var);

// Unconstrained <-> constrained hyperparameter vector (softplus for positive
// entries, w2 raw). Layout: [alpha, beta, expdec_var, white_var, noise_var,
// w1(Q), kappa1(Q), w2(Q), kappa2(Q), kappa3(Q)].
Eigen::VectorXd pack_hyperparams(const KernelHyperparams& h);
KernelHyperparams unpack_hyperparams(const Eigen::VectorXd& u, int num_tasks);

// Full task-stacked covariance (without observation noise).
Eigen::MatrixXd build_covariance(const KernelHyperparams& h, const std::vector<TaskData>& tasks);

// Negative log marginal likelihood of the stacked data under Sigma + noise I,
// with the analytic gradient in packed (unconstrained) coordinates.
Objective make_lmc_objective(const std::vector<TaskData>& tasks);
double log_marginal_likelihood(const KernelHyperparams& h, const std::vector<TaskData>& tasks);

struct GpFitOptions {
  int restarts = 20;
  int max_iter = 500;
  double tol = 1e-8;
  // Optional warm start used as the first restart's initial point.
  std::optional<KernelHyperparams> warm_start;
};

class LmcSurrogate {
 public:
  // Maximum-likelihood fit with seeded random restarts (deterministic).
  static LmcSurrogate fit(std::vector<TaskData> tasks, std::uint64_t seed,
                          const GpFitOptions& options = {});
  // Direct construction from known hyperparameters (no optimization).
  static LmcSurrogate from_hyperparams(KernelHyperparams h, std::vector<TaskData> tasks);

  // Posterior mean and variance of the latent function for one task.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> predict(int task,
                                                      const Eigen::VectorXd& query) const;
  // mean -/+ z * sqrt(var) (lower, upper).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> confidence_bounds(int task,
                                                                const Eigen::VectorXd& query,
                                                                double z = 2.0) const;
  // Minimum posterior mean over a dense grid from the task's last training
  // input to `horizon` (normalized units).
  double min_predicted_loss(int task, double horizon, int grid_points = 256) const;

  const KernelHyperparams& hyperparams() const { return hyper_; }
  const std::vector<TaskData>& tasks() const { return tasks_; }
  double log_marginal() const { return lml_; }
  double jitter_used() const { return jitter_; }

 private:
  LmcSurrogate() = default;
  void factorize();

  KernelHyperparams hyper_;
  std::vector<TaskData> tasks_;
  Eigen::VectorXd stacked_x_, stacked_y_, alpha_;
  std::vector<int> task_of_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double lml_ = 0;
  double jitter_ = 0;
};

}  // namespace shlaw
