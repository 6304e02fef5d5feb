#include "shlaw/gp_lmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "shlaw/util.hpp"

namespace shlaw {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

constexpr double kLog2Pi = 1.8378770664093453;

struct Stacked {
  Eigen::VectorXd x, y;
  std::vector<int> task_of;
  int total = 0;
  int num_tasks = 0;
};

Stacked stack_tasks(const std::vector<TaskData>& tasks) {
  if (tasks.empty()) fail("LMC requires at least one task");
  Stacked s;
  s.num_tasks = static_cast<int>(tasks.size());
  for (const TaskData& t : tasks) {
    if (t.inputs.size() == 0) fail("LMC task has no observations");
    if (t.inputs.size() != t.outputs.size()) fail("LMC task input/output size mismatch");
    for (Eigen::Index i = 0; i < t.inputs.size(); ++i) {
      if (!(t.inputs[i] >= 0)) fail("LMC inputs must be non-negative");
      if (i > 0 && !(t.inputs[i] > t.inputs[i - 1]))
        fail("LMC task inputs must be strictly increasing");
      if (!std::isfinite(t.outputs[i])) fail("LMC outputs must be finite");
    }
    s.total += static_cast<int>(t.inputs.size());
  }
  s.x.resize(s.total);
  s.y.resize(s.total);
  s.task_of.resize(s.total);
  int at = 0;
  for (int q = 0; q < s.num_tasks; ++q) {
    for (Eigen::Index i = 0; i < tasks[q].inputs.size(); ++i, ++at) {
      s.x[at] = tasks[q].inputs[i];
      s.y[at] = tasks[q].outputs[i];
      s.task_of[at] = q;
    }
  }
  return s;
}

// Cholesky with the jitter ladder 1e-8 * 10^k up to 1e-2. `base` must already
// include observation noise on its diagonal.
std::pair<Eigen::LLT<Eigen::MatrixXd>, double> chol_with_jitter(const Eigen::MatrixXd& base) {
  Eigen::LLT<Eigen::MatrixXd> llt(base);
  if (llt.info() == Eigen::Success) return {std::move(llt), 0.0};
  for (double jitter = 1e-8; jitter <= 1.0000001e-2; jitter *= 10.0) {
    Eigen::MatrixXd k = base;
    k.diagonal().array() += jitter;
    llt.compute(k);
    if (llt.info() == Eigen::Success) return {std::move(llt), jitter};
  }
  throw std::runtime_error("ill-conditioned kernel");
}

}  // namespace

void KernelHyperparams::validate() const {
  const int q = num_tasks();
  if (q < 1) fail("kernel hyperparameters need at least one task");
  if (kappa1.size() != q || w2.size() != q || kappa2.size() != q || kappa3.size() != q)
    fail("kernel hyperparameter vectors disagree on the task count");
  if (!(expdec_alpha > 0) || !(expdec_beta > 0) || !(expdec_var > 0))
    fail("ExpDec kernel parameters must be positive");
  if (!(white_var > 0) || !(noise_var > 0)) fail("white/noise variances must be positive");
  for (int i = 0; i < q; ++i) {
    if (!(w1[i] > 0) || !(kappa1[i] > 0)) fail("w1 and kappa1 entries must be positive");
    if (!(kappa2[i] >= 0)) fail("kappa2 entries must be non-negative");
    if (!(kappa3[i] > 0)) fail("kappa3 entries must be positive");
    if (!std::isfinite(w2[i])) fail("w2 entries must be finite");
  }
}

double expdec_kernel(double x, double x2, double alpha, double beta, double var) {
  if (!(alpha > 0) || !(beta > 0) || !(var > 0)) fail("ExpDec kernel parameters must be positive");
  if (!(x >= 0) || !(x2 >= 0)) fail("ExpDec kernel inputs must be non-negative");
  return var * std::exp(alpha * (std::log(beta) - std::log(x + x2 + beta)));
}

Eigen::VectorXd pack_hyperparams(const KernelHyperparams& h) {
  h.validate();
  const int q = h.num_tasks();
  Eigen::VectorXd u(5 + 5 * q);
  u[0] = softplus_inv(h.expdec_alpha);
  u[1] = softplus_inv(h.expdec_beta);
  u[2] = softplus_inv(h.expdec_var);
  u[3] = softplus_inv(h.white_var);
  u[4] = softplus_inv(h.noise_var);
  for (int i = 0; i < q; ++i) {
    u[5 + i] = softplus_inv(h.w1[i]);
    u[5 + q + i] = softplus_inv(h.kappa1[i]);
    u[5 + 2 * q + i] = h.w2[i];
    u[5 + 3 * q + i] = softplus_inv(std::max(h.kappa2[i], 1e-300));
    u[5 + 4 * q + i] = softplus_inv(h.kappa3[i]);
  }
  return u;
}

KernelHyperparams unpack_hyperparams(const Eigen::VectorXd& u, int num_tasks) {
  if (num_tasks < 1 || u.size() != 5 + 5 * num_tasks)
    fail("unpack_hyperparams: vector length does not match the task count");
  // softplus underflows to exact zero for very negative raw values; keep the
  // strictly-positive parameters strictly positive.
  auto positive = [](double x) { return std::max(softplus(x), 1e-300); };
  KernelHyperparams h;
  h.expdec_alpha = positive(u[0]);
  h.expdec_beta = positive(u[1]);
  h.expdec_var = positive(u[2]);
  h.white_var = positive(u[3]);
  h.noise_var = positive(u[4]);
  h.w1.resize(num_tasks);
  h.kappa1.resize(num_tasks);
  h.w2.resize(num_tasks);
  h.kappa2.resize(num_tasks);
  h.kappa3.resize(num_tasks);
  for (int i = 0; i < num_tasks; ++i) {
    h.w1[i] = positive(u[5 + i]);
    h.kappa1[i] = positive(u[5 + num_tasks + i]);
    h.w2[i] = u[5 + 2 * num_tasks + i];
    h.kappa2[i] = softplus(u[5 + 3 * num_tasks + i]);
    h.kappa3[i] = positive(u[5 + 4 * num_tasks + i]);
  }
  return h;
}

Eigen::MatrixXd build_covariance(const KernelHyperparams& h, const std::vector<TaskData>& tasks) {
  h.validate();
  Stacked s = stack_tasks(tasks);
  if (s.num_tasks != h.num_tasks()) fail("hyperparameters and tasks disagree on the task count");
  Eigen::MatrixXd k(s.total, s.total);
  for (int a = 0; a < s.total; ++a) {
    for (int b = 0; b <= a; ++b) {
      const int ta = s.task_of[a], tb = s.task_of[b];
      double b1 = h.w1[ta] * h.w1[tb] + (ta == tb ? h.kappa1[ta] : 0.0);
      double v = b1 * expdec_kernel(s.x[a], s.x[b], h.expdec_alpha, h.expdec_beta, h.expdec_var);
      if (s.x[a] == s.x[b])
        v += (h.w2[ta] * h.w2[tb] + (ta == tb ? h.kappa2[ta] : 0.0)) * h.white_var;
      if (ta == tb) v += h.kappa3[ta];
      k(a, b) = v;
      k(b, a) = v;
    }
  }
  return k;
}

namespace {

// Shared workspace so repeated objective evaluations during optimization do
// not reallocate the T x T buffers.
struct LmcWorkspace {
  Stacked s;
  Eigen::MatrixXd e, logterm, rterm, cov, kinv;
  Eigen::VectorXd alpha;
};

double lmc_nll(LmcWorkspace& w, const KernelHyperparams& h, Eigen::VectorXd* grad_u) {
  const Stacked& s = w.s;
  const int t = s.total, q = s.num_tasks;
  const double a_ = h.expdec_alpha, b_ = h.expdec_beta, v_ = h.expdec_var;
  const double logb = std::log(b_);

  w.e.resize(t, t);
  w.cov.resize(t, t);
  if (grad_u) {
    w.logterm.resize(t, t);
    w.rterm.resize(t, t);
  }
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j <= i; ++j) {
      const int ti = s.task_of[i], tj = s.task_of[j];
      const double ssum = s.x[i] + s.x[j] + b_;
      const double lt = logb - std::log(ssum);
      const double e = v_ * std::exp(a_ * lt);
      w.e(i, j) = w.e(j, i) = e;
      if (grad_u) {
        w.logterm(i, j) = w.logterm(j, i) = lt;
        w.rterm(i, j) = w.rterm(j, i) = 1.0 / ssum;
      }
      double b1 = h.w1[ti] * h.w1[tj] + (ti == tj ? h.kappa1[ti] : 0.0);
      double val = b1 * e;
      if (s.x[i] == s.x[j])
        val += (h.w2[ti] * h.w2[tj] + (ti == tj ? h.kappa2[ti] : 0.0)) * h.white_var;
      if (ti == tj) val += h.kappa3[ti];
      w.cov(i, j) = w.cov(j, i) = val;
    }
  }
  w.cov.diagonal().array() += h.noise_var;

  Eigen::LLT<Eigen::MatrixXd> llt;
  try {
    llt = chol_with_jitter(w.cov).first;
  } catch (const std::runtime_error&) {
    if (grad_u) grad_u->setZero(5 + 5 * q);
    return std::numeric_limits<double>::infinity();
  }

  w.alpha = llt.solve(s.y);
  double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double nll = 0.5 * s.y.dot(w.alpha) + 0.5 * logdet + 0.5 * t * kLog2Pi;
  if (!grad_u) return nll;

  // d nll / d theta = 1/2 tr((Kinv - alpha alpha^T) dK/dtheta), accumulated in
  // a single pass over the matrix; task-structured parameters only touch their
  // own blocks.
  w.kinv = llt.solve(Eigen::MatrixXd::Identity(t, t));

  double acc_var = 0, acc_alpha = 0, acc_beta = 0, acc_white = 0, acc_noise = 0;
  Eigen::VectorXd gw1 = Eigen::VectorXd::Zero(q), gk1 = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd gw2 = Eigen::VectorXd::Zero(q), gk2 = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd gk3 = Eigen::VectorXd::Zero(q);
  const double inv_beta = 1.0 / b_;
  for (int i = 0; i < t; ++i) {
    acc_noise += w.kinv(i, i) - w.alpha[i] * w.alpha[i];
    for (int j = 0; j < t; ++j) {
      const int ti = s.task_of[i], tj = s.task_of[j];
      const double g = w.kinv(i, j) - w.alpha[i] * w.alpha[j];
      const double e = w.e(i, j);
      const double b1 = h.w1[ti] * h.w1[tj] + (ti == tj ? h.kappa1[ti] : 0.0);
      const double ge = g * e;
      acc_var += ge * b1;
      acc_alpha += ge * b1 * w.logterm(i, j);
      acc_beta += ge * b1 * (inv_beta - w.rterm(i, j));
      gw1[ti] += ge * h.w1[tj];
      if (ti == tj) {
        gk1[ti] += ge;
        gk3[ti] += g;
      }
      if (s.x[i] == s.x[j]) {
        acc_white += g * (h.w2[ti] * h.w2[tj] + (ti == tj ? h.kappa2[ti] : 0.0));
        gw2[ti] += g * h.w2[tj];
        if (ti == tj) gk2[ti] += g;
      }
    }
  }

  Eigen::VectorXd& grad = *grad_u;
  grad.resize(5 + 5 * q);
  grad[0] = 0.5 * acc_alpha;
  grad[1] = 0.5 * a_ * acc_beta;
  grad[2] = 0.5 * acc_var / v_;
  grad[3] = 0.5 * acc_white;
  grad[4] = 0.5 * acc_noise;
  for (int p = 0; p < q; ++p) {
    grad[5 + p] = gw1[p];                         // 2 * 1/2 * sum
    grad[5 + q + p] = 0.5 * gk1[p];
    grad[5 + 2 * q + p] = h.white_var * gw2[p];   // 2 * 1/2 * white * sum
    grad[5 + 3 * q + p] = 0.5 * h.white_var * gk2[p];
    grad[5 + 4 * q + p] = 0.5 * gk3[p];
  }
  return nll;
}

}  // namespace

Objective make_lmc_objective(const std::vector<TaskData>& tasks) {
  auto ws = std::make_shared<LmcWorkspace>();
  ws->s = stack_tasks(tasks);
  const int q = ws->s.num_tasks;
  return [ws, q](const Eigen::VectorXd& u, Eigen::VectorXd* grad) -> double {
    KernelHyperparams h = unpack_hyperparams(u, q);
    Eigen::VectorXd grad_theta;
    double nll = lmc_nll(*ws, h, grad ? &grad_theta : nullptr);
    if (!grad) return nll;
    if (!std::isfinite(nll)) {
      grad->setZero(u.size());
      return nll;
    }
    // Chain rule through the softplus reparameterization (w2 block is raw).
    grad->resize(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      bool raw = i >= 5 + 2 * q && i < 5 + 3 * q;
      (*grad)[i] = raw ? grad_theta[i] : grad_theta[i] * sigmoid(u[i]);
    }
    return nll;
  };
}

double log_marginal_likelihood(const KernelHyperparams& h, const std::vector<TaskData>& tasks) {
  h.validate();
  LmcWorkspace ws;
  ws.s = stack_tasks(tasks);
  if (ws.s.num_tasks != h.num_tasks())
    fail("hyperparameters and tasks disagree on the task count");
  double nll = lmc_nll(ws, h, nullptr);
  if (!std::isfinite(nll)) throw std::runtime_error("ill-conditioned kernel");
  return -nll;
}

void LmcSurrogate::factorize() {
  Eigen::MatrixXd cov = build_covariance(hyper_, tasks_);
  cov.diagonal().array() += hyper_.noise_var;
  auto [llt, jitter] = chol_with_jitter(cov);
  llt_ = std::move(llt);
  jitter_ = jitter;

  Stacked s = stack_tasks(tasks_);
  stacked_x_ = std::move(s.x);
  stacked_y_ = std::move(s.y);
  task_of_ = std::move(s.task_of);
  alpha_ = llt_.solve(stacked_y_);
  double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  lml_ = -(0.5 * stacked_y_.dot(alpha_) + 0.5 * logdet + 0.5 * stacked_y_.size() * kLog2Pi);
}

LmcSurrogate LmcSurrogate::from_hyperparams(KernelHyperparams h, std::vector<TaskData> tasks) {
  h.validate();
  LmcSurrogate s;
  s.hyper_ = std::move(h);
  s.tasks_ = std::move(tasks);
  s.factorize();
  return s;
}

LmcSurrogate LmcSurrogate::fit(std::vector<TaskData> tasks, std::uint64_t seed,
                               const GpFitOptions& options) {
  if (options.restarts < 1) fail("gp fit requires at least one restart");
  ScopedFlushDenormals flush;
  Stacked s = stack_tasks(tasks);
  const int q = s.num_tasks;

  Objective objective = make_lmc_objective(tasks);
  MinimizeOptions mopt;
  mopt.max_iter = options.max_iter;
  mopt.tol = options.tol;

  // First restart: warm start when given, otherwise a data-driven guess
  // (signal scale from per-task variance, bias level from per-task means).
  KernelHyperparams init;
  if (options.warm_start) {
    init = *options.warm_start;
    if (init.num_tasks() != q) fail("warm start task count mismatch");
  } else {
    init.expdec_alpha = 1.0;
    init.expdec_beta = 0.5;
    init.expdec_var = 1.0;
    init.white_var = 1e-4;
    init.noise_var = 1e-3;
    init.w1.resize(q);
    init.kappa1.resize(q);
    init.w2.resize(q);
    init.kappa2.resize(q);
    init.kappa3.resize(q);
    for (int i = 0; i < q; ++i) {
      double mean = tasks[i].outputs.mean();
      double sd = std::sqrt((tasks[i].outputs.array() - mean).square().sum() /
                            std::max<Eigen::Index>(1, tasks[i].outputs.size() - 1));
      init.w1[i] = std::max(0.3, sd);
      init.kappa1[i] = 0.1;
      init.w2[i] = 0.1;
      init.kappa2[i] = 1e-3;
      init.kappa3[i] = std::max(0.5, mean * mean);
    }
  }

  OptimResult best = minimize(objective, pack_hyperparams(init), mopt);
  best.restart_index = 0;

  if (options.restarts > 1) {
    InitSampler sampler = [q](std::mt19937_64& rng) {
      auto logu = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
      };
      KernelHyperparams h;
      h.expdec_alpha = logu(0.2, 5.0);
      h.expdec_beta = logu(0.05, 5.0);
      h.expdec_var = logu(0.1, 30.0);
      h.white_var = logu(1e-6, 1e-2);
      h.noise_var = logu(1e-6, 1e-2);
      h.w1.resize(q);
      h.kappa1.resize(q);
      h.w2.resize(q);
      h.kappa2.resize(q);
      h.kappa3.resize(q);
      std::uniform_real_distribution<double> w2dist(-0.5, 0.5);
      for (int i = 0; i < q; ++i) {
        h.w1[i] = logu(0.05, 5.0);
        h.kappa1[i] = logu(1e-3, 1.0);
        h.w2[i] = w2dist(rng);
        h.kappa2[i] = logu(1e-6, 1e-2);
        h.kappa3[i] = logu(0.5, 50.0);
      }
      return pack_hyperparams(h);
    };
    OptimResult rest = minimize_with_restarts(objective, sampler, options.restarts - 1, seed, mopt);
    if (rest.objective < best.objective) {
      best = std::move(rest);
      best.restart_index += 1;
    }
  }

  if (!std::isfinite(best.objective))
    throw std::runtime_error("gp fit failed: no restart produced a finite likelihood");

  LmcSurrogate out;
  out.hyper_ = unpack_hyperparams(best.params, q);
  out.tasks_ = std::move(tasks);
  out.factorize();
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LmcSurrogate::predict(
    int task, const Eigen::VectorXd& query) const {
  if (task < 0 || task >= hyper_.num_tasks()) fail("predict: task index out of range");
  const int t = static_cast<int>(stacked_x_.size());
  const int g = static_cast<int>(query.size());
  const KernelHyperparams& h = hyper_;

  Eigen::MatrixXd kstar(t, g);
  for (int j = 0; j < g; ++j) {
    double qx = query[j];
    if (!(qx >= 0)) fail("predict: query inputs must be non-negative");
    for (int a = 0; a < t; ++a) {
      const int ta = task_of_[a];
      double b1 = h.w1[task] * h.w1[ta] + (task == ta ? h.kappa1[task] : 0.0);
      double v = b1 * expdec_kernel(qx, stacked_x_[a], h.expdec_alpha, h.expdec_beta, h.expdec_var);
      if (qx == stacked_x_[a])
        v += (h.w2[task] * h.w2[ta] + (task == ta ? h.kappa2[task] : 0.0)) * h.white_var;
      if (task == ta) v += h.kappa3[task];
      kstar(a, j) = v;
    }
  }

  Eigen::VectorXd mean = kstar.transpose() * alpha_;
  Eigen::MatrixXd solved = llt_.solve(kstar);
  Eigen::VectorXd var(g);
  const double b1_tt = h.w1[task] * h.w1[task] + h.kappa1[task];
  const double b2_tt = h.w2[task] * h.w2[task] + h.kappa2[task];
  for (int j = 0; j < g; ++j) {
    double prior = b1_tt * expdec_kernel(query[j], query[j], h.expdec_alpha, h.expdec_beta,
                                         h.expdec_var) +
                   b2_tt * h.white_var + h.kappa3[task];
    var[j] = std::max(0.0, prior - kstar.col(j).dot(solved.col(j)));
  }
  return {std::move(mean), std::move(var)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LmcSurrogate::confidence_bounds(
    int task, const Eigen::VectorXd& query, double z) const {
  if (!(z >= 0)) fail("confidence_bounds: z must be non-negative");
  auto [mean, var] = predict(task, query);
  Eigen::VectorXd sd = var.array().sqrt();
  return {mean - z * sd, mean + z * sd};
}

double LmcSurrogate::min_predicted_loss(int task, double horizon, int grid_points) const {
  if (task < 0 || task >= hyper_.num_tasks()) fail("min_predicted_loss: task index out of range");
  if (grid_points < 1) fail("min_predicted_loss: grid_points must be positive");
  const Eigen::VectorXd& inputs = tasks_[task].inputs;
  double last = inputs[inputs.size() - 1];
  if (horizon < last - 1e-12) fail("min_predicted_loss: horizon precedes the trained curve");
  horizon = std::max(horizon, last);

  Eigen::VectorXd grid;
  if (horizon == last || grid_points == 1) {
    grid.resize(1);
    grid[0] = horizon;
  } else {
    grid.setLinSpaced(grid_points, last, horizon);
  }
  return predict(task, grid).first.minCoeff();
}

}  // namespace shlaw
