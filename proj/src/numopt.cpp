#include "shlaw/numopt.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "shlaw/util.hpp"

namespace shlaw {

namespace {
constexpr double kArmijoC1 = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr double kMinStep = 1e-20;
}  // namespace

double softplus(double x) {
  // log(1 + e^x) without overflow; for large x the correction underflows to 0.
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inv(double y) {
  if (!(y > 0)) throw std::invalid_argument("softplus_inv requires a positive argument");
  // x = log(e^y - 1) = y + log(1 - e^-y)
  return y + std::log(-std::expm1(-y));
}

double sigmoid(double x) { return x > 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double huber(double r, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("huber requires delta > 0");
  double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_grad(double r, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("huber requires delta > 0");
  return std::abs(r) <= delta ? r : (r > 0 ? delta : -delta);
}

OptimResult minimize(const Objective& objective, const Eigen::VectorXd& init,
                     const MinimizeOptions& options) {
  if (options.max_iter < 0 || options.memory < 1)
    throw std::invalid_argument("minimize: bad options");
  const Eigen::Index dim = init.size();

  OptimResult result;
  result.params = init;

  Eigen::VectorXd x = init, grad(dim);
  double fx = objective(x, &grad);
  if (!std::isfinite(fx))
    throw std::invalid_argument("minimize: objective is not finite at the initial point");
  result.objective = fx;
  if (!grad.allFinite()) return result;
  if (grad.lpNorm<Eigen::Infinity>() <= options.tol) {
    result.converged = true;
    return result;
  }

  // L-BFGS history (two-loop recursion).
  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;
  double gamma = 1.0;

  Eigen::VectorXd q(dim), direction(dim), x_new(dim), grad_new(dim);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    q = grad;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    direction = -q;

    double dg = direction.dot(grad);
    if (!(dg < 0)) {  // not a descent direction; fall back to steepest descent
      direction = -grad;
      dg = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Armijo backtracking from a unit step. The unit step is usually accepted,
    // so it is evaluated with the gradient up front to avoid a second call at
    // the accepted point.
    double step = 1.0, f_new = std::numeric_limits<double>::infinity();
    bool accepted = false, have_grad = false;
    while (step >= kMinStep) {
      x_new = x + step * direction;
      have_grad = step == 1.0;
      f_new = objective(x_new, have_grad ? &grad_new : nullptr);
      if (std::isfinite(f_new) && f_new <= fx + kArmijoC1 * step * dg) {
        accepted = true;
        break;
      }
      step *= kBacktrackFactor;
    }
    if (!accepted) break;  // line search exhausted; keep the best iterate

    if (!have_grad) f_new = objective(x_new, &grad_new);
    if (!std::isfinite(f_new) || !grad_new.allFinite()) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = grad_new - grad;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0) {
      if (static_cast<int>(s_hist.size()) == options.memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      gamma = sy / yv.squaredNorm();
    }

    x = x_new;
    fx = f_new;
    grad = grad_new;
    result.iterations = iter;
    if (fx < result.objective) {
      result.objective = fx;
      result.params = x;
    }
    if (grad.lpNorm<Eigen::Infinity>() <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

OptimResult minimize_with_restarts(const Objective& objective, const InitSampler& sampler,
                                   int restarts, std::uint64_t seed,
                                   const MinimizeOptions& options) {
  if (restarts < 1) throw std::invalid_argument("minimize_with_restarts: restarts must be >= 1");
  OptimResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    Eigen::VectorXd init = sampler(rng);
    OptimResult res;
    try {
      res = minimize(objective, init, options);
    } catch (const std::invalid_argument&) {
      continue;  // non-finite at init: skip this restart
    }
    res.restart_index = r;
    if (!have_best || res.objective < best.objective) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("minimize_with_restarts: all restarts failed at their initial points");
  return best;
}

double check_gradient(const Objective& objective, const Eigen::VectorXd& point, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("check_gradient requires eps > 0");
  Eigen::VectorXd analytic(point.size());
  objective(point, &analytic);
  double worst = 0;
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    double h = eps * std::max(1.0, std::abs(point[i]));
    x[i] = point[i] + h;
    double fp = objective(x, nullptr);
    x[i] = point[i] - h;
    double fm = objective(x, nullptr);
    x[i] = point[i];
    double fd = (fp - fm) / (2 * h);
    // Unit floor: components below the finite-difference noise floor are
    // judged absolutely, otherwise the ratio measures rounding, not the
    // gradient.
    double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1.0});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace shlaw
