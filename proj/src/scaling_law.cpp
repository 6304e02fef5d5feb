#include "shlaw/scaling_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "shlaw/util.hpp"

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_region(double lo, double hi) {
  if (!(lo > 0) || !(hi > 0) || !(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    fail("compute region must satisfy 0 < lo < hi");
}
}  // namespace

void PowerScalingLaw::validate() const {
  if (!(alpha_c > 0) || !std::isfinite(alpha_c)) fail("law alpha must be positive and finite");
  if (!(gamma > 0) || !std::isfinite(gamma)) fail("law gamma must be positive and finite");
  check_region(region_lo, region_hi);
}

double PowerScalingLaw::eval(double compute) const {
  if (!(compute > 0)) fail("law evaluated at non-positive compute");
  return std::exp(-gamma * (std::log(compute) - std::log(alpha_c)));
}

std::vector<FrontierPoint> efficient_frontier(const CurveSet& set, double region_lo,
                                              double region_hi, int grid_points) {
  check_region(region_lo, region_hi);
  if (grid_points < 2) fail("frontier grid needs at least two points");

  struct LogCurve {
    std::vector<double> lc, ll;
    const std::string* id;
  };
  std::vector<LogCurve> curves;
  for (const LearningCurve& c : set.curves()) {
    if (c.points.empty()) continue;
    LogCurve lg;
    lg.id = &c.model.id;
    lg.lc.reserve(c.points.size());
    lg.ll.reserve(c.points.size());
    for (const CurvePoint& p : c.points) {
      lg.lc.push_back(std::log(p.compute));
      lg.ll.push_back(std::log(p.loss));
    }
    curves.push_back(std::move(lg));
  }

  const std::vector<double> grid = log_spaced(region_lo, region_hi, grid_points);
  constexpr double kLogSlack = 1e-9;  // absorbs exp/log round trips at range ends

  std::vector<FrontierPoint> frontier;
  double best_loss = std::numeric_limits<double>::infinity();
  std::string best_source;
  for (double c : grid) {
    const double lx = std::log(c);
    double lo_loss = std::numeric_limits<double>::infinity();
    const std::string* lo_id = nullptr;
    for (const LogCurve& cv : curves) {
      if (lx < cv.lc.front() - kLogSlack || lx > cv.lc.back() + kLogSlack) continue;
      double ly;
      if (cv.lc.size() == 1) {
        ly = cv.ll[0];
      } else {
        auto it = std::upper_bound(cv.lc.begin(), cv.lc.end(), lx);
        std::size_t j = it == cv.lc.begin()    ? 0
                        : it == cv.lc.end()    ? cv.lc.size() - 2
                                               : static_cast<std::size_t>(it - cv.lc.begin()) - 1;
        double t = (lx - cv.lc[j]) / (cv.lc[j + 1] - cv.lc[j]);
        ly = cv.ll[j] + t * (cv.ll[j + 1] - cv.ll[j]);
      }
      if (ly < lo_loss) {
        lo_loss = ly;
        lo_id = cv.id;
      }
    }
    if (!lo_id) continue;
    double loss = std::exp(lo_loss);
    if (loss < best_loss) {
      best_loss = loss;
      best_source = *lo_id;
    }
    frontier.push_back({c, best_loss, best_source});
  }
  if (frontier.empty()) throw std::runtime_error("empty frontier");
  return frontier;
}

PowerScalingLaw fit_lc_law(const std::vector<FrontierPoint>& frontier, double region_lo,
                           double region_hi) {
  check_region(region_lo, region_hi);
  std::vector<double> xs, ys;
  const double lo = region_lo * (1.0 - 1e-12), hi = region_hi * (1.0 + 1e-12);
  for (const FrontierPoint& p : frontier) {
    if (p.compute < lo || p.compute > hi) continue;
    if (!(p.compute > 0) || !(p.loss > 0)) fail("frontier points must be positive");
    xs.push_back(std::log(p.compute));
    ys.push_back(std::log(p.loss));
  }
  if (xs.size() < 2) fail("need at least two frontier points in the region");

  const std::size_t n = xs.size();
  double xbar = 0, ybar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0)) fail("frontier points share a single compute value");

  const double slope = sxy / sxx;
  const double intercept = ybar - slope * xbar;
  const double gamma = -slope;
  if (!(gamma > 0)) throw std::runtime_error("frontier not decreasing");
  const double alpha = std::exp(intercept / gamma);
  PowerScalingLaw law{alpha, gamma, region_lo, region_hi};
  law.validate();
  return law;
}

LndFit fit_lnd_law(const std::vector<LndObservation>& observations, std::uint64_t seed,
                   const LndFitOptions& options) {
  if (observations.size() < 5) fail("need at least five (N, D, loss) observations");
  if (!(options.huber_delta > 0) || options.restarts < 1 || options.max_iter < 1 ||
      !(options.tol > 0))
    fail("bad L(N,D) fit options");

  std::vector<double> ln_n(observations.size()), ln_d(observations.size()),
      ln_l(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const LndObservation& o = observations[i];
    if (!(o.n_params > 0) || !(o.tokens > 0) || !(o.loss > 0))
      fail("observations must have positive N, D, and loss");
    ln_n[i] = std::log(o.n_params);
    ln_d[i] = std::log(o.tokens);
    ln_l[i] = std::log(o.loss);
  }
  auto distinct = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  };
  if (distinct(ln_n) < 2 || distinct(ln_d) < 2)
    fail("observations must span at least two distinct N and D values");

  const double delta = options.huber_delta;
  // u = [ln nc, ln dc, ln e, raw alpha, raw beta]; alpha/beta via softplus.
  Objective objective = [&](const Eigen::VectorXd& u, Eigen::VectorXd* grad) {
    const double a = u[0], b = u[1], e = u[2];
    const double alpha = softplus(u[3]), beta = softplus(u[4]);
    double total = 0;
    if (grad) grad->setZero(5);
    for (std::size_t i = 0; i < ln_l.size(); ++i) {
      const double z1 = a - alpha * ln_n[i];
      const double z2 = b - beta * ln_d[i];
      const double z3 = e;
      const double m = std::max({z1, z2, z3});
      const double s1 = std::exp(z1 - m), s2 = std::exp(z2 - m), s3 = std::exp(z3 - m);
      const double sum = s1 + s2 + s3;
      const double pred = m + std::log(sum);
      const double r = pred - ln_l[i];
      total += huber(r, delta);
      if (grad) {
        const double g = huber_grad(r, delta);
        const double w1 = s1 / sum, w2 = s2 / sum, w3 = s3 / sum;
        (*grad)[0] += g * w1;
        (*grad)[1] += g * w2;
        (*grad)[2] += g * w3;
        (*grad)[3] += g * (-w1 * ln_n[i]) * sigmoid(u[3]);
        (*grad)[4] += g * (-w2 * ln_d[i]) * sigmoid(u[4]);
      }
    }
    return total;
  };

  MinimizeOptions mopt;
  mopt.max_iter = options.max_iter;
  mopt.tol = options.tol;

  OptimResult best;
  bool any_converged = false;
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> u_coeff(0.0, 12.0), u_e(-2.0, 2.0), u_exp(0.0, 1.0);
    Eigen::VectorXd init(5);
    init[0] = u_coeff(rng);
    init[1] = u_coeff(rng);
    init[2] = u_e(rng);
    const double lo = std::log(0.05), hi = std::log(1.5);
    init[3] = softplus_inv(std::exp(lo + (hi - lo) * u_exp(rng)));
    init[4] = softplus_inv(std::exp(lo + (hi - lo) * u_exp(rng)));
    OptimResult res = minimize(objective, init, mopt);
    any_converged = any_converged || res.converged;
    if (res.objective < best.objective) {
      best = res;
      best.restart_index = r;
    }
  }

  LndFit fit;
  fit.params.nc = std::exp(best.params[0]);
  fit.params.dc = std::exp(best.params[1]);
  fit.params.e = std::exp(best.params[2]);
  fit.params.alpha = softplus(best.params[3]);
  fit.params.beta = softplus(best.params[4]);
  fit.objective = best.objective;
  fit.converged = best.converged;
  if (!any_converged) {
    std::ostringstream msg;
    msg << "L(N,D) fit did not converge on any restart; best partial result: nc=" << fit.params.nc
        << " dc=" << fit.params.dc << " e=" << fit.params.e << " alpha=" << fit.params.alpha
        << " beta=" << fit.params.beta << " objective=" << fit.objective;
    throw std::runtime_error(msg.str());
  }
  return fit;
}

double abc(const PowerScalingLaw& a, const PowerScalingLaw& b, double region_lo, double region_hi,
           int grid_points) {
  check_region(region_lo, region_hi);
  a.validate();
  b.validate();
  const int n = std::max(512, grid_points);
  const double t_lo = std::log10(region_lo), t_hi = std::log10(region_hi);
  const double dt = (t_hi - t_lo) / (n - 1);
  double integral = 0, prev = 0;
  for (int i = 0; i < n; ++i) {
    const double c = std::pow(10.0, t_lo + dt * i);
    const double gap = std::abs(std::log(a.eval(c)) - std::log(b.eval(c)));
    if (i > 0) integral += 0.5 * (prev + gap) * dt;
    prev = gap;
  }
  return integral;
}

GroundTruthLaws ground_truth_laws(const CurveSet& full_dataset,
                                  const std::vector<std::string>& selected_models,
                                  double region_lo, double region_hi) {
  check_region(region_lo, region_hi);
  if (selected_models.empty()) fail("no selected models");
  std::vector<LearningCurve> subset;
  for (const std::string& id : selected_models) {
    const LearningCurve* c = full_dataset.find(id);
    if (!c) fail("selected model '" + id + "' not present in the full dataset");
    subset.push_back(*c);
  }
  GroundTruthLaws out;
  out.full_data_law =
      fit_lc_law(efficient_frontier(full_dataset, region_lo, region_hi), region_lo, region_hi);
  out.entire_lcs_law = fit_lc_law(
      efficient_frontier(CurveSet(std::move(subset)), region_lo, region_hi), region_lo, region_hi);
  return out;
}

namespace {

PowerScalingLaw law_of_extended(const CurveSet& base, const std::vector<std::vector<CurvePoint>>& tails,
                                double region_lo, double region_hi) {
  std::vector<LearningCurve> extended;
  extended.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    LearningCurve c = base.curves()[i];
    c.points.insert(c.points.end(), tails[i].begin(), tails[i].end());
    extended.push_back(std::move(c));
  }
  return fit_lc_law(efficient_frontier(CurveSet(std::move(extended)), region_lo, region_hi),
                    region_lo, region_hi);
}

}  // namespace

ExtrapolatedLaws extrapolated_laws(const LmcSurrogate& surrogate, const NormalizationSpec& norm,
                                   const CurveSet& set, double region_lo, double region_hi,
                                   double z, int grid_points) {
  check_region(region_lo, region_hi);
  if (!(z >= 0)) fail("confidence multiplier z must be non-negative");
  if (grid_points < 2) fail("extension grid needs at least two points");
  if (surrogate.tasks().size() != set.size())
    fail("surrogate task count does not match the curve set");

  const double end = norm.norm_compute(std::log(region_hi));
  std::vector<std::vector<CurvePoint>> mean_tails(set.size()), ucb_tails(set.size()),
      lcb_tails(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const LearningCurve& c = set.curves()[i];
    if (c.points.empty()) fail("curve '" + c.model.id + "' is empty");
    const double last_compute = c.points.back().compute;
    const double last = norm.norm_compute(std::log(last_compute));
    if (end <= last) continue;
    Eigen::VectorXd grid;
    grid.setLinSpaced(grid_points, last, end);
    auto [mean, var] = surrogate.predict(static_cast<int>(i), grid);
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      const double compute = std::exp(norm.denorm_compute(grid[j]));
      if (compute <= last_compute * (1.0 + 1e-12)) continue;
      const double sd = std::sqrt(std::max(var[j], 0.0));
      mean_tails[i].push_back(
          {compute, std::exp(norm.denorm_loss(mean[j])), Provenance::Predicted});
      ucb_tails[i].push_back(
          {compute, std::exp(norm.denorm_loss(mean[j] + z * sd)), Provenance::Predicted});
      lcb_tails[i].push_back(
          {compute, std::exp(norm.denorm_loss(mean[j] - z * sd)), Provenance::Predicted});
    }
  }

  ExtrapolatedLaws out;
  out.mean_law = law_of_extended(set, mean_tails, region_lo, region_hi);
  out.ucb_law = law_of_extended(set, ucb_tails, region_lo, region_hi);
  out.lcb_law = law_of_extended(set, lcb_tails, region_lo, region_hi);
  return out;
}

}  // namespace shlaw
