#include "shlaw/deep_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

#include "shlaw/numopt.hpp"
#include "shlaw/util.hpp"

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

CurveFamily family_from_name(std::string_view name) {
  if (name == "pl") return CurveFamily::PL;
  if (name == "exp") return CurveFamily::EXP;
  if (name == "mmf") return CurveFamily::MMF;
  fail("unknown curve family '" + std::string(name) + "'");
}

std::string_view family_name(CurveFamily family) {
  switch (family) {
    case CurveFamily::PL: return "pl";
    case CurveFamily::EXP: return "exp";
    case CurveFamily::MMF: return "mmf";
  }
  fail("bad curve family");
}

int family_coeff_count(CurveFamily family) { return family == CurveFamily::MMF ? 4 : 3; }

double family_eval(CurveFamily family, std::span<const double> coeffs, double x) {
  if (static_cast<int>(coeffs.size()) != family_coeff_count(family))
    fail("family_eval: wrong coefficient count");
  for (double c : coeffs)
    if (!(c > 0)) fail("family_eval: coefficients must be positive");
  switch (family) {
    case CurveFamily::PL:
      if (!(x > 0)) fail("family_eval: PL requires x > 0");
      return coeffs[0] * std::pow(x, -coeffs[1]) + coeffs[2];
    case CurveFamily::EXP:
      if (!(x >= 0)) fail("family_eval: EXP requires x >= 0");
      return coeffs[0] * std::exp(-coeffs[1] * x) + coeffs[2];
    case CurveFamily::MMF: {
      if (!(x >= 0)) fail("family_eval: MMF requires x >= 0");
      double p = std::pow(x, coeffs[3]);
      if (std::isinf(p)) return coeffs[2];  // dominant-term limit
      return (coeffs[0] * coeffs[1] + coeffs[2] * p) / (coeffs[1] + p);
    }
  }
  fail("bad curve family");
}

namespace {

// d family / d coeffs at (c, x); fills jac (coeff count).
void family_grad(CurveFamily family, const Eigen::VectorXd& c, double x, Eigen::VectorXd& jac) {
  switch (family) {
    case CurveFamily::PL: {
      double xp = std::pow(x, -c[1]);
      jac[0] = xp;
      jac[1] = -c[0] * std::log(x) * xp;
      jac[2] = 1.0;
      return;
    }
    case CurveFamily::EXP: {
      double ex = std::exp(-c[1] * x);
      jac[0] = ex;
      jac[1] = -c[0] * x * ex;
      jac[2] = 1.0;
      return;
    }
    case CurveFamily::MMF: {
      double p = std::pow(x, c[3]);
      double d = c[1] + p;
      double d2 = d * d;
      jac[0] = c[1] / d;
      jac[1] = p * (c[0] - c[2]) / d2;
      jac[2] = p / d;
      jac[3] = x > 0 ? p * std::log(x) * c[1] * (c[2] - c[0]) / d2 : 0.0;
      return;
    }
  }
}

struct AdamState {
  Eigen::VectorXd m, v;
  int step = 0;
};

void adam_update(Eigen::Map<Eigen::VectorXd> params, const Eigen::VectorXd& grad, AdamState& st,
                 double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (st.m.size() == 0) {
    st.m = Eigen::VectorXd::Zero(params.size());
    st.v = Eigen::VectorXd::Zero(params.size());
  }
  ++st.step;
  st.m = b1 * st.m + (1 - b1) * grad;
  st.v = b2 * st.v + (1 - b2) * grad.cwiseProduct(grad);
  double corr1 = 1 - std::pow(b1, st.step);
  double corr2 = 1 - std::pow(b2, st.step);
  params.array() -=
      lr * (st.m.array() / corr1) / ((st.v.array() / corr2).sqrt() + eps);
}

}  // namespace

Eigen::VectorXd EnsembleSurrogate::coefficients(const Mlp& net, double n_params) const {
  if (!(n_params > 0)) fail("ensemble: n_params must be positive");
  double z = (std::log(n_params) - input_mean_) / input_sd_;
  Eigen::VectorXd h1 = (net.w1.col(0) * z + net.b1).array().tanh();
  Eigen::VectorXd h2 = ((net.w2 * h1 + net.b2).array().tanh()).matrix();
  Eigen::VectorXd o = net.w3 * h2 + net.b3;
  Eigen::VectorXd c(o.size());
  // softplus underflows to exact zero for very negative pre-activations; keep
  // the coefficients strictly positive so the family stays evaluable.
  for (Eigen::Index i = 0; i < o.size(); ++i) c[i] = std::max(softplus(o[i]), 1e-300);
  return c;
}

EnsembleSurrogate EnsembleSurrogate::fit(std::vector<CurveObservations> data, CurveFamily family,
                                         std::uint64_t seed, const EnsembleOptions& options) {
  if (data.empty()) fail("ensemble fit: no curves given");
  if (options.members < 1 || options.iterations < 1 || options.hidden < 1 ||
      !(options.learning_rate > 0))
    fail("ensemble fit: bad options");
  ScopedFlushDenormals flush;
  std::set<double> distinct;
  std::size_t total_points = 0;
  for (const CurveObservations& obs : data) {
    if (!(obs.n_params > 0)) fail("ensemble fit: n_params must be positive");
    if (obs.x.size() == 0 || obs.x.size() != obs.y.size())
      fail("ensemble fit: bad observation block");
    for (Eigen::Index i = 0; i < obs.x.size(); ++i) {
      if (family == CurveFamily::PL ? !(obs.x[i] > 0) : !(obs.x[i] >= 0))
        fail("ensemble fit: input outside the family domain");
      if (i > 0 && !(obs.x[i] > obs.x[i - 1])) fail("ensemble fit: inputs must be ascending");
      if (!std::isfinite(obs.y[i])) fail("ensemble fit: outputs must be finite");
    }
    distinct.insert(obs.n_params);
    total_points += static_cast<std::size_t>(obs.x.size());
  }
  if (distinct.size() < 2) fail("ensemble fit: needs at least two distinct model sizes");

  EnsembleSurrogate out;
  out.family_ = family;

  // Standardize log model size over the distinct sizes present.
  double mean = 0;
  for (double n : distinct) mean += std::log(n);
  mean /= static_cast<double>(distinct.size());
  double var = 0;
  for (double n : distinct) var += (std::log(n) - mean) * (std::log(n) - mean);
  var /= static_cast<double>(distinct.size());
  out.input_mean_ = mean;
  out.input_sd_ = var > 1e-24 ? std::sqrt(var) : 1.0;

  for (const CurveObservations& obs : data) {
    auto [it, inserted] = out.last_input_.emplace(obs.n_params, obs.x[obs.x.size() - 1]);
    if (!inserted) it->second = std::max(it->second, obs.x[obs.x.size() - 1]);
  }

  const int n_coeff = family_coeff_count(family);
  const int hidden = options.hidden;

  auto init_net = [&](std::uint64_t member_seed) {
    std::mt19937_64 rng(member_seed);
    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
      double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
      std::uniform_real_distribution<double> u(-bound, bound);
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
      return m;
    };
    Mlp net;
    net.w1 = glorot(hidden, 1);
    net.b1 = Eigen::VectorXd::Zero(hidden);
    net.w2 = glorot(hidden, hidden);
    net.b2 = Eigen::VectorXd::Zero(hidden);
    net.w3 = glorot(n_coeff, hidden);
    net.b3 = Eigen::VectorXd::Zero(n_coeff);
    return net;
  };

  // One training attempt; returns final MSE (+inf on divergence).
  auto train = [&](Mlp& net) -> double {
    AdamState st_w1, st_b1, st_w2, st_b2, st_w3, st_b3;
    const double inv_n = 1.0 / static_cast<double>(total_points);
    Eigen::VectorXd jac(n_coeff);
    double mse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.iterations; ++iter) {
      Eigen::MatrixXd g_w1 = Eigen::MatrixXd::Zero(hidden, 1);
      Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(hidden);
      Eigen::MatrixXd g_w2 = Eigen::MatrixXd::Zero(hidden, hidden);
      Eigen::VectorXd g_b2 = Eigen::VectorXd::Zero(hidden);
      Eigen::MatrixXd g_w3 = Eigen::MatrixXd::Zero(n_coeff, hidden);
      Eigen::VectorXd g_b3 = Eigen::VectorXd::Zero(n_coeff);
      mse = 0;
      for (const CurveObservations& obs : data) {
        // Forward for this model size.
        double z = (std::log(obs.n_params) - out.input_mean_) / out.input_sd_;
        Eigen::VectorXd a1 = net.w1.col(0) * z + net.b1;
        Eigen::VectorXd h1 = a1.array().tanh();
        Eigen::VectorXd a2 = net.w2 * h1 + net.b2;
        Eigen::VectorXd h2 = a2.array().tanh();
        Eigen::VectorXd o = net.w3 * h2 + net.b3;
        Eigen::VectorXd c(n_coeff), sig(n_coeff);
        for (int i = 0; i < n_coeff; ++i) {
          c[i] = std::max(softplus(o[i]), 1e-300);
          sig[i] = sigmoid(o[i]);
        }
        // Accumulate dMSE/dc over the model's points.
        Eigen::VectorXd g_c = Eigen::VectorXd::Zero(n_coeff);
        for (Eigen::Index i = 0; i < obs.x.size(); ++i) {
          double f = family_eval(family, std::span<const double>(c.data(), n_coeff), obs.x[i]);
          double r = f - obs.y[i];
          mse += r * r * inv_n;
          family_grad(family, c, obs.x[i], jac);
          g_c += (2.0 * r * inv_n) * jac;
        }
        // Backprop.
        Eigen::VectorXd g_o = g_c.cwiseProduct(sig);
        g_w3 += g_o * h2.transpose();
        g_b3 += g_o;
        Eigen::VectorXd g_h2 = net.w3.transpose() * g_o;
        Eigen::VectorXd g_a2 = g_h2.cwiseProduct((1.0 - h2.array().square()).matrix());
        g_w2 += g_a2 * h1.transpose();
        g_b2 += g_a2;
        Eigen::VectorXd g_h1 = net.w2.transpose() * g_a2;
        Eigen::VectorXd g_a1 = g_h1.cwiseProduct((1.0 - h1.array().square()).matrix());
        g_w1.col(0) += g_a1 * z;
        g_b1 += g_a1;
      }
      if (!std::isfinite(mse)) return std::numeric_limits<double>::infinity();
      using MapV = Eigen::Map<Eigen::VectorXd>;
      adam_update(MapV(net.w1.data(), net.w1.size()),
                  MapV(g_w1.data(), g_w1.size()), st_w1, options.learning_rate);
      adam_update(MapV(net.b1.data(), net.b1.size()),
                  MapV(g_b1.data(), g_b1.size()), st_b1, options.learning_rate);
      adam_update(MapV(net.w2.data(), net.w2.size()),
                  MapV(g_w2.data(), g_w2.size()), st_w2, options.learning_rate);
      adam_update(MapV(net.b2.data(), net.b2.size()),
                  MapV(g_b2.data(), g_b2.size()), st_b2, options.learning_rate);
      adam_update(MapV(net.w3.data(), net.w3.size()),
                  MapV(g_w3.data(), g_w3.size()), st_w3, options.learning_rate);
      adam_update(MapV(net.b3.data(), net.b3.size()),
                  MapV(g_b3.data(), g_b3.size()), st_b3, options.learning_rate);
    }
    return mse;
  };

  double mse_sum = 0;
  for (int m = 0; m < options.members; ++m) {
    Mlp net = init_net(mix_seed(seed, static_cast<std::uint64_t>(m)));
    double mse = train(net);
    if (!std::isfinite(mse)) {
      // Diverged: reinitialize once with a fresh stream, then give up.
      net = init_net(mix_seed(seed, 0x10000ull + static_cast<std::uint64_t>(m)));
      mse = train(net);
      if (!std::isfinite(mse)) {
        out.warnings_.push_back("ensemble member " + std::to_string(m) +
                                " diverged twice and was excluded");
        continue;
      }
    }
    mse_sum += mse;
    out.members_.push_back(std::move(net));
  }
  if (out.members_.empty()) throw std::runtime_error("ensemble fit: every member diverged");
  out.training_mse_ = mse_sum / static_cast<double>(out.members_.size());
  return out;
}

double EnsembleSurrogate::predict(double n_params, double x) const {
  if (members_.empty()) fail("ensemble: not fitted");
  double sum = 0;
  for (const Mlp& net : members_) {
    Eigen::VectorXd c = coefficients(net, n_params);
    sum += family_eval(family_, std::span<const double>(c.data(), c.size()), x);
  }
  return sum / static_cast<double>(members_.size());
}

Eigen::VectorXd EnsembleSurrogate::predict(double n_params, const Eigen::VectorXd& x) const {
  if (members_.empty()) fail("ensemble: not fitted");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (const Mlp& net : members_) {
    Eigen::VectorXd c = coefficients(net, n_params);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      sum[i] += family_eval(family_, std::span<const double>(c.data(), c.size()), x[i]);
  }
  return sum / static_cast<double>(members_.size());
}

Eigen::VectorXd EnsembleSurrogate::member_coefficients(int member, double n_params) const {
  if (member < 0 || member >= active_members()) fail("ensemble: member index out of range");
  return coefficients(members_[member], n_params);
}

double EnsembleSurrogate::min_predicted_loss(double n_params, double horizon,
                                             int grid_points) const {
  if (grid_points < 1) fail("min_predicted_loss: grid_points must be positive");
  auto it = last_input_.find(n_params);
  if (it == last_input_.end())
    fail("min_predicted_loss: model size was not seen during fitting");
  double last = it->second;
  if (horizon < last - 1e-12) fail("min_predicted_loss: horizon precedes the observed curve");
  horizon = std::max(horizon, last);
  Eigen::VectorXd grid;
  if (horizon == last || grid_points == 1) {
    grid.resize(1);
    grid[0] = horizon;
  } else {
    grid.setLinSpaced(grid_points, last, horizon);
  }
  return predict(n_params, grid).minCoeff();
}

}  // namespace shlaw
