#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace shlaw {

// Parametric curve families predicted by the ensemble (all coefficients kept
// positive through a softplus output layer).
//   PL:  a x^-b + c           (x > 0)
//   EXP: a e^{-b x} + c       (x >= 0)
//   MMF: (a b + c x^d)/(b + x^d)   (x >= 0)
enum class CurveFamily { PL, EXP, MMF };

CurveFamily family_from_name(std::string_view name);
std::string_view family_name(CurveFamily family);
int family_coeff_count(CurveFamily family);
double family_eval(CurveFamily family, std::span<const double> coeffs, double x);

// One model's curve observations in normalized space: x ascending normalized
// compute, y normalized log-loss.
struct CurveObservations {
  double n_params = 0;
  Eigen::VectorXd x, y;
};

struct EnsembleOptions {
  int members = 5;
  int iterations = 1000;
  double learning_rate = 1e-2;
  int hidden = 64;
};

// Deep ensemble of small MLPs mapping standardized log(n_params) to family
// coefficients; trained jointly on all curves by MSE. Members that diverge
// are reinitialized once and excluded (with a warning) if they diverge again.
class EnsembleSurrogate {
 public:
  static EnsembleSurrogate fit(std::vector<CurveObservations> data, CurveFamily family,
                               std::uint64_t seed, const EnsembleOptions& options = {});

  // Ensemble-mean prediction (mean of member curve evaluations pointwise).
  double predict(double n_params, double x) const;
  Eigen::VectorXd predict(double n_params, const Eigen::VectorXd& x) const;
  // Coefficients produced by one member for a given model size.
  Eigen::VectorXd member_coefficients(int member, double n_params) const;

  // Minimum ensemble-mean prediction over a dense grid from the model's last
  // observed input to `horizon`. The model size must have been seen in fit().
  double min_predicted_loss(double n_params, double horizon, int grid_points = 256) const;

  CurveFamily family() const { return family_; }
  int active_members() const { return static_cast<int>(members_.size()); }
  const std::vector<std::string>& warnings() const { return warnings_; }
  double training_mse() const { return training_mse_; }

 private:
  struct Mlp {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
  };

  Eigen::VectorXd coefficients(const Mlp& net, double n_params) const;

  CurveFamily family_ = CurveFamily::PL;
  double input_mean_ = 0, input_sd_ = 1;
  std::vector<Mlp> members_;
  std::map<double, double> last_input_;  // n_params -> last observed x
  std::vector<std::string> warnings_;
  double training_mse_ = 0;
};

}  // namespace shlaw
