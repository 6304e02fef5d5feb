#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shlaw/deep_ensemble.hpp"
#include "shlaw/util.hpp"

using namespace shlaw;

namespace {

CurveObservations make_obs(double n_params, const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  CurveObservations o;
  o.n_params = n_params;
  o.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  o.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return o;
}

// Two model sizes sharing one generating curve y(x); x spans (0, 1].
std::vector<CurveObservations> two_size_data(const std::function<double(double)>& f, int n = 12) {
  std::vector<CurveObservations> data;
  for (double size : {1e8, 1e9}) {
    std::vector<double> xs, ys;
    for (int i = 1; i <= n; ++i) {
      double x = static_cast<double>(i) / n;
      xs.push_back(x);
      ys.push_back(f(x));
    }
    data.push_back(make_obs(size, xs, ys));
  }
  return data;
}

}  // namespace

TEST_CASE("family names and coefficient counts") {
  CHECK(family_from_name("pl") == CurveFamily::PL);
  CHECK(family_from_name("exp") == CurveFamily::EXP);
  CHECK(family_from_name("mmf") == CurveFamily::MMF);
  CHECK(family_name(CurveFamily::PL) == "pl");
  CHECK(family_name(CurveFamily::EXP) == "exp");
  CHECK(family_name(CurveFamily::MMF) == "mmf");
  CHECK_THROWS_AS(family_from_name("spline"), std::invalid_argument);
  CHECK(family_coeff_count(CurveFamily::PL) == 3);
  CHECK(family_coeff_count(CurveFamily::EXP) == 3);
  CHECK(family_coeff_count(CurveFamily::MMF) == 4);
}

TEST_CASE("family closed forms") {
  SUBCASE("PL") {
    double c[] = {2.0, 0.5, 1.0};
    CHECK(family_eval(CurveFamily::PL, c, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(family_eval(CurveFamily::PL, c, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(family_eval(CurveFamily::PL, c, 0.0), std::invalid_argument);
  }

  SUBCASE("EXP with a vanishing rate stays at a + c") {
    double c[] = {1.5, 1e-300, 0.7};
    for (double x : {0.0, 1.0, 10.0, 1e6})
      CHECK(family_eval(CurveFamily::EXP, c, x) == doctest::Approx(2.2).epsilon(1e-14));
  }

  SUBCASE("MMF runs from a at zero to the plateau c") {
    double c[] = {3.0, 0.5, 1.2, 2.0};
    CHECK(family_eval(CurveFamily::MMF, c, 0.0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(family_eval(CurveFamily::MMF, c, 1e300) == doctest::Approx(1.2).epsilon(1e-10));
    // Midpoint by hand: p = 2^2 = 4, (3*0.5 + 1.2*4)/(0.5 + 4) = 6.3/4.5.
    CHECK(family_eval(CurveFamily::MMF, c, 2.0) == doctest::Approx(6.3 / 4.5).epsilon(1e-14));
  }

  SUBCASE("input validation") {
    double three[] = {1.0, 1.0, 1.0};
    double four[] = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(family_eval(CurveFamily::PL, four, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(family_eval(CurveFamily::MMF, three, 1.0), std::invalid_argument);
    double zero[] = {1.0, 0.0, 1.0};
    CHECK_THROWS_AS(family_eval(CurveFamily::EXP, zero, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(family_eval(CurveFamily::EXP, three, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(family_eval(CurveFamily::MMF, four, -0.5), std::invalid_argument);
  }
}

TEST_CASE("families are non-increasing on sampled coefficients") {
  // MMF decreases from a toward the plateau c, so c is sampled below a; the
  // other families decrease for any positive coefficients.
  std::mt19937_64 rng(404);
  auto logu = [&rng](double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
  };
  for (int draw = 0; draw < 20; ++draw) {
    double a = logu(0.5, 5.0);
    double b = logu(0.1, 3.0);
    double cc = logu(0.05, 0.9) * a;
    double d = logu(0.3, 3.0);
    std::vector<std::vector<double>> coeff_sets = {
        {a, b, cc},      // PL, EXP
        {a, b, cc, d}};  // MMF
    for (CurveFamily fam : {CurveFamily::PL, CurveFamily::EXP, CurveFamily::MMF}) {
      const auto& cs = coeff_sets[fam == CurveFamily::MMF ? 1 : 0];
      double prev = std::numeric_limits<double>::infinity();
      for (int i = 1; i <= 40; ++i) {
        double x = 0.25 * i;
        double v = family_eval(fam, std::span<const double>(cs.data(), cs.size()), x);
        CHECK(v <= prev + 1e-12);
        prev = v;
      }
    }
  }
}

TEST_CASE("fit validation") {
  auto pl = [](double x) { return 2.0 * std::pow(x, -0.5) + 1.0; };
  std::vector<CurveObservations> good = two_size_data(pl, 4);

  CHECK_THROWS_AS(EnsembleSurrogate::fit({}, CurveFamily::PL, 1), std::invalid_argument);
  CHECK_THROWS_AS(EnsembleSurrogate::fit({good[0]}, CurveFamily::PL, 1),
                  std::invalid_argument);  // one distinct size

  std::vector<CurveObservations> dup = {good[0], good[0]};
  CHECK_THROWS_AS(EnsembleSurrogate::fit(dup, CurveFamily::PL, 1), std::invalid_argument);

  std::vector<CurveObservations> bad = good;
  bad[1].x[2] = bad[1].x[1];  // not ascending
  CHECK_THROWS_AS(EnsembleSurrogate::fit(bad, CurveFamily::PL, 1), std::invalid_argument);

  bad = good;
  bad[0].x[0] = 0.0;  // outside the PL domain
  CHECK_THROWS_AS(EnsembleSurrogate::fit(bad, CurveFamily::PL, 1), std::invalid_argument);

  bad = good;
  bad[0].n_params = 0.0;
  CHECK_THROWS_AS(EnsembleSurrogate::fit(bad, CurveFamily::PL, 1), std::invalid_argument);

  bad = good;
  bad[0].y.resize(2);
  CHECK_THROWS_AS(EnsembleSurrogate::fit(bad, CurveFamily::PL, 1), std::invalid_argument);

  EnsembleOptions opt;
  opt.members = 0;
  CHECK_THROWS_AS(EnsembleSurrogate::fit(good, CurveFamily::PL, 1, opt), std::invalid_argument);
  opt = EnsembleOptions{};
  opt.iterations = 0;
  CHECK_THROWS_AS(EnsembleSurrogate::fit(good, CurveFamily::PL, 1, opt), std::invalid_argument);
  opt = EnsembleOptions{};
  opt.learning_rate = 0.0;
  CHECK_THROWS_AS(EnsembleSurrogate::fit(good, CurveFamily::PL, 1, opt), std::invalid_argument);
}

TEST_CASE("recovers a size-independent power law within 2%") {
  auto pl = [](double x) { return 2.0 * std::pow(x, -0.5) + 1.0; };
  std::vector<CurveObservations> data = two_size_data(pl);
  EnsembleSurrogate s = EnsembleSurrogate::fit(data, CurveFamily::PL, 7);
  CHECK(s.active_members() == 5);
  CHECK(s.warnings().empty());
  for (const CurveObservations& obs : data) {
    Eigen::VectorXd pred = s.predict(obs.n_params, obs.x);
    for (Eigen::Index i = 0; i < obs.x.size(); ++i) {
      CHECK(std::abs(pred[i] - obs.y[i]) / obs.y[i] < 0.02);
    }
  }
  CHECK(s.training_mse() < 0.01);

  SUBCASE("scalar and vector prediction agree") {
    Eigen::VectorXd q(3);
    q << 0.2, 0.55, 1.0;
    Eigen::VectorXd v = s.predict(1e8, q);
    for (Eigen::Index i = 0; i < q.size(); ++i) CHECK(s.predict(1e8, q[i]) == v[i]);
  }

  SUBCASE("member coefficients reproduce the member's prediction") {
    double total = 0;
    for (int m = 0; m < s.active_members(); ++m) {
      Eigen::VectorXd c = s.member_coefficients(m, 1e9);
      REQUIRE(c.size() == 3);
      for (Eigen::Index i = 0; i < c.size(); ++i) CHECK(c[i] > 0.0);
      total += family_eval(CurveFamily::PL, std::span<const double>(c.data(), c.size()), 0.5);
    }
    CHECK(total / s.active_members() == doctest::Approx(s.predict(1e9, 0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(s.member_coefficients(5, 1e9), std::invalid_argument);
    CHECK_THROWS_AS(s.member_coefficients(-1, 1e9), std::invalid_argument);
  }

  SUBCASE("deterministic per seed") {
    EnsembleSurrogate again = EnsembleSurrogate::fit(data, CurveFamily::PL, 7);
    CHECK(again.predict(1e8, 0.37) == s.predict(1e8, 0.37));
    CHECK(again.training_mse() == s.training_mse());
    EnsembleSurrogate other = EnsembleSurrogate::fit(data, CurveFamily::PL, 8);
    CHECK(other.predict(1e8, 0.37) != s.predict(1e8, 0.37));
  }
}

TEST_CASE("plateau ordering follows the generating curves") {
  // MMF pairs with well-separated plateaus: size A settles near 0.5, size B
  // near 1.5; the curves are nearly flat by x = 5.
  auto mmf = [](double a, double b, double c, double d, double x) {
    double p = std::pow(x, d);
    return (a * b + c * p) / (b + p);
  };
  std::vector<CurveObservations> data;
  {
    std::vector<double> xs, ylo, yhi;
    for (int i = 1; i <= 14; ++i) {
      double x = 5.0 * i / 14.0;
      xs.push_back(x);
      ylo.push_back(mmf(3.0, 0.5, 0.5, 2.0, x));
      yhi.push_back(mmf(3.0, 0.5, 1.5, 2.0, x));
    }
    data.push_back(make_obs(1e8, xs, ylo));
    data.push_back(make_obs(1e9, xs, yhi));
  }
  EnsembleSurrogate s = EnsembleSurrogate::fit(data, CurveFamily::MMF, 11);
  CHECK(s.predict(1e8, 50.0) < s.predict(1e9, 50.0));
  CHECK(s.predict(1e8, 5.0) < s.predict(1e9, 5.0));
}

TEST_CASE("min_predicted_loss on a decreasing ensemble") {
  auto pl = [](double x) { return 1.4 * std::pow(x, -0.7) + 0.6; };
  std::vector<CurveObservations> data = two_size_data(pl);
  EnsembleSurrogate s = EnsembleSurrogate::fit(data, CurveFamily::PL, 19);

  // Monotone-decreasing predictions: the minimum sits at the horizon.
  CHECK(s.min_predicted_loss(1e8, 3.0) == doctest::Approx(s.predict(1e8, 3.0)).epsilon(1e-12));
  // Horizon at the last observed input degenerates to the in-sample value.
  CHECK(s.min_predicted_loss(1e9, 1.0) == doctest::Approx(s.predict(1e9, 1.0)).epsilon(1e-12));

  CHECK_THROWS_AS(s.min_predicted_loss(5e8, 2.0), std::invalid_argument);  // unseen size
  CHECK_THROWS_AS(s.min_predicted_loss(1e8, 0.5), std::invalid_argument);  // before the curve
  CHECK_THROWS_AS(s.min_predicted_loss(1e8, 2.0, 0), std::invalid_argument);
}

TEST_CASE("universal divergence excludes every member and fails") {
  // A finite but near-max target overflows the squared residual on the very
  // first pass, so each member diverges, is reinitialized, diverges again, and
  // is excluded — leaving an empty ensemble.
  std::vector<CurveObservations> data =
      two_size_data([](double) { return 1e308; }, 4);
  EnsembleOptions opt;
  opt.members = 2;
  opt.iterations = 2;
  CHECK_THROWS_AS(EnsembleSurrogate::fit(data, CurveFamily::PL, 3, opt), std::runtime_error);
}

TEST_CASE("non-finite outputs are rejected up front") {
  auto pl = [](double x) { return 2.0 * std::pow(x, -0.5) + 1.0; };
  std::vector<CurveObservations> data = two_size_data(pl, 4);
  data[0].y[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(EnsembleSurrogate::fit(data, CurveFamily::PL, 1), std::invalid_argument);
}
