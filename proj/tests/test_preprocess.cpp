#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "shlaw/preprocess.hpp"
#include "shlaw/synthgen.hpp"

using namespace shlaw;

namespace {

LearningCurve curve_from_losses(const std::vector<double>& losses) {
  LearningCurve c;
  c.model = {"m", 8, 1};
  for (std::size_t i = 0; i < losses.size(); ++i)
    c.points.push_back({std::pow(10.0, 1.0 + 0.1 * static_cast<double>(i)), losses[i],
                        Provenance::Trained});
  return c;
}

}  // namespace

TEST_CASE("savgol reproduces polynomials up to its order") {
  SUBCASE("exact cubic, window 11 order 3") {
    std::vector<double> cubic(41);
    for (int i = 0; i < 41; ++i) {
      double x = i;
      cubic[i] = 5.0 + 0.3 * x - 0.02 * x * x + 0.001 * x * x * x;
    }
    std::vector<double> out = savgol_smooth(cubic, 11, 3);
    REQUIRE(out.size() == cubic.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - cubic[i]) < 1e-9);
  }

  SUBCASE("constant curve unchanged") {
    LearningCurve flat = curve_from_losses(std::vector<double>(15, 2.5));
    LearningCurve out = savgol_smooth(flat, 11, 3);
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      CHECK(out.points[i].loss == doctest::Approx(2.5).epsilon(1e-12));
      CHECK(out.points[i].compute == flat.points[i].compute);
    }
  }

  SUBCASE("short curve returned unchanged with a flag") {
    LearningCurve shorty = curve_from_losses({3.0, 2.0, 1.5});
    bool too_short = false;
    LearningCurve out = savgol_smooth(shorty, 11, 3, &too_short);
    CHECK(too_short);
    for (std::size_t i = 0; i < out.points.size(); ++i)
      CHECK(out.points[i].loss == shorty.points[i].loss);
  }

  SUBCASE("invalid window or order") {
    std::vector<double> v(20, 1.0);
    CHECK_THROWS_AS(savgol_smooth(v, 10, 3), std::invalid_argument);  // even window
    CHECK_THROWS_AS(savgol_smooth(v, 11, 11), std::invalid_argument);
    CHECK_THROWS_AS(savgol_smooth(v, 11, -1), std::invalid_argument);
  }

  SUBCASE("smoothing shrinks noise against the noiseless oracle") {
    ChinchillaParams h = hoffmann_params();
    ModelSpec m{"m", 1 << 20, 1};
    std::vector<double> grid = log_spaced(1e9, 1e15, 200);
    NoiseConfig none;
    NoiseConfig awgn;
    awgn.kind = NoiseKind::Awgn;
    awgn.sigma2 = 0.002;
    awgn.weight = 1.0;
    LearningCurve clean = generate_curve(h, m, grid, none, 0);
    LearningCurve noisy = generate_curve(h, m, grid, awgn, 11);
    LearningCurve smooth = savgol_smooth(noisy, 11, 3);
    REQUIRE(clean.points.size() == noisy.points.size());
    double before = 0, after = 0;
    for (std::size_t i = 0; i < clean.points.size(); ++i) {
      before += std::pow(noisy.points[i].loss - clean.points[i].loss, 2);
      after += std::pow(smooth.points[i].loss - clean.points[i].loss, 2);
    }
    CHECK(after < before);
  }
}

TEST_CASE("normalization maps endpoints and inverts") {
  NormalizationSpec spec{1e15, 1e19, 1.5, 4.5, 10.0};
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.norm_compute(1e15) == doctest::Approx(0.0));
  CHECK(spec.norm_compute(1e19) == doctest::Approx(1.0));
  CHECK(spec.norm_loss(4.5) == doctest::Approx(10.0));
  CHECK(spec.norm_loss(1.5) == doctest::Approx(0.0));

  LearningCurve c;
  c.model = {"m", 8, 1};
  c.points = {{1e15, 4.5, Provenance::Trained},
              {3e17, 2.8, Provenance::Trained},
              {1e19, 1.5, Provenance::Trained}};
  LearningCurve n = normalize(c, spec);
  CHECK(n.points.front().compute == doctest::Approx(0.0));
  CHECK(n.points.back().compute == doctest::Approx(1.0));
  CHECK(n.points.front().loss == doctest::Approx(10.0));
  for (std::size_t i = 0; i + 1 < n.points.size(); ++i)
    CHECK(n.points[i].compute < n.points[i + 1].compute);  // monotonicity preserved
  for (std::size_t i = 0; i < n.points.size(); ++i) {
    CHECK(spec.denorm_compute(n.points[i].compute) ==
          doctest::Approx(c.points[i].compute).epsilon(1e-12));
    CHECK(spec.denorm_loss(n.points[i].loss) == doctest::Approx(c.points[i].loss).epsilon(1e-12));
  }

  SUBCASE("out-of-range compute raises an error naming the point") {
    c.points.push_back({2e19, 1.4, Provenance::Trained});
    try {
      normalize(c, spec);
      FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      CHECK(msg.find("point 3") != std::string::npos);
      CHECK(msg.find('m') != std::string::npos);
    }
  }

  SUBCASE("loss outside the bounds does not raise") {
    c.points = {{1e16, 9.9, Provenance::Trained}};
    CHECK_NOTHROW(normalize(c, spec));
  }

  SUBCASE("bad specs rejected") {
    CHECK_THROWS_AS((NormalizationSpec{1.0, 1.0, 0.0, 1.0, 10.0}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((NormalizationSpec{0.0, 1.0, 1.0, 1.0, 10.0}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((NormalizationSpec{0.0, 1.0, 0.0, 1.0, 0.0}).validate(),
                    std::invalid_argument);
  }
}

TEST_CASE("subsample picks log-even subsequences") {
  std::vector<double> grid = log_spaced(1e10, 1e20, 200);
  LearningCurve c;
  c.model = {"m", 8, 1};
  for (double g : grid) c.points.push_back({g, 1.0 / std::log(g), Provenance::Trained});

  SUBCASE("k = 2 keeps exactly the endpoints") {
    LearningCurve out = subsample(c, 2);
    REQUIRE(out.points.size() == 2);
    CHECK(out.points.front().compute == grid.front());
    CHECK(out.points.back().compute == grid.back());
  }

  SUBCASE("k = 20 on a 200-point log grid hits the arithmetically nearest indices") {
    std::vector<std::size_t> idx = subsample_indices(grid, 20);
    std::vector<std::size_t> expected = {0,   10,  21,  31,  42,  52,  63,  73,  84,  94,
                                         105, 115, 126, 136, 147, 157, 168, 178, 189, 199};
    CHECK(idx == expected);
  }

  SUBCASE("k >= length returns the curve whole") {
    LearningCurve shorty;
    shorty.model = c.model;
    shorty.points.assign(c.points.begin(), c.points.begin() + 12);
    LearningCurve out = subsample(shorty, 20);
    CHECK(out.points.size() == 12);
  }

  SUBCASE("output is a strictly increasing subsequence") {
    LearningCurve out = subsample(c, 20);
    std::size_t at = 0;
    for (const CurvePoint& p : out.points) {
      while (at < c.points.size() && c.points[at].compute != p.compute) ++at;
      REQUIRE(at < c.points.size());  // every output point exists in the input, in order
      ++at;
    }
  }

  SUBCASE("invalid k") {
    CHECK_THROWS_AS(subsample(c, 1), std::invalid_argument);
    std::vector<double> single = {1.0};
    CHECK_THROWS_AS(subsample_indices(single, 2), std::invalid_argument);
  }
}
