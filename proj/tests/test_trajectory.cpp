#include "smr/trajectory.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace smr;
using Catch::Approx;

namespace {
constexpr double kPi = 3.14159265358979323846;

double unwrap_angle(const SpiralArm& arm, Index i) { return std::atan2(arm.samples(i, 1), arm.samples(i, 0)); }

// Sum of the angular increments between consecutive samples.
std::vector<double> cumulative_theta(const SpiralArm& arm) {
  std::vector<double> th(static_cast<size_t>(arm.n_samples()), 0.0);
  th[1] = unwrap_angle(arm, 1);
  for (Index i = 2; i < arm.n_samples(); ++i) {
    double d = unwrap_angle(arm, i) - unwrap_angle(arm, i - 1);
    while (d > kPi) d -= 2 * kPi;
    while (d < -kPi) d += 2 * kPi;
    th[static_cast<size_t>(i)] = th[static_cast<size_t>(i - 1)] + d;
  }
  return th;
}
} // namespace

TEST_CASE("FOV schedule", "[trajectory]") {
  const auto fov = FovSchedule::speech_default();
  CHECK(fov(0.0) == Approx(60.0));
  CHECK(fov(0.25) == Approx(30.0));
  CHECK(fov(0.5) == Approx(20.0));
  CHECK(fov(1.0) == Approx(6.66));
  CHECK(fov(0.1) == Approx(48.0));
  CHECK_THROWS_AS(FovSchedule({{0.0, 10.0}, {0.5, 5.0}}), ArgumentError);
  CHECK_THROWS_AS(FovSchedule({{0.0, 10.0}, {0.5, 5.0}, {0.4, 2.0}, {1.0, 2.0}}), ArgumentError);
  CHECK_THROWS_AS(FovSchedule({{0.0, 10.0}, {1.0, 0.0}}), ArgumentError);
}

TEST_CASE("design_vds with the speech defaults", "[trajectory]") {
  const auto arm = design_vds(FovSchedule::speech_default(), 27, 335, 0.24);
  REQUIRE(arm.n_samples() == 335);
  const double kmax = 1.0 / 0.48;
  CHECK(std::abs(arm.samples.row(334).norm() - kmax) < 1e-9);
  CHECK(arm.samples.row(0).norm() == 0.0);
  for (Index i = 1; i < arm.n_samples(); ++i) {
    REQUIRE(arm.samples.row(i).norm() >= arm.samples.row(i - 1).norm());
  }
  // Uniform arc length between samples.
  ReVector steps(334);
  for (Index i = 0; i < 334; ++i) steps(i) = (arm.samples.row(i + 1) - arm.samples.row(i)).norm();
  CHECK(steps.maxCoeff() / steps.minCoeff() < 1.05);
}

TEST_CASE("VDS angular density follows the FOV schedule", "[trajectory]") {
  const auto schedule = FovSchedule::speech_default();
  const auto arm = design_vds(schedule, 27, 2000, 0.24);
  const auto th = cumulative_theta(arm);
  // Local FOV implied by the angular rate: fov = n_arms * dtheta/dk_r / (2 pi k_max).
  for (double target : {0.1, 0.4, 0.8}) {
    Index i = 1;
    while (arm.samples.row(i).norm() / arm.k_max < target) ++i;
    const double dkr = (arm.samples.row(i + 5).norm() - arm.samples.row(i - 5).norm()) / arm.k_max;
    const double dth = th[static_cast<size_t>(i + 5)] - th[static_cast<size_t>(i - 5)];
    const double fov = 27.0 * (dth / dkr) / (2 * kPi * arm.k_max);
    CHECK(fov == Approx(schedule(target)).epsilon(0.05));
  }
}

TEST_CASE("constant schedule gives an Archimedean spiral", "[trajectory]") {
  const auto arm = design_vds(FovSchedule::constant(20.0), 8, 400, 0.3);
  const auto th = cumulative_theta(arm);
  // theta / k_r is constant.
  const double ref = th[200] / (arm.samples.row(200).norm() / arm.k_max);
  for (Index i : {50, 120, 300, 399}) {
    const double ratio = th[static_cast<size_t>(i)] / (arm.samples.row(i).norm() / arm.k_max);
    CHECK(std::abs(ratio - ref) / ref < 1e-3);
  }
  CHECK(ref == Approx(2 * kPi * 20.0 * arm.k_max / 8.0).epsilon(1e-3));
}

TEST_CASE("design_vds argument checks", "[trajectory]") {
  CHECK_THROWS_AS(design_vds(FovSchedule::speech_default(), 0, 335, 0.24), ArgumentError);
  CHECK_THROWS_AS(design_vds(FovSchedule::speech_default(), 27, 8, 0.24), ArgumentError);
}

TEST_CASE("golden-angle schedule", "[trajectory]") {
  const auto arm = design_vds(FovSchedule::speech_default(), 27, 335, 0.24);
  SECTION("single slice") {
    const auto t = golden_schedule(arm, 10, 3, 1);
    CHECK(t.angle(0, 0) == 0.0);
    CHECK(t.angle(0, 1) == Approx(222.379).margin(1e-9));
    CHECK(t.angle(0, 2) == Approx(84.758).margin(1e-9));
    CHECK(t.angles_deg.size() == 30);
  }
  SECTION("first 27 angles are distinct") {
    const auto t = golden_schedule(arm, 9, 3, 1);
    for (Index i = 0; i < 27; ++i) {
      for (Index j = i + 1; j < 27; ++j) {
        const double d = std::abs(t.angles_deg[size_t(i)] - t.angles_deg[size_t(j)]);
        REQUIRE(std::min(d, 360 - d) > 1e-6);
      }
    }
  }
  SECTION("multi-slice holds the angle across slices") {
    const auto t = golden_schedule(arm, 5, 3, 3);
    CHECK(t.angles_deg.size() == 45);
    for (Index f = 0; f < 5; ++f) {
      for (Index a = 0; a < 3; ++a) {
        CHECK(t.angle(f, a, 0) == t.angle(f, a, 1));
        CHECK(t.angle(f, a, 0) == t.angle(f, a, 2));
      }
    }
    CHECK(t.angle(0, 1, 0) == Approx(222.379).margin(1e-9));
  }
  SECTION("frame coordinates are normalized to half a cycle per pixel") {
    const auto t = golden_schedule(arm, 2, 3, 1);
    const Coords k = t.frame_coords(1);
    CHECK(k.rows() == 3 * 335);
    CHECK(k.rowwise().norm().maxCoeff() == Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("density compensation", "[trajectory][dcf]") {
  SECTION("uniform-density spiral weights grow linearly with radius") {
    const auto arm = uniform_radius_spiral(20.0, 4, 200, 0.25);
    const ReVector w = density_compensation(arm);
    const double r1 = arm.samples.row(50).norm(), r2 = arm.samples.row(150).norm();
    CHECK(w(150) / w(50) == Approx(r2 / r1).epsilon(0.05));
  }
  SECTION("all weights positive and normalized to the disc area") {
    const auto arm = design_vds(FovSchedule::speech_default(), 27, 335, 0.24);
    const ReVector w = density_compensation(arm);
    CHECK(w.minCoeff() > 0);
    CHECK(27.0 * w.sum() == Approx(kPi * arm.k_max * arm.k_max).epsilon(1e-12));
  }
  SECTION("matches Voronoi cell areas of a two-arm spiral") {
    const auto arm = uniform_radius_spiral(6.0, 2, 100, 0.5);
    const ReVector w = density_compensation(arm);
    // Both rotated arms as the sample set.
    Coords pts(200, 2);
    pts.topRows(100) = arm.samples;
    pts.bottomRows(100) = -arm.samples;
    // Brute-force Voronoi areas on a fine raster clipped to the k_max disc.
    const Index n = 1200;
    const double h = 2.0 * arm.k_max / n;
    std::vector<double> area(200, 0.0);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double x = -arm.k_max + (i + 0.5) * h, y = -arm.k_max + (j + 0.5) * h;
        if (x * x + y * y > arm.k_max * arm.k_max) continue;
        Index best = 0;
        double bd = 1e300;
        for (Index s = 0; s < 200; ++s) {
          const double d = (pts(s, 0) - x) * (pts(s, 0) - x) + (pts(s, 1) - y) * (pts(s, 1) - y);
          if (d < bd) {
            bd = d;
            best = s;
          }
        }
        area[size_t(best)] += h * h;
      }
    }
    int checked = 0;
    for (Index s = 0; s < 100; ++s) {
      const double kr = arm.samples.row(s).norm() / arm.k_max;
      if (kr < 0.3 || kr > 0.8) continue;
      CHECK(w(s) == Approx(area[size_t(s)]).epsilon(0.15));
      ++checked;
    }
    CHECK(checked > 10);
  }
}

TEST_CASE("trajectory CSV export", "[trajectory][io]") {
  const auto arm = design_vds(FovSchedule::speech_default(), 27, 335, 0.24);
  const auto t = golden_schedule(arm, 2, 2, 1);
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "frame,arm,slice,sample,kx,ky,dcf");
  Index rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2 * 2 * 335);
}
