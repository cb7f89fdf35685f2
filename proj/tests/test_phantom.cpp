#include "smr/phantom.hpp"

#include <catch_amalgamated.hpp>

using namespace smr;
using Catch::Approx;

namespace {
constexpr double kPi = 3.14159265358979323846;

Trajectory speech_traj(Index frames, Index apf, double increment = kGoldenAngleDeg) {
  return golden_schedule(design_vds(FovSchedule::speech_default(), 27, 335, 0.24), frames, apf, 1, increment);
}

PhantomSpec static_scene(Index frames) {
  PhantomSpec s = PhantomSpec::speech_default(64, 64, frames);
  s.static_ellipses.push_back(s.moving[0].shape);
  s.moving.clear();
  return s;
}
} // namespace

TEST_CASE("render_frame", "[phantom]") {
  SECTION("static scene is identical in every frame") {
    const auto spec = static_scene(5);
    const CxMatrix f0 = render_frame(spec, 0);
    for (Index t = 1; t < 5; ++t) CHECK(render_frame(spec, t) == f0);
  }
  SECTION("periodic law repeats bit-exactly") {
    const auto spec = PhantomSpec::speech_default(32, 32, 60, 20);
    for (Index t = 0; t < 40; ++t) REQUIRE(render_frame(spec, t) == render_frame(spec, t + 20));
    CHECK(render_frame(spec, 0) != render_frame(spec, 10));
  }
  SECTION("anti-aliased disc area") {
    for (double rho : {6.0, 10.0, 17.5}) {
      PhantomSpec spec;
      spec.rows = spec.cols = 64;
      spec.n_frames = 1;
      spec.static_ellipses = {{0.0, 0.0, rho / 64, rho / 64, 0.0, 1.0}};
      const double sum = render_frame(spec, 0).real().sum();
      CHECK(sum == Approx(kPi * rho * rho).epsilon(0.01));
    }
  }
  SECTION("frame index out of range") {
    const auto spec = PhantomSpec::speech_default(16, 16, 4);
    CHECK_THROWS_AS(render_frame(spec, 4), ArgumentError);
    CHECK_THROWS_AS(render_frame(spec, -1), ArgumentError);
  }
  SECTION("render_all stacks frames") {
    const auto spec = PhantomSpec::speech_default(16, 16, 4);
    const auto X = render_all(spec);
    CHECK(X.X.rows() == 256);
    CHECK(X.n_frames() == 4);
    CHECK(X.frame(3) == render_frame(spec, 3));
  }
}

TEST_CASE("phantom validation", "[phantom]") {
  auto spec = PhantomSpec::speech_default(32, 32, 40);
  CHECK_NOTHROW(spec.validate());
  SECTION("ellipse pushed outside the FOV by its motion") {
    spec.moving[0].law.amplitude = {0.4, 0.0, 0.0};
    CHECK_THROWS_AS(spec.validate(), ArgumentError);
  }
  SECTION("intensity above one") {
    spec.static_ellipses[0].intensity = 1.5;
    CHECK_THROWS_AS(spec.validate(), ArgumentError);
  }
  SECTION("two-cluster scene is valid and alternates") {
    const auto tc = PhantomSpec::two_cluster(32, 32, 6);
    CHECK_NOTHROW(tc.validate());
    CHECK(render_frame(tc, 0) == render_frame(tc, 2));
    CHECK(render_frame(tc, 0) != render_frame(tc, 1));
  }
}

TEST_CASE("motion laws", "[phantom]") {
  SECTION("periodic offsets repeat exactly") {
    MotionLaw law;
    law.amplitude = {0.05, 0.03, 10.0};
    law.period = 7;
    for (Index t = 0; t < 30; ++t) CHECK(law.offset(t) == law.offset(t + 7));
  }
  SECTION("smooth-random steps stay below the declared bound") {
    MotionLaw law;
    law.kind = MotionKind::smooth_random;
    law.amplitude = {0.05, 0.04, 12.0};
    law.bandwidth = 0.08;
    law.seed = 42;
    const auto bound = law.max_step();
    for (Index t = 0; t < 300; ++t) {
      const auto a = law.offset(t), b = law.offset(t + 1);
      for (size_t p = 0; p < 3; ++p) REQUIRE(std::abs(b[p] - a[p]) <= bound[p]);
    }
    CHECK(law.offset(17) == law.offset(17));
  }
}

TEST_CASE("synthetic coil maps", "[phantom][maps]") {
  SECTION("uniform limit") {
    CoilGeometry g;
    g.uniform = true;
    const auto m = synth_coilmaps(1, 8, 8, g);
    CHECK(m.maps[0] == CxMatrix::Ones(8, 8));
  }
  SECTION("opposite coils are point reflections in magnitude") {
    const auto m = synth_coilmaps(8, 32, 32);
    for (Index j = 0; j < 4; ++j) {
      for (Index c = 1; c < 32; ++c) {
        for (Index r = 1; r < 32; ++r) {
          REQUIRE(std::abs(m.maps[size_t(j)](r, c)) == Approx(std::abs(m.maps[size_t(j + 4)](32 - r, 32 - c))).epsilon(1e-12));
        }
      }
    }
  }
  SECTION("RSS coverage and bound") {
    const auto m = synth_coilmaps(8, 64, 64);
    CHECK_NOTHROW(m.validate());
    const ReMatrix rss = m.sum_of_squares().cwiseSqrt();
    CHECK(rss.minCoeff() >= 0.05 * rss.maxCoeff());
    for (const auto& c : m.maps) CHECK(c.cwiseAbs().maxCoeff() <= 1.0);
  }
  SECTION("argument checks") { CHECK_THROWS_AS(synth_coilmaps(0, 8, 8), ArgumentError); }
}

TEST_CASE("simulate_kt", "[phantom][simulate]") {
  SECTION("fully sampled static scene reconstructs by gridding") {
    const auto spec = static_scene(1);
    const auto traj = speech_traj(1, 27, 360.0 / 27);
    AcquisitionSpec acq;
    acq.arms_per_frame = 27;
    acq.snr_db = kNoNoise;
    const auto maps = synth_coilmaps(8, 64, 64);
    const auto sim = simulate_kt(spec, traj, acq, maps);
    const CxMatrix rec = gridding_recon(sim.data.frames[0], traj.frame_coords(0), arm_set_weights(traj, 27), maps);
    const CxMatrix truth = sim.truth.frame(0);
    CHECK((rec - truth).norm() / truth.norm() < 0.05);
  }
  SECTION("noise-off simulation is deterministic") {
    const auto spec = PhantomSpec::speech_default(32, 32, 6, 3);
    const auto traj = speech_traj(6, 3);
    AcquisitionSpec acq;
    acq.n_coils = 2;
    acq.snr_db = kNoNoise;
    const auto maps = synth_coilmaps(2, 32, 32);
    const auto a = simulate_kt(spec, traj, acq, maps), b = simulate_kt(spec, traj, acq, maps);
    for (size_t f = 0; f < 6; ++f) CHECK(a.data.frames[f] == b.data.frames[f]);
    acq.snr_db = 20;
    const auto c = simulate_kt(spec, traj, acq, maps), d = simulate_kt(spec, traj, acq, maps);
    for (size_t f = 0; f < 6; ++f) CHECK(c.data.frames[f] == d.data.frames[f]);
    acq.noise_seed = 99;
    CHECK(simulate_kt(spec, traj, acq, maps).data.frames[0] != c.data.frames[0]);
  }
  SECTION("forward model is consistent with the reconstruction operator") {
    const auto spec = PhantomSpec::speech_default(64, 64, 4);
    const auto traj = speech_traj(4, 3);
    AcquisitionSpec acq;
    acq.snr_db = kNoNoise;
    const auto maps = synth_coilmaps(8, 64, 64);
    const auto sim = simulate_kt(spec, traj, acq, maps);
    const EncodingOperator op(maps, traj);
    for (Index f = 0; f < 4; ++f) {
      const CxMatrix y = sense_forward(sim.truth.frame(f), op, f);
      CHECK((y - sim.data.frames[size_t(f)]).norm() / y.norm() < 0.02);
    }
    acq.inverse_crime = true;
    const auto crime = simulate_kt(spec, traj, acq, maps);
    CHECK((sense_forward(crime.truth.frame(2), op, 2) - crime.data.frames[2]).norm() < 1e-12 * crime.data.frames[2].norm());
  }
  SECTION("noise power matches the requested SNR") {
    const auto spec = PhantomSpec::speech_default(32, 32, 40);
    const auto traj = speech_traj(40, 3);
    AcquisitionSpec acq;
    acq.snr_db = kNoNoise;
    const auto maps = synth_coilmaps(8, 32, 32);
    const auto clean = simulate_kt(spec, traj, acq, maps);
    acq.snr_db = 30;
    const auto noisy = simulate_kt(spec, traj, acq, maps);
    double ps = 0, pn = 0;
    Index n = 0;
    for (size_t f = 0; f < 40; ++f) {
      ps += clean.data.frames[f].squaredNorm();
      pn += (noisy.data.frames[f] - clean.data.frames[f]).squaredNorm();
      n += clean.data.frames[f].size();
    }
    REQUIRE(n >= 100000);
    CHECK(std::abs(10 * std::log10(ps / pn) - 30.0) < 0.5);
  }
  SECTION("dimension mismatches") {
    const auto spec = PhantomSpec::speech_default(32, 32, 6);
    AcquisitionSpec acq;
    acq.n_coils = 2;
    const auto maps = synth_coilmaps(2, 32, 32);
    CHECK_THROWS_AS(simulate_kt(spec, speech_traj(5, 3), acq, maps), ShapeError);
    CHECK_THROWS_AS(simulate_kt(spec, speech_traj(6, 3), acq, synth_coilmaps(3, 32, 32)), ShapeError);
    CHECK_THROWS_AS(simulate_kt(spec, speech_traj(6, 3), acq, synth_coilmaps(2, 16, 16)), ShapeError);
  }
}

TEST_CASE("add_noise", "[phantom][noise]") {
  KtData d;
  d.traj = speech_traj(1, 1);
  CxMatrix y(200000, 1);
  for (Index i = 0; i < y.size(); ++i) y(i) = std::polar(1.0, 0.001 * double(i));
  d.frames = {y};
  SECTION("infinite SNR leaves data unchanged") { CHECK(add_noise(d, kNoNoise, 1).frames[0] == y); }
  SECTION("60 dB on a unit-power signal") {
    const auto n = add_noise(d, 60.0, 3);
    const double p = (n.frames[0] - y).squaredNorm() / double(y.size());
    CHECK(p == Approx(1e-6).epsilon(0.1));
  }
  SECTION("zero signal is degenerate") {
    d.frames[0].setZero();
    CHECK_THROWS_AS(add_noise(d, 30.0, 1), DegenerateInputError);
  }
}
