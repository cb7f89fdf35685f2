#pragma once

// Synthetic dynamic scenes built from ellipses, analytic coil sensitivities and
// retrospective k-t simulation.

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "smr/encoding.hpp"
#include "smr/trajectory.hpp"
#include "smr/types.hpp"

namespace smr {

/// Ellipse in FOV units: the image spans [-0.5, 0.5) along both axes, x along
/// rows and y along columns.
struct Ellipse {
  double x = 0, y = 0;  // center
  double a = 0.1, b = 0.1; // semi-axes along the rotated x and y
  double angle_deg = 0;
  double intensity = 1;

  [[nodiscard]] bool contains(double px, double py) const;
  /// Half-widths of the axis-aligned bounding box.
  [[nodiscard]] std::array<double, 2> half_extent() const;
};

enum class MotionKind { periodic, smooth_random };
enum class Waveform { loop, square };

/// Displacement law for (x, y, angle_deg). Periodic laws trace a closed loop
/// x = ax cos(2 pi t/P), y = ay sin(2 pi t/P), angle = aa cos(2 pi t/P), or a
/// two-level square wave; smooth-random laws are seeded sums of sinusoids below
/// `bandwidth` cycles/frame.
struct MotionLaw {
  MotionKind kind = MotionKind::periodic;
  Waveform waveform = Waveform::loop;
  std::array<double, 3> amplitude{0, 0, 0};
  Index period = 20;
  double bandwidth = 0.05;
  std::uint64_t seed = 1;

  [[nodiscard]] std::array<double, 3> offset(Index t) const;
  /// Upper bound on |offset(t+1) - offset(t)| per parameter.
  [[nodiscard]] std::array<double, 3> max_step() const;
};

struct MovingEllipse {
  Ellipse shape;
  MotionLaw law;

  [[nodiscard]] Ellipse at(Index t) const;
};

struct PhantomSpec {
  std::vector<Ellipse> static_ellipses;
  std::vector<MovingEllipse> moving;
  Index rows = 64;
  Index cols = 64;
  Index n_frames = 200;
  double frame_ms = 17.4; // metadata only

  /// Head, palate and a tongue on a closed periodic loop.
  static PhantomSpec speech_default(Index rows = 64, Index cols = 64, Index n_frames = 200, Index period = 20);
  /// Tongue alternating between two fixed postures every frame.
  static PhantomSpec two_cluster(Index rows = 64, Index cols = 64, Index n_frames = 200);
  /// Throws ArgumentError if an ellipse leaves the FOV or an intensity is outside [0, 1].
  void validate() const;
};

struct AcquisitionSpec {
  Index arms_per_frame = 3;
  Index n_coils = 8;
  double snr_db = 30.0; // +infinity disables noise
  std::uint64_t noise_seed = 7;
  bool inverse_crime = false; // simulate on the reconstruction grid with the recon operator

  void validate() const;
};

/// Frame t rasterized on a 2x fine grid and box-downsampled (rows x cols).
CxMatrix render_frame(const PhantomSpec& spec, Index t);
/// The 2x fine raster itself (2 rows x 2 cols); fine pixel q sits at q/2 - 1/4
/// reconstruction pixels from pixel 0.
CxMatrix render_frame_fine(const PhantomSpec& spec, Index t);
CasoratiImage render_all(const PhantomSpec& spec);

struct CoilGeometry {
  double radius = 0.75;      // coil ring radius, FOV units
  double sigma = 0.45;       // Gaussian sensitivity width, FOV units
  double phase_cycles = 0.4; // linear phase across the FOV
  bool uniform = false;      // all maps identically 1
};

/// Coils evenly spaced on a ring around the FOV with Gaussian magnitude and a
/// linear phase ramp pointing at the coil.
CoilMaps synth_coilmaps(Index n_coils, Index rows, Index cols, const CoilGeometry& geo = {});

struct Simulation {
  KtData data;
  CasoratiImage truth;
};

/// Retrospective acquisition: per frame, the fine-grid scene is modulated by
/// the coil maps (interpolated to the fine grid) and sampled along that frame's
/// arms; complex Gaussian noise follows `acq.snr_db`.
Simulation simulate_kt(const PhantomSpec& spec, const Trajectory& traj, const AcquisitionSpec& acq,
                       const CoilMaps& maps, Index slice = 0);

/// i.i.d. complex Gaussian noise with total power set by snr_db relative to the
/// mean sample power. Each frame draws from its own stream derived from `seed`.
KtData add_noise(KtData data, double snr_db, std::uint64_t seed);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

} // namespace smr
