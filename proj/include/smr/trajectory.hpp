#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "smr/types.hpp"

namespace smr {

/// Piecewise-linear field of view (cm) as a function of normalized k-space
/// radius k_r in [0, 1].
class FovSchedule {
public:
  FovSchedule(std::vector<std::pair<double, double>> breakpoints);

  /// 60 cm at the center down to 6.66 cm at the edge, with knees at 0.25 and 0.5.
  static FovSchedule speech_default();
  static FovSchedule constant(double fov_cm);

  [[nodiscard]] double operator()(double kr) const;
  /// Integral of fov from 0 to kr (exact for the piecewise-linear schedule).
  [[nodiscard]] double integral(double kr) const;
  [[nodiscard]] const std::vector<std::pair<double, double>>& breakpoints() const { return pts_; }

private:
  std::vector<std::pair<double, double>> pts_;
};

struct SpiralArm {
  Coords samples;         // cycles/cm, one (k_row, k_col) pair per row
  double k_max = 0;       // cycles/cm
  double resolution = 0;  // cm
  Index design_arms = 1;  // interleaves the density was designed for

  [[nodiscard]] Index n_samples() const { return samples.rows(); }
};

inline constexpr double kGoldenAngleDeg = 222.379;

struct Trajectory {
  SpiralArm base_arm;
  std::vector<double> angles_deg; // index ((frame * arms_per_frame) + arm) * n_slices + slice
  ReVector dcf;                   // per base-arm sample, shared by every rotated arm
  Index arms_per_frame = 1;
  Index n_frames = 1;
  Index n_slices = 1;

  [[nodiscard]] double angle(Index frame, Index arm, Index slice = 0) const;
  [[nodiscard]] Index samples_per_frame() const { return arms_per_frame * base_arm.n_samples(); }
  [[nodiscard]] Index total_arms() const { return n_frames * arms_per_frame; }

  /// Rotated base arm in cycles/cm.
  [[nodiscard]] Coords arm_coords(Index frame, Index arm, Index slice = 0) const;
  /// All arms of a frame, concatenated arm-major, in cycles/pixel of the
  /// reconstruction grid (k_max maps to 0.5).
  [[nodiscard]] Coords frame_coords(Index frame, Index slice = 0) const;
};

/// Variable-density spiral whose angular rate matches the Nyquist spacing of
/// `schedule` for `n_arms` interleaves, sampled at uniform arc length.
SpiralArm design_vds(const FovSchedule& schedule, Index n_arms, Index n_samples, double resolution_cm);

/// Archimedean arm with samples at uniform radius steps; used as the analytic
/// uniform-density reference.
SpiralArm uniform_radius_spiral(double fov_cm, Index n_arms, Index n_samples, double resolution_cm);

/// Rotation schedule: arm counter i (frame * arms_per_frame + arm) gets angle
/// (i * increment) mod 360; every slice shares the angle of its counter.
Trajectory golden_schedule(const SpiralArm& base, Index n_frames, Index arms_per_frame, Index n_slices = 1,
                           double increment_deg = kGoldenAngleDeg);

/// Radial-density weights w_i = (2 pi / n_arms) |k_i| d|k|_i for the base arm,
/// floored at the area of the DC cell and scaled so that all design_arms
/// rotated copies sum to the area of the k-space disc.
ReVector density_compensation(const SpiralArm& arm);
ReVector density_compensation(const Trajectory& traj);

/// CSV with columns frame,arm,slice,sample,kx,ky,dcf (k in cycles/cm).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace smr
