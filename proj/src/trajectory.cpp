#include "smr/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace smr {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_deg(double a) {
  double w = std::fmod(a, 360.0);
  if (w < 0) w += 360.0;
  return w;
}
} // namespace

FovSchedule::FovSchedule(std::vector<std::pair<double, double>> breakpoints) : pts_(std::move(breakpoints)) {
  if (pts_.size() < 2) throw ArgumentError("FovSchedule: need at least two breakpoints");
  if (pts_.front().first != 0.0 || pts_.back().first != 1.0) {
    throw ArgumentError("FovSchedule: breakpoints must start at k_r = 0 and end at k_r = 1");
  }
  for (size_t i = 0; i < pts_.size(); ++i) {
    if (!(pts_[i].second > 0)) throw ArgumentError("FovSchedule: fov values must be positive");
    if (i > 0 && !(pts_[i].first > pts_[i - 1].first)) {
      throw ArgumentError("FovSchedule: k_r breakpoints must be strictly increasing");
    }
  }
}

FovSchedule FovSchedule::speech_default() {
  return FovSchedule({{0.0, 60.0}, {0.25, 30.0}, {0.5, 20.0}, {1.0, 6.66}});
}

FovSchedule FovSchedule::constant(double fov_cm) { return FovSchedule({{0.0, fov_cm}, {1.0, fov_cm}}); }

double FovSchedule::operator()(double kr) const {
  kr = std::clamp(kr, 0.0, 1.0);
  for (size_t i = 1; i < pts_.size(); ++i) {
    if (kr <= pts_[i].first) {
      const auto [k0, f0] = pts_[i - 1];
      const auto [k1, f1] = pts_[i];
      return f0 + (f1 - f0) * (kr - k0) / (k1 - k0);
    }
  }
  return pts_.back().second;
}

double FovSchedule::integral(double kr) const {
  kr = std::clamp(kr, 0.0, 1.0);
  double acc = 0;
  for (size_t i = 1; i < pts_.size(); ++i) {
    const double k0 = pts_[i - 1].first;
    const double k1 = std::min(pts_[i].first, kr);
    if (k1 <= k0) break;
    acc += 0.5 * ((*this)(k0) + (*this)(k1)) * (k1 - k0);
  }
  return acc;
}

SpiralArm design_vds(const FovSchedule& schedule, Index n_arms, Index n_samples, double resolution_cm) {
  if (n_arms < 1) throw ArgumentError("design_vds: n_arms must be >= 1");
  if (n_samples < 16) throw ArgumentError("design_vds: n_samples must be >= 16");
  if (!(resolution_cm > 0)) throw ArgumentError("design_vds: resolution must be positive");

  const double k_max = 1.0 / (2.0 * resolution_cm);
  const double rate = 2.0 * kPi * k_max / static_cast<double>(n_arms); // dtheta/dk_r = rate * fov
  auto theta = [&](double kr) { return rate * schedule.integral(kr); };

  // Cumulative arc length on a fine k_r grid (Simpson per cell), then invert.
  constexpr Index kGrid = 200000;
  std::vector<double> kr(kGrid + 1), arc(kGrid + 1, 0.0);
  auto speed = [&](double r) {
    const double dtheta = rate * schedule(r);
    return k_max * std::sqrt(1.0 + (r * dtheta) * (r * dtheta));
  };
  for (Index i = 0; i <= kGrid; ++i) kr[i] = static_cast<double>(i) / kGrid;
  for (Index i = 1; i <= kGrid; ++i) {
    const double a = kr[i - 1], b = kr[i];
    arc[i] = arc[i - 1] + (b - a) / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
  }

  SpiralArm arm;
  arm.k_max = k_max;
  arm.resolution = resolution_cm;
  arm.design_arms = n_arms;
  arm.samples.resize(n_samples, 2);
  const double total = arc.back();
  Index cell = 1;
  for (Index s = 0; s < n_samples; ++s) {
    double r;
    if (s == n_samples - 1) {
      r = 1.0;
    } else {
      const double target = total * static_cast<double>(s) / static_cast<double>(n_samples - 1);
      while (cell < kGrid && arc[cell] < target) ++cell;
      const double t = (target - arc[cell - 1]) / (arc[cell] - arc[cell - 1]);
      r = kr[cell - 1] + t * (kr[cell] - kr[cell - 1]);
    }
    const double th = theta(r);
    arm.samples(s, 0) = r * k_max * std::cos(th);
    arm.samples(s, 1) = r * k_max * std::sin(th);
  }
  return arm;
}

SpiralArm uniform_radius_spiral(double fov_cm, Index n_arms, Index n_samples, double resolution_cm) {
  if (n_arms < 1 || n_samples < 2) throw ArgumentError("uniform_radius_spiral: bad counts");
  SpiralArm arm;
  arm.k_max = 1.0 / (2.0 * resolution_cm);
  arm.resolution = resolution_cm;
  arm.design_arms = n_arms;
  arm.samples.resize(n_samples, 2);
  const double rate = 2.0 * kPi * fov_cm * arm.k_max / static_cast<double>(n_arms);
  for (Index s = 0; s < n_samples; ++s) {
    const double r = static_cast<double>(s) / static_cast<double>(n_samples - 1);
    arm.samples(s, 0) = r * arm.k_max * std::cos(rate * r);
    arm.samples(s, 1) = r * arm.k_max * std::sin(rate * r);
  }
  return arm;
}

Trajectory golden_schedule(const SpiralArm& base, Index n_frames, Index arms_per_frame, Index n_slices,
                           double increment_deg) {
  if (n_frames < 1 || arms_per_frame < 1 || n_slices < 1) {
    throw ArgumentError("golden_schedule: counts must be >= 1");
  }
  Trajectory traj;
  traj.base_arm = base;
  traj.arms_per_frame = arms_per_frame;
  traj.n_frames = n_frames;
  traj.n_slices = n_slices;
  traj.angles_deg.resize(static_cast<size_t>(n_frames * arms_per_frame * n_slices));
  for (Index counter = 0; counter < n_frames * arms_per_frame; ++counter) {
    const double a = wrap_deg(static_cast<double>(counter) * increment_deg);
    for (Index s = 0; s < n_slices; ++s) traj.angles_deg[static_cast<size_t>(counter * n_slices + s)] = a;
  }
  traj.dcf = density_compensation(base);
  return traj;
}

double Trajectory::angle(Index frame, Index arm, Index slice) const {
  if (frame < 0 || frame >= n_frames || arm < 0 || arm >= arms_per_frame || slice < 0 || slice >= n_slices) {
    throw ArgumentError("Trajectory::angle: index out of range");
  }
  return angles_deg[static_cast<size_t>((frame * arms_per_frame + arm) * n_slices + slice)];
}

Coords Trajectory::arm_coords(Index frame, Index arm, Index slice) const {
  const double a = angle(frame, arm, slice) * kPi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  Coords out(base_arm.n_samples(), 2);
  out.col(0) = c * base_arm.samples.col(0) - s * base_arm.samples.col(1);
  out.col(1) = s * base_arm.samples.col(0) + c * base_arm.samples.col(1);
  return out;
}

Coords Trajectory::frame_coords(Index frame, Index slice) const {
  const Index ns = base_arm.n_samples();
  Coords out(arms_per_frame * ns, 2);
  for (Index a = 0; a < arms_per_frame; ++a) {
    out.middleRows(a * ns, ns) = arm_coords(frame, a, slice) * base_arm.resolution;
  }
  return out;
}

ReVector density_compensation(const SpiralArm& arm) {
  const Index n = arm.n_samples();
  ReVector radius = arm.samples.rowwise().norm();
  ReVector w(n);
  const double sector = 2.0 * kPi / static_cast<double>(arm.design_arms);
  for (Index i = 0; i < n; ++i) {
    double dr;
    if (i == 0) {
      dr = 0.5 * (radius(1) - radius(0));
    } else if (i == n - 1) {
      dr = 0.5 * (radius(n - 1) - radius(n - 2));
    } else {
      dr = 0.5 * (radius(i + 1) - radius(i - 1));
    }
    w(i) = sector * radius(i) * std::abs(dr);
  }
  // The center sample owns a disc of half the first radial step, shared by every arm.
  const double half_step = 0.5 * radius(1);
  const double floor = kPi * half_step * half_step / static_cast<double>(arm.design_arms);
  w = w.cwiseMax(floor);
  const double disc = kPi * arm.k_max * arm.k_max;
  w *= disc / (static_cast<double>(arm.design_arms) * w.sum());
  return w;
}

ReVector density_compensation(const Trajectory& traj) { return density_compensation(traj.base_arm); }

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "frame,arm,slice,sample,kx,ky,dcf\n";
  const ReVector& dcf = traj.dcf.size() ? traj.dcf : density_compensation(traj.base_arm);
  for (Index f = 0; f < traj.n_frames; ++f) {
    for (Index a = 0; a < traj.arms_per_frame; ++a) {
      for (Index s = 0; s < traj.n_slices; ++s) {
        const Coords k = traj.arm_coords(f, a, s);
        for (Index i = 0; i < k.rows(); ++i) {
          os << f << ',' << a << ',' << s << ',' << i << ',' << k(i, 0) << ',' << k(i, 1) << ',' << dcf(i) << '\n';
        }
      }
    }
  }
}

} // namespace smr
