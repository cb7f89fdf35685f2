#include "smr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "smr/nufft.hpp"

namespace smr {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;
constexpr int kRandomComponents = 8;

// Linear interpolation onto the 2x fine grid; fine pixel q sits at q/2 - 1/4 in
// coarse pixel units and the edge cells are extrapolated.
CxMatrix upsample2x(const CxMatrix& m) {
  const Index R = m.rows(), C = m.cols();
  CxMatrix out(2 * R, 2 * C);
  auto locate = [](Index q, Index n, Index& i0, double& t) {
    const double s = 0.5 * static_cast<double>(q) - 0.25;
    i0 = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, n - 2);
    t = s - static_cast<double>(i0);
  };
  for (Index qc = 0; qc < 2 * C; ++qc) {
    Index c0;
    double tc;
    locate(qc, C, c0, tc);
    for (Index qr = 0; qr < 2 * R; ++qr) {
      Index r0;
      double tr;
      locate(qr, R, r0, tr);
      out(qr, qc) = (1 - tr) * ((1 - tc) * m(r0, c0) + tc * m(r0, c0 + 1)) +
                    tr * ((1 - tc) * m(r0 + 1, c0) + tc * m(r0 + 1, c0 + 1));
    }
  }
  return out;
}

std::mt19937_64 frame_stream(std::uint64_t seed, Index frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), 0x6e6f6973u};
  return std::mt19937_64(seq);
}
} // namespace

bool Ellipse::contains(double px, double py) const {
  const double dx = px - x, dy = py - y;
  const double c = std::cos(angle_deg * kDeg), s = std::sin(angle_deg * kDeg);
  const double u = (dx * c + dy * s) / a, v = (-dx * s + dy * c) / b;
  return u * u + v * v <= 1.0;
}

std::array<double, 2> Ellipse::half_extent() const {
  const double c = std::cos(angle_deg * kDeg), s = std::sin(angle_deg * kDeg);
  return {std::sqrt(a * a * c * c + b * b * s * s), std::sqrt(a * a * s * s + b * b * c * c)};
}

std::array<double, 3> MotionLaw::offset(Index t) const {
  if (kind == MotionKind::periodic) {
    const Index tm = ((t % period) + period) % period;
    if (waveform == Waveform::square) {
      const double s = 2 * tm < period ? 1.0 : -1.0;
      return {amplitude[0] * s, amplitude[1] * s, amplitude[2] * s};
    }
    const double ph = 2 * kPi * static_cast<double>(tm) / static_cast<double>(period);
    return {amplitude[0] * std::cos(ph), amplitude[1] * std::sin(ph), amplitude[2] * std::cos(ph)};
  }
  std::array<double, 3> out{0, 0, 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int p = 0; p < 3; ++p) {
    std::array<double, kRandomComponents> f{}, ph{}, w{};
    double wsum = 0;
    for (int k = 0; k < kRandomComponents; ++k) {
      f[size_t(k)] = bandwidth * unit(rng);
      ph[size_t(k)] = 2 * kPi * unit(rng);
      w[size_t(k)] = unit(rng);
      wsum += w[size_t(k)];
    }
    double v = 0;
    for (int k = 0; k < kRandomComponents; ++k) {
      v += w[size_t(k)] / wsum * std::sin(2 * kPi * f[size_t(k)] * static_cast<double>(t) + ph[size_t(k)]);
    }
    out[size_t(p)] = amplitude[size_t(p)] * v;
  }
  return out;
}

std::array<double, 3> MotionLaw::max_step() const {
  if (kind == MotionKind::periodic) {
    if (waveform == Waveform::square) return {2 * std::abs(amplitude[0]), 2 * std::abs(amplitude[1]), 2 * std::abs(amplitude[2])};
    const double k = 2 * kPi / static_cast<double>(period);
    return {std::abs(amplitude[0]) * k, std::abs(amplitude[1]) * k, std::abs(amplitude[2]) * k};
  }
  // Convex combination of sinusoids: |d/dt| <= 2 pi bandwidth * amplitude.
  const double k = 2 * kPi * bandwidth;
  return {std::abs(amplitude[0]) * k, std::abs(amplitude[1]) * k, std::abs(amplitude[2]) * k};
}

Ellipse MovingEllipse::at(Index t) const {
  const auto d = law.offset(t);
  Ellipse e = shape;
  e.x += d[0];
  e.y += d[1];
  e.angle_deg += d[2];
  return e;
}

PhantomSpec PhantomSpec::speech_default(Index rows, Index cols, Index n_frames, Index period) {
  PhantomSpec s;
  s.rows = rows;
  s.cols = cols;
  s.n_frames = n_frames;
  s.static_ellipses = {
      {0.0, 0.0, 0.42, 0.36, 0.0, 0.15},      // scalp
      {0.0, 0.0, 0.38, 0.32, 0.0, 0.2},       // soft tissue
      {-0.14, -0.04, 0.05, 0.16, 15.0, 0.5},  // palate
      {0.30, -0.02, 0.05, 0.09, 0.0, 0.4},    // jaw
  };
  MovingEllipse tongue;
  tongue.shape = {0.06, 0.02, 0.10, 0.15, 0.0, 0.6};
  tongue.law.kind = MotionKind::periodic;
  tongue.law.waveform = Waveform::loop;
  tongue.law.amplitude = {0.06, 0.05, 15.0};
  tongue.law.period = period;
  s.moving.push_back(tongue);
  return s;
}

PhantomSpec PhantomSpec::two_cluster(Index rows, Index cols, Index n_frames) {
  PhantomSpec s = speech_default(rows, cols, n_frames, 2);
  s.moving[0].law.waveform = Waveform::square;
  s.moving[0].law.amplitude = {0.06, 0.0, 10.0};
  return s;
}

void PhantomSpec::validate() const {
  if (rows < 2 || cols < 2) throw ArgumentError("PhantomSpec: grid must be at least 2x2");
  if (n_frames < 1) throw ArgumentError("PhantomSpec: need at least one frame");
  auto check = [](const Ellipse& e) {
    if (!(e.intensity >= 0 && e.intensity <= 1)) throw ArgumentError("PhantomSpec: intensity outside [0, 1]");
    if (!(e.a > 0 && e.b > 0)) throw ArgumentError("PhantomSpec: semi-axes must be positive");
    const auto h = e.half_extent();
    if (std::abs(e.x) + h[0] > 0.5 || std::abs(e.y) + h[1] > 0.5) {
      throw ArgumentError("PhantomSpec: ellipse leaves the field of view");
    }
  };
  for (const auto& e : static_ellipses) check(e);
  for (const auto& m : moving) {
    if (m.law.kind == MotionKind::periodic && m.law.period < 1) throw ArgumentError("MotionLaw: period must be >= 1");
    if (m.law.kind == MotionKind::smooth_random && !(m.law.bandwidth >= 0 && m.law.bandwidth <= 0.5)) {
      throw ArgumentError("MotionLaw: bandwidth must lie in [0, 0.5] cycles/frame");
    }
    for (Index t = 0; t < n_frames; ++t) check(m.at(t));
  }
}

void AcquisitionSpec::validate() const {
  if (arms_per_frame < 1) throw ArgumentError("AcquisitionSpec: arms_per_frame must be >= 1");
  if (n_coils < 1) throw ArgumentError("AcquisitionSpec: n_coils must be >= 1");
  if (std::isnan(snr_db)) throw ArgumentError("AcquisitionSpec: snr_db is NaN");
}

CxMatrix render_frame_fine(const PhantomSpec& spec, Index t) {
  if (t < 0 || t >= spec.n_frames) throw ArgumentError("render_frame: frame index out of range");
  std::vector<Ellipse> shapes = spec.static_ellipses;
  for (const auto& m : spec.moving) shapes.push_back(m.at(t));
  const Index R2 = 2 * spec.rows, C2 = 2 * spec.cols;
  CxMatrix fine = CxMatrix::Zero(R2, C2);
  for (Index c = 0; c < C2; ++c) {
    const double py = (0.5 * static_cast<double>(c) - 0.25 - static_cast<double>(spec.cols / 2)) / spec.cols;
    for (Index r = 0; r < R2; ++r) {
      const double px = (0.5 * static_cast<double>(r) - 0.25 - static_cast<double>(spec.rows / 2)) / spec.rows;
      double v = 0;
      for (const auto& e : shapes) {
        if (e.contains(px, py)) v += e.intensity;
      }
      fine(r, c) = v;
    }
  }
  return fine;
}

CxMatrix render_frame(const PhantomSpec& spec, Index t) {
  const CxMatrix fine = render_frame_fine(spec, t);
  CxMatrix out(spec.rows, spec.cols);
  for (Index c = 0; c < spec.cols; ++c) {
    for (Index r = 0; r < spec.rows; ++r) {
      out(r, c) = 0.25 * (fine(2 * r, 2 * c) + fine(2 * r + 1, 2 * c) + fine(2 * r, 2 * c + 1) + fine(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

CasoratiImage render_all(const PhantomSpec& spec) {
  spec.validate();
  CxMatrix X(spec.rows * spec.cols, spec.n_frames);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < spec.n_frames; ++t) set_frame(X, t, render_frame(spec, t));
  return {std::move(X), spec.rows, spec.cols};
}

CoilMaps synth_coilmaps(Index n_coils, Index rows, Index cols, const CoilGeometry& geo) {
  if (n_coils < 1) throw ArgumentError("synth_coilmaps: need at least one coil");
  if (rows < 2 || cols < 2) throw ArgumentError("synth_coilmaps: grid must be at least 2x2");
  CoilMaps out;
  for (Index j = 0; j < n_coils; ++j) {
    CxMatrix m(rows, cols);
    if (geo.uniform) {
      m.setOnes();
    } else {
      const double a = 2 * kPi * static_cast<double>(j) / static_cast<double>(n_coils);
      const double px = geo.radius * std::cos(a), py = geo.radius * std::sin(a);
      for (Index c = 0; c < cols; ++c) {
        const double y = static_cast<double>(c - cols / 2) / cols;
        for (Index r = 0; r < rows; ++r) {
          const double x = static_cast<double>(r - rows / 2) / rows;
          const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
          const double phase = 2 * kPi * geo.phase_cycles * (x * std::cos(a) + y * std::sin(a));
          m(r, c) = std::polar(std::exp(-d2 / (2 * geo.sigma * geo.sigma)), phase);
        }
      }
    }
    out.maps.push_back(std::move(m));
  }
  out.bound = 1.0;
  return out;
}

Simulation simulate_kt(const PhantomSpec& spec, const Trajectory& traj, const AcquisitionSpec& acq,
                       const CoilMaps& maps, Index slice) {
  spec.validate();
  acq.validate();
  maps.validate();
  if (traj.n_frames != spec.n_frames) throw ShapeError("simulate_kt: trajectory frame count differs from phantom");
  if (traj.arms_per_frame != acq.arms_per_frame) throw ShapeError("simulate_kt: arms_per_frame differs from trajectory");
  if (maps.rows() != spec.rows || maps.cols() != spec.cols) throw ShapeError("simulate_kt: coil map dims");
  if (maps.coils() != acq.n_coils) throw ShapeError("simulate_kt: coil count differs from acquisition");
  if (slice < 0 || slice >= traj.n_slices) throw ArgumentError("simulate_kt: slice out of range");

  Simulation sim;
  sim.truth = render_all(spec);
  sim.data.traj = traj;
  sim.data.slice = slice;
  sim.data.frames.resize(static_cast<size_t>(spec.n_frames));

  std::vector<CxMatrix> fine_maps;
  if (!acq.inverse_crime) {
    for (const auto& m : maps.maps) fine_maps.push_back(upsample2x(m));
  }

#pragma omp parallel for schedule(static)
  for (Index f = 0; f < spec.n_frames; ++f) {
    const Coords k = traj.frame_coords(f, slice);
    CxMatrix y(k.rows(), maps.coils());
    if (acq.inverse_crime) {
      const NufftPlan plan(spec.rows, spec.cols, k);
      const CxMatrix img = sim.truth.frame(f);
      for (Index j = 0; j < maps.coils(); ++j) y.col(j) = plan.forward(img.cwiseProduct(maps.maps[size_t(j)]));
    } else {
      // Fine pixel q sits at (q - rows)/2 - 1/4 from the reconstruction origin:
      // halve k for the fine grid and restore the quarter-pixel shift as a phase.
      const NufftPlan plan(2 * spec.rows, 2 * spec.cols, Coords(0.5 * k), NufftOptions{});
      CxVector shift(k.rows());
      for (Index s = 0; s < k.rows(); ++s) shift(s) = 0.5 * std::polar(1.0, 2 * kPi * 0.25 * (k(s, 0) + k(s, 1)));
      const CxMatrix fine = render_frame_fine(spec, f);
      for (Index j = 0; j < maps.coils(); ++j) {
        y.col(j) = plan.forward(fine.cwiseProduct(fine_maps[size_t(j)])).cwiseProduct(shift);
      }
    }
    sim.data.frames[static_cast<size_t>(f)] = std::move(y);
  }
  if (std::isfinite(acq.snr_db)) sim.data = add_noise(std::move(sim.data), acq.snr_db, acq.noise_seed);
  return sim;
}

KtData add_noise(KtData data, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db)) throw ArgumentError("add_noise: snr_db is NaN");
  if (std::isinf(snr_db) && snr_db > 0) return data;
  double power = 0;
  Index count = 0;
  for (const auto& f : data.frames) {
    power += f.squaredNorm();
    count += f.size();
  }
  if (count == 0 || !(power > 0)) throw DegenerateInputError("add_noise: signal power is zero");
  power /= static_cast<double>(count);
  const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0) / 2.0);
#pragma omp parallel for schedule(static)
  for (Index f = 0; f < data.n_frames(); ++f) {
    auto rng = frame_stream(seed, f);
    std::normal_distribution<double> nd(0.0, sigma);
    CxMatrix& y = data.frames[static_cast<size_t>(f)];
    for (Index i = 0; i < y.size(); ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      y.data()[i] += cx(re, im);
    }
  }
  return data;
}

} // namespace smr
