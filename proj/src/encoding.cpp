#include "smr/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace smr {

ReMatrix CoilMaps::sum_of_squares() const {
  ReMatrix s = ReMatrix::Zero(rows(), cols());
  for (const auto& m : maps) s += m.cwiseAbs2();
  return s;
}

void CoilMaps::validate() const {
  if (maps.empty()) throw ArgumentError("CoilMaps: no coils");
  for (const auto& m : maps) {
    if (m.rows() != rows() || m.cols() != cols()) throw ShapeError("CoilMaps: coil dims differ");
    if (!m.allFinite()) throw ArgumentError("CoilMaps: non-finite sensitivity");
    if (m.size() && m.cwiseAbs().maxCoeff() > bound * (1 + 1e-12)) {
      throw ArgumentError("CoilMaps: sensitivity magnitude exceeds declared bound");
    }
  }
}

void KtData::validate() const {
  if (n_frames() != traj.n_frames) throw ShapeError("KtData: frame count differs from trajectory");
  for (const auto& f : frames) {
    if (f.rows() != traj.samples_per_frame()) throw ShapeError("KtData: sample count differs from trajectory");
    if (f.cols() != n_coils()) throw ShapeError("KtData: coil count differs between frames");
  }
}

CasoratiImage::CasoratiImage(CxMatrix x, Index r, Index c) : X(std::move(x)), rows(r), cols(c) {
  if (X.rows() != rows * cols) throw ShapeError("CasoratiImage: pixel count differs from grid");
}

CxMatrix CasoratiImage::frame(Index f) const {
  if (f < 0 || f >= n_frames()) throw ArgumentError("CasoratiImage: frame index out of range");
  return frame_image(X, f, rows, cols);
}

// ---------------------------------------------------------------------------

EncodingOperator::EncodingOperator(CoilMaps maps, const Trajectory& traj, Index slice, NufftOptions opts)
    : maps_(std::move(maps)) {
  maps_.validate();
  std::vector<Coords> coords;
  for (Index f = 0; f < traj.n_frames; ++f) coords.push_back(traj.frame_coords(f, slice));
  plans_.reserve(coords.size());
  for (const auto& k : coords) plans_.push_back(std::make_shared<NufftPlan>(rows(), cols(), k, opts));
  build_normals(coords, opts);
}

EncodingOperator::EncodingOperator(CoilMaps maps, const std::vector<Coords>& frame_coords, NufftOptions opts)
    : maps_(std::move(maps)) {
  maps_.validate();
  plans_.reserve(frame_coords.size());
  for (const auto& k : frame_coords) plans_.push_back(std::make_shared<NufftPlan>(rows(), cols(), k, opts));
  build_normals(frame_coords, opts);
}

void EncodingOperator::build_normals(const std::vector<Coords>& frame_coords, NufftOptions opts) {
  if (!opts.toeplitz) return;
  normals_.resize(frame_coords.size());
#pragma omp parallel for schedule(static)
  for (size_t f = 0; f < frame_coords.size(); ++f) {
    normals_[f] = std::make_shared<ToeplitzNormal>(rows(), cols(), frame_coords[f], opts);
  }
}

void EncodingOperator::check_frame(Index frame) const {
  if (frame < 0 || frame >= n_frames()) throw ArgumentError("EncodingOperator: frame index out of range");
}

Index EncodingOperator::samples(Index frame) const {
  check_frame(frame);
  return plans_[static_cast<size_t>(frame)]->n_samples();
}

const NufftPlan& EncodingOperator::plan(Index frame) const {
  check_frame(frame);
  return *plans_[static_cast<size_t>(frame)];
}

CxMatrix EncodingOperator::forward(const CxMatrix& img, Index frame) const {
  const NufftPlan& p = plan(frame);
  if (img.rows() != rows() || img.cols() != cols()) throw ShapeError("EncodingOperator::forward: image dims");
  CxMatrix out(p.n_samples(), coils());
  for (Index j = 0; j < coils(); ++j) {
    out.col(j) = p.forward(img.cwiseProduct(maps_.maps[static_cast<size_t>(j)]));
  }
  return out;
}

CxMatrix EncodingOperator::adjoint(const CxMatrix& ksp, Index frame) const {
  const NufftPlan& p = plan(frame);
  if (ksp.rows() != p.n_samples() || ksp.cols() != coils()) throw ShapeError("EncodingOperator::adjoint: data dims");
  CxMatrix img = CxMatrix::Zero(rows(), cols());
  for (Index j = 0; j < coils(); ++j) {
    img += maps_.maps[static_cast<size_t>(j)].conjugate().cwiseProduct(p.adjoint(ksp.col(j)));
  }
  return img;
}

CxMatrix EncodingOperator::normal(const CxMatrix& img, Index frame) const {
  const NufftPlan& p = plan(frame);
  if (img.rows() != rows() || img.cols() != cols()) throw ShapeError("EncodingOperator::normal: image dims");
  CxMatrix out = CxMatrix::Zero(rows(), cols());
  if (!normals_.empty()) {
    const ToeplitzNormal& t = *normals_[static_cast<size_t>(frame)];
    for (const auto& c : maps_.maps) out += c.conjugate().cwiseProduct(t.apply(img.cwiseProduct(c)));
    return out;
  }
  for (Index j = 0; j < coils(); ++j) {
    const auto& c = maps_.maps[static_cast<size_t>(j)];
    out += c.conjugate().cwiseProduct(p.adjoint(p.forward(img.cwiseProduct(c))));
  }
  return out;
}

std::vector<CxMatrix> EncodingOperator::forward_all(const CxMatrix& X) const {
  if (X.rows() != pixels() || X.cols() != n_frames()) throw ShapeError("forward_all: Casorati dims");
  std::vector<CxMatrix> out(static_cast<size_t>(n_frames()));
#pragma omp parallel for schedule(static)
  for (Index f = 0; f < n_frames(); ++f) {
    out[static_cast<size_t>(f)] = forward(frame_image(X, f, rows(), cols()), f);
  }
  return out;
}

CxMatrix EncodingOperator::adjoint_all(const std::vector<CxMatrix>& ksp) const {
  if (static_cast<Index>(ksp.size()) != n_frames()) throw ShapeError("adjoint_all: frame count");
  CxMatrix X(pixels(), n_frames());
#pragma omp parallel for schedule(static)
  for (Index f = 0; f < n_frames(); ++f) set_frame(X, f, adjoint(ksp[static_cast<size_t>(f)], f));
  return X;
}

CxMatrix EncodingOperator::normal_all(const CxMatrix& X) const {
  if (X.rows() != pixels() || X.cols() != n_frames()) throw ShapeError("normal_all: Casorati dims");
  CxMatrix out(pixels(), n_frames());
#pragma omp parallel for schedule(static)
  for (Index f = 0; f < n_frames(); ++f) set_frame(out, f, normal(frame_image(X, f, rows(), cols()), f));
  return out;
}

double EncodingOperator::residual_sq(const CxMatrix& X, const std::vector<CxMatrix>& b) const {
  const auto ax = forward_all(X);
  double acc = 0;
  for (size_t f = 0; f < ax.size(); ++f) acc += (ax[f] - b[f]).squaredNorm();
  return acc;
}

double EncodingOperator::norm_sq_estimate(int iterations) const {
  std::lock_guard lock(*cache_mutex_);
  if (const auto it = norm_cache_.find(iterations); it != norm_cache_.end()) return it->second;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> nd;
  CxMatrix x(pixels(), n_frames());
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = cx(nd(rng), nd(rng));
  x /= x.norm();
  double est = 0;
  for (int it = 0; it < iterations; ++it) {
    CxMatrix y = normal_all(x);
    est = y.norm();
    if (est == 0) break;
    x = y / est;
  }
  norm_cache_[iterations] = est;
  return est;
}

CxMatrix sense_forward(const CxMatrix& img, const EncodingOperator& op, Index frame) { return op.forward(img, frame); }

CxMatrix sense_adjoint(const CxMatrix& ksp, const EncodingOperator& op, Index frame) { return op.adjoint(ksp, frame); }

// ---------------------------------------------------------------------------

CoilMaps estimate_maps_rss(const std::vector<CxMatrix>& coil_images, double support_frac) {
  if (coil_images.empty()) throw ArgumentError("estimate_maps_rss: no coil images");
  const Index R = coil_images.front().rows(), C = coil_images.front().cols();
  ReMatrix ss = ReMatrix::Zero(R, C);
  for (const auto& img : coil_images) {
    if (img.rows() != R || img.cols() != C) throw ShapeError("estimate_maps_rss: coil dims differ");
    ss += img.cwiseAbs2();
  }
  const ReMatrix rss = ss.cwiseSqrt();
  const double peak = rss.maxCoeff();
  if (!(peak > 0)) throw DegenerateInputError("estimate_maps_rss: all-zero input");
  const double thresh = support_frac * peak;
  CoilMaps out;
  for (const auto& img : coil_images) {
    CxMatrix m = CxMatrix::Zero(R, C);
    for (Index c = 0; c < C; ++c) {
      for (Index r = 0; r < R; ++r) {
        if (rss(r, c) >= thresh && rss(r, c) > 0) m(r, c) = img(r, c) / rss(r, c);
      }
    }
    out.maps.push_back(std::move(m));
  }
  out.bound = 1.0;
  return out;
}

CxMatrix coil_combine_sense_r1(const std::vector<CxMatrix>& coil_images, const CoilMaps& maps) {
  if (static_cast<Index>(coil_images.size()) != maps.coils()) throw ShapeError("coil_combine_sense_r1: coil count");
  const Index R = maps.rows(), C = maps.cols();
  CxMatrix num = CxMatrix::Zero(R, C);
  for (Index j = 0; j < maps.coils(); ++j) {
    const auto& img = coil_images[static_cast<size_t>(j)];
    if (img.rows() != R || img.cols() != C) throw ShapeError("coil_combine_sense_r1: image dims");
    num += maps.maps[static_cast<size_t>(j)].conjugate().cwiseProduct(img);
  }
  const ReMatrix den = maps.sum_of_squares();
  CxMatrix out = CxMatrix::Zero(R, C);
  for (Index c = 0; c < C; ++c) {
    for (Index r = 0; r < R; ++r) {
      if (den(r, c) > 0) out(r, c) = num(r, c) / den(r, c);
    }
  }
  return out;
}

ReVector arm_set_weights(const Trajectory& traj, Index n_arms, Index samples_per_arm) {
  const ReVector dcf = traj.dcf.size() ? traj.dcf : density_compensation(traj.base_arm);
  const Index ns = samples_per_arm < 0 ? dcf.size() : samples_per_arm;
  const double res2 = traj.base_arm.resolution * traj.base_arm.resolution;
  const double scale = res2 * static_cast<double>(traj.base_arm.design_arms) / static_cast<double>(n_arms);
  ReVector w(n_arms * ns);
  for (Index a = 0; a < n_arms; ++a) w.segment(a * ns, ns) = dcf.head(ns) * scale;
  return w;
}

CxMatrix gridding_recon(const CxMatrix& ksp, const Coords& k, const ReVector& weights, const CoilMaps& maps,
                        NufftOptions opts, std::vector<CxMatrix>* coil_images) {
  if (ksp.rows() != k.rows() || weights.size() != k.rows()) throw ShapeError("gridding_recon: sample counts");
  if (ksp.cols() != maps.coils()) throw ShapeError("gridding_recon: coil count");
  NufftPlan plan(maps.rows(), maps.cols(), k, opts);
  const double M = static_cast<double>(maps.rows() * maps.cols());
  std::vector<CxMatrix> imgs;
  imgs.reserve(static_cast<size_t>(maps.coils()));
  for (Index j = 0; j < maps.coils(); ++j) {
    imgs.push_back(plan.adjoint(ksp.col(j).cwiseProduct(weights.cast<cx>())) * M);
  }
  CxMatrix out = coil_combine_sense_r1(imgs, maps);
  if (coil_images) *coil_images = std::move(imgs);
  return out;
}

CxMatrix gridding_arms(const KtData& data, Index first_arm, Index n_arms, const CoilMaps& maps) {
  data.validate();
  const Index apf = data.traj.arms_per_frame;
  const Index total = apf * data.n_frames();
  if (n_arms < 1 || first_arm < 0 || first_arm + n_arms > total) throw ArgumentError("gridding_arms: arm range");
  const Index ns = data.traj.base_arm.n_samples();
  Coords k(n_arms * ns, 2);
  CxMatrix y(n_arms * ns, data.n_coils());
  for (Index a = 0; a < n_arms; ++a) {
    const Index g = first_arm + a, f = g / apf, j = g % apf;
    k.middleRows(a * ns, ns) = data.traj.frame_coords(f, data.slice).middleRows(j * ns, ns);
    y.middleRows(a * ns, ns) = data.frames[static_cast<size_t>(f)].middleRows(j * ns, ns);
  }
  return gridding_recon(y, k, arm_set_weights(data.traj, n_arms), maps);
}

CxMatrix time_averaged_gridding(const KtData& data, const CoilMaps& maps) {
  return gridding_arms(data, 0, data.traj.arms_per_frame * data.n_frames(), maps);
}

double pooled_gridding_peak(const KtData& data, const CoilMaps& maps) {
  const double peak = time_averaged_gridding(data, maps).cwiseAbs().maxCoeff();
  if (!(peak > 0)) throw DegenerateInputError("pooled_gridding_peak: data are zero");
  return peak;
}

CoilMaps resample_maps(const CoilMaps& maps, Index rows, Index cols) {
  const Index R = maps.rows(), C = maps.cols();
  const double fr = static_cast<double>(R) / rows, fc = static_cast<double>(C) / cols;
  CoilMaps out;
  out.bound = maps.bound;
  for (const auto& m : maps.maps) {
    CxMatrix o(rows, cols);
    for (Index c = 0; c < cols; ++c) {
      const double sc = std::clamp(static_cast<double>(c - cols / 2) * fc + C / 2, 0.0, C - 1.0);
      const auto c0 = std::min(static_cast<Index>(sc), C - 2);
      const double tc = sc - c0;
      for (Index r = 0; r < rows; ++r) {
        const double sr = std::clamp(static_cast<double>(r - rows / 2) * fr + R / 2, 0.0, R - 1.0);
        const auto r0 = std::min(static_cast<Index>(sr), R - 2);
        const double tr = sr - r0;
        o(r, c) = (1 - tr) * ((1 - tc) * m(r0, c0) + tc * m(r0, c0 + 1)) +
                  tr * ((1 - tc) * m(r0 + 1, c0) + tc * m(r0 + 1, c0 + 1));
      }
    }
    out.maps.push_back(std::move(o));
  }
  return out;
}

CxMatrix frame_image(const CxMatrix& X, Index frame, Index rows, Index cols) {
  return X.col(frame).reshaped(rows, cols);
}

void set_frame(CxMatrix& X, Index frame, const CxMatrix& img) { X.col(frame) = img.reshaped(); }

} // namespace smr
