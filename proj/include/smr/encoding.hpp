#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "smr/nufft.hpp"
#include "smr/trajectory.hpp"
#include "smr/types.hpp"

namespace smr {

struct CoilMaps {
  std::vector<CxMatrix> maps; // one rows x cols sensitivity per coil
  double bound = 1.0;         // declared upper bound on |c|

  [[nodiscard]] Index coils() const { return static_cast<Index>(maps.size()); }
  [[nodiscard]] Index rows() const { return maps.empty() ? 0 : maps.front().rows(); }
  [[nodiscard]] Index cols() const { return maps.empty() ? 0 : maps.front().cols(); }
  /// sum_j |c_j|^2 per pixel.
  [[nodiscard]] ReMatrix sum_of_squares() const;
  /// Throws ShapeError / ArgumentError on inconsistent dims or non-finite values.
  void validate() const;
};

/// Multi-coil, per-frame non-Cartesian samples. Each frame is a
/// (samples_per_frame x coils) matrix, samples ordered arm-major.
struct KtData {
  std::vector<CxMatrix> frames;
  Trajectory traj;
  Index slice = 0;

  [[nodiscard]] Index n_frames() const { return static_cast<Index>(frames.size()); }
  [[nodiscard]] Index n_coils() const { return frames.empty() ? 0 : frames.front().cols(); }
  void validate() const;
};

/// Dynamic image series as a pixels x frames matrix; column f is frame f with
/// column-major pixel order.
struct CasoratiImage {
  CxMatrix X;
  Index rows = 0;
  Index cols = 0;

  CasoratiImage() = default;
  CasoratiImage(CxMatrix x, Index r, Index c);

  [[nodiscard]] Index n_frames() const { return X.cols(); }
  [[nodiscard]] Index pixels() const { return rows * cols; }
  [[nodiscard]] CxMatrix frame(Index f) const;
};

/// SENSE encoding: per-frame coil modulation followed by gridding NUFFT on that
/// frame's sample set. Immutable after construction; frames are independent.
class EncodingOperator {
public:
  /// Uses every frame of `traj` on the grid of `maps`.
  EncodingOperator(CoilMaps maps, const Trajectory& traj, Index slice = 0, NufftOptions opts = {});
  /// Explicit per-frame coordinates in cycles/pixel of the maps grid.
  EncodingOperator(CoilMaps maps, const std::vector<Coords>& frame_coords, NufftOptions opts = {});

  [[nodiscard]] Index n_frames() const { return static_cast<Index>(plans_.size()); }
  [[nodiscard]] Index rows() const { return maps_.rows(); }
  [[nodiscard]] Index cols() const { return maps_.cols(); }
  [[nodiscard]] Index pixels() const { return rows() * cols(); }
  [[nodiscard]] Index coils() const { return maps_.coils(); }
  [[nodiscard]] Index samples(Index frame) const;
  [[nodiscard]] const CoilMaps& maps() const { return maps_; }
  [[nodiscard]] const NufftPlan& plan(Index frame) const;

  /// rows x cols image -> samples x coils.
  [[nodiscard]] CxMatrix forward(const CxMatrix& img, Index frame) const;
  /// samples x coils -> rows x cols image.
  [[nodiscard]] CxMatrix adjoint(const CxMatrix& ksp, Index frame) const;
  [[nodiscard]] CxMatrix normal(const CxMatrix& img, Index frame) const;

  // Casorati-level helpers; X is pixels x frames with column-major pixel order.
  [[nodiscard]] std::vector<CxMatrix> forward_all(const CxMatrix& X) const;
  [[nodiscard]] CxMatrix adjoint_all(const std::vector<CxMatrix>& ksp) const;
  [[nodiscard]] CxMatrix normal_all(const CxMatrix& X) const;
  /// ||A(X) - b||^2
  [[nodiscard]] double residual_sq(const CxMatrix& X, const std::vector<CxMatrix>& b) const;
  /// Largest eigenvalue of A^H A estimated by power iteration from a fixed
  /// seed. Cached per iteration count.
  [[nodiscard]] double norm_sq_estimate(int iterations = 10) const;

private:
  CoilMaps maps_;
  std::vector<std::shared_ptr<const NufftPlan>> plans_;
  std::vector<std::shared_ptr<const ToeplitzNormal>> normals_; // empty when disabled
  mutable std::shared_ptr<std::mutex> cache_mutex_ = std::make_shared<std::mutex>();
  mutable std::map<int, double> norm_cache_;
  void check_frame(Index frame) const;
  void build_normals(const std::vector<Coords>& frame_coords, NufftOptions opts);
};

CxMatrix sense_forward(const CxMatrix& img, const EncodingOperator& op, Index frame);
CxMatrix sense_adjoint(const CxMatrix& ksp, const EncodingOperator& op, Index frame);

/// Coil maps from time-averaged coil images: c_j = img_j / RSS inside the
/// support (RSS >= support_frac * max RSS), zero outside.
CoilMaps estimate_maps_rss(const std::vector<CxMatrix>& coil_images, double support_frac = 0.05);

/// Per-pixel least-squares coil combination sum_j conj(c_j) img_j / sum_j |c_j|^2.
CxMatrix coil_combine_sense_r1(const std::vector<CxMatrix>& coil_images, const CoilMaps& maps);

/// Density weights for a set of `n_arms` arms of `traj`, in cycles/pixel units,
/// scaled so the set sums to the disc area regardless of how many arms it holds.
ReVector arm_set_weights(const Trajectory& traj, Index n_arms, Index samples_per_arm = -1);

/// DCF-weighted gridding of one sample set: per-coil M * adjoint(w .* y), then
/// SENSE R=1 combination. Returns the coil images too when requested.
CxMatrix gridding_recon(const CxMatrix& ksp, const Coords& k, const ReVector& weights, const CoilMaps& maps,
                        NufftOptions opts = {}, std::vector<CxMatrix>* coil_images = nullptr);

/// Gridding of `n_arms` consecutive arms of `data` starting at global arm index
/// `first_arm` (frame * arms_per_frame + arm), pooled into one image.
CxMatrix gridding_arms(const KtData& data, Index first_arm, Index n_arms, const CoilMaps& maps);

/// Gridding of every arm of every frame pooled together.
CxMatrix time_averaged_gridding(const KtData& data, const CoilMaps& maps);

/// Data scale used by every iterative reconstruction: the peak magnitude of
/// time_averaged_gridding. Throws DegenerateInputError for all-zero data.
double pooled_gridding_peak(const KtData& data, const CoilMaps& maps);

/// Bilinear resampling of coil maps onto a coarser/finer grid covering the same FOV.
CoilMaps resample_maps(const CoilMaps& maps, Index rows, Index cols);

/// Casorati helpers.
CxMatrix frame_image(const CxMatrix& X, Index frame, Index rows, Index cols);
void set_frame(CxMatrix& X, Index frame, const CxMatrix& img);

} // namespace smr
