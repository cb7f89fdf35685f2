#pragma once

// Comparison reconstructions: sliding-window view sharing, nuclear-norm low
// rank, l1 temporal finite differences, and TFD on motion-sorted frames.

#include <vector>

#include "smr/encoding.hpp"
#include "smr/numerics.hpp"

namespace smr {

struct BaselineResult {
  CasoratiImage X;
  std::vector<double> objective;   // outer objective, one entry per iterate including the start
  std::vector<SolverTrace> inner;  // inner linear solves, when the method has any
  double data_scale = 1;           // data were divided by this before solving
};

struct BaselineParams {
  double lambda_lr = 0.3;   // nuclear-norm weight, relative to ||A^H A||
  double lambda_t = 0.003;  // temporal l1 weight, relative to ||A^H A||
  int lr_iters = 40;
  double lr_safety = 0.9;   // step = safety / (2 ||A^H A||)
  int power_iters = 10;
  int tfd_outer = 30;
  double tfd_tau = 0.05;    // shrinkage threshold; coupling rho = lambda ||A^H A|| / tfd_tau
  CgOptions tfd_cg{1e-4, 6};
  Index window_arms = 27;
  Index step_arms = -1;     // negative: arms per frame

  void validate() const;
};

/// Sliding-window gridding. Output frame f gathers window_arms consecutive arms
/// centred on arm time (f + 1/2) * step; windows that would leave the
/// acquisition are shifted inside it. One frame per step of arms.
CasoratiImage recon_view_share(const KtData& data, const CoilMaps& maps, Index window_arms = 27,
                               Index step_arms = -1);

/// Singular-value soft-thresholding of a Casorati matrix.
CxMatrix svt(const CxMatrix& X, double threshold);
/// Elementwise complex shrinkage: z * max(|z| - t, 0) / |z|.
CxMatrix soft_threshold(const CxMatrix& Z, double threshold);

/// Frame-to-frame differences (pixels x N-1) and their adjoint.
CxMatrix temporal_diff(const CxMatrix& X);
CxMatrix temporal_diff_adjoint(const CxMatrix& Z);

/// ||A(X) - b||^2 + lambda ||X||_* by monotone FISTA with singular-value
/// soft-thresholding, starting from the time-averaged gridding.
BaselineResult recon_low_rank(const KtData& data, const EncodingOperator& op, double lambda, const BaselineParams& p = {});

/// ||A(X) - b||^2 + lambda ||D_t X||_1 by penalty splitting:
///   min_{X,Z} ||A X - b||^2 + lambda ||Z||_1 + rho/2 ||D_t X - Z||^2,
/// alternating a warm-started Krylov solve in X with shrinkage in Z. Eliminating
/// Z leaves a Huber penalty on D_t X with transition tfd_tau, so rho grows with
/// lambda and the penalty keeps its shape as lambda varies.
BaselineResult recon_tfd(const KtData& data, const EncodingOperator& op, double lambda, const BaselineParams& p = {});

/// Ascending stable sort of the first right singular vector of the
/// mean-removed X_low. Sign fixed so the largest-magnitude entry is positive.
/// Entry i is the original index of sorted frame i.
std::vector<Index> xd_sort_order(const CxMatrix& X_low);
std::vector<Index> inverse_permutation(const std::vector<Index>& perm);

/// Frames (data and trajectory angles) reordered so that frame i of the result
/// is frame perm[i] of the input.
KtData permute_frames(const KtData& data, const std::vector<Index>& perm);

/// TFD on frames sorted by xd_sort_order(X_low), then returned to acquisition order.
BaselineResult recon_xd_sort(const KtData& data, const CoilMaps& maps, double lambda, const CasoratiImage& X_low,
                             const BaselineParams& p = {});

} // namespace smr
