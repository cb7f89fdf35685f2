#pragma once

// Self-navigated manifold reconstruction: frame-similarity graph from the
// k-space center, its Laplacian eigenbasis, and a low-dimensional spatial solve.

#include <string>
#include <vector>

#include "smr/encoding.hpp"
#include "smr/numerics.hpp"
#include "smr/types.hpp"

namespace smr {

/// Leading samples of every readout, re-expressed on a coarse navigator grid.
struct NavigatorData {
  std::vector<CxMatrix> frames; // (arms * samples_per_arm) x coils
  std::vector<Coords> coords;   // cycles/pixel of the navigator grid
  ReVector weights;             // density weights for one frame, navigator cycles/pixel^2
  Index samples_per_arm = 0;
  Index full_samples_per_arm = 0;
  double q = 100;
  Index rows = 0, cols = 0;

  [[nodiscard]] Index n_frames() const { return static_cast<Index>(frames.size()); }
};

/// Number of leading samples kept per readout: round-half-up of q/100 * n.
Index navigator_samples(double q, Index n_samples);

/// Keeps the first navigator_samples(q, n) samples of every arm of data that
/// was acquired for a full_rows x full_cols grid, and re-expresses them on a
/// nav_rows x nav_cols grid covering the same FOV. Throws ArgumentError when
/// the navigator grid cannot hold the retained k-space extent.
NavigatorData extract_navigator(const KtData& data, double q, Index full_rows, Index full_cols, Index nav_rows,
                                Index nav_cols);

enum class DistanceScale {
  all_pairs_median,        // d^2 / median over i < j
  nearest_neighbour_median // d^2 / max(median_i min_j d^2, floor * mean ||x_i||^2)
};

struct KernelOptions {
  double delta2 = 4.5;
  DistanceScale scale = DistanceScale::nearest_neighbour_median;
  double floor = 1e-3; // relative energy floor for the nearest-neighbour scale
};

/// Squared Euclidean distances between Casorati columns.
ReMatrix pairwise_sq_distances(const CxMatrix& X);
/// Scale that divides d^2 before the Gaussian kernel.
double distance_scale(const ReMatrix& d2, const CxMatrix& X, const KernelOptions& opts);
/// w_ij = exp(-d2_ij / (scale * delta2)), zero diagonal.
ReMatrix gaussian_weights(const CxMatrix& X, const KernelOptions& opts = {});

/// L = D - W. Throws ArgumentError for asymmetric or negative W.
ReMatrix build_laplacian(const ReMatrix& W);

/// trace(X L X^H), real for symmetric L.
double laplacian_energy(const CxMatrix& X, const ReMatrix& L);
/// 0.5 sum_ij w_ij ||x_i - x_j||^2.
double pairwise_energy(const CxMatrix& X, const ReMatrix& W);

struct LaplacianModel {
  ReMatrix W, L;
  ReVector eigvals; // all N, ascending
  ReMatrix eigvecs; // N x r
  KernelOptions kernel;
  double q = 18;
  double scale = 0; // distance scale of the final iteration
  int iterations = 0;
  std::vector<SolverTrace> traces; // one joint navigator solve per outer iteration
};

/// Throws NumericalError unless W is symmetric with entries in [0, 1] and zero
/// diagonal, L rows sum to zero and the smallest eigenvalue of L is >= -1e-8.
void check_laplacian(const ReMatrix& W, const ReMatrix& L);

struct NavigatorSolve {
  double lambda = 0.2;
  bool lambda_relative = false; // scale lambda by ||A^H A|| / N of the navigator operator
  int outer_iters = 5;
  CgOptions cg{1e-4, 30};
  KernelOptions kernel;
};

/// Alternates W, L and a joint regularized least-squares solve for the
/// navigator images, starting from their density-weighted gridding.
LaplacianModel estimate_laplacian(const NavigatorData& nav, const CoilMaps& nav_maps, const NavigatorSolve& opts,
                                  CxMatrix* x_low = nullptr);

struct EigenBasis {
  ReMatrix V;     // N x r
  ReVector sigma; // r ascending
};

/// The r eigenvectors of L with the smallest eigenvalues.
EigenBasis solve_basis(const ReMatrix& L, Index r);

/// Minimizes ||A(U V^T) - b||^2 + lambda sum_i sigma_i ||u_i||^2 over U (pixels x r).
CxMatrix solve_spatial_coeffs(const std::vector<CxMatrix>& b, const EncodingOperator& op, const EigenBasis& basis,
                              double lambda, const CgOptions& cg = {1e-5, 60}, SolverTrace* trace = nullptr,
                              const CxMatrix* u0 = nullptr);

struct ManifoldParams {
  double q = 18;
  double delta2 = 4.5;
  double lambda = 0.2;
  double lambda_nav = -1; // negative: reuse lambda
  Index r = 30;
  int outer_iters = 5;
  Index nav_rows = 32, nav_cols = 32;
  DistanceScale scale = DistanceScale::nearest_neighbour_median;
  double scale_floor = 1e-3;
  CgOptions nav_cg{1e-4, 30};
  CgOptions cg{1e-5, 60};

  void validate(Index n_frames) const;
  /// key=value lines for the run log.
  [[nodiscard]] std::string describe() const;
};

struct ManifoldResult {
  CasoratiImage X;
  CasoratiImage X_low; // navigator-grid images from the final joint solve
  LaplacianModel model;
  SolverTrace coeff_trace;
  double data_scale = 1; // data were divided by this before solving
};

struct NavigatorStage {
  LaplacianModel model;
  CasoratiImage X_low;   // navigator-grid images, in data units
  double data_scale = 1; // data were divided by this before solving
};

/// Data scaling, navigator extraction and estimate_laplacian with the
/// parameters of a full manifold reconstruction.
NavigatorStage run_navigator(const KtData& data, const CoilMaps& maps, const ManifoldParams& params);

/// Navigator Laplacian, eigenbasis, spatial coefficients and X = U V^T.
/// Data are divided by the pooled gridding peak and lambda is scaled by
/// ||A^H A|| / N, so it weighs the mean per-frame neighbour penalty against a
/// data term of unit curvature.
ManifoldResult reconstruct_manifold(const KtData& data, const CoilMaps& maps, const ManifoldParams& params);

} // namespace smr
