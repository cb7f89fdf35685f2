#pragma once

// Evaluation of reconstructions: ROI error, ROI time courses, Laplacian row
// reports and space-time profiles.

#include <string>
#include <utility>
#include <vector>

#include "smr/encoding.hpp"

namespace smr {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct RoiMask {
  BoolGrid mask;
  std::string label;

  [[nodiscard]] Index rows() const { return mask.rows(); }
  [[nodiscard]] Index cols() const { return mask.cols(); }
  [[nodiscard]] Index count() const { return mask.count(); }
  /// Throws ArgumentError for an empty mask, ShapeError for other dims.
  void validate(Index rows, Index cols) const;
};

/// Pixels whose temporal standard deviation of |truth| exceeds frac times its
/// maximum, dilated by `dilate` pixels (square neighbourhood).
RoiMask moving_edge_mask(const CasoratiImage& truth, double frac = 0.2, int dilate = 1);

/// Mean over masked pixels and frames of |X - X_ref|^2 after scaling each
/// series to unit mean magnitude over the mask.
double mse_roi(const CasoratiImage& X, const CasoratiImage& X_ref, const RoiMask& mask);

/// Per-frame mean of |X| over the mask.
ReVector roi_time_profile(const CasoratiImage& X, const RoiMask& mask);

struct RowEntry {
  Index index;
  double value;
};

/// Off-diagonal entries of row `row` whose magnitude exceeds threshold_frac
/// times the largest off-diagonal magnitude of that row, in index order.
std::vector<RowEntry> laplacian_row_report(const ReMatrix& L, Index row, double threshold_frac = 0.10);
std::string row_report_csv(const std::vector<RowEntry>& entries);

/// Fraction of rows of L whose thresholded entries lie within +-tol frames of
/// a same-phase index (index = row mod period) for at least `share` of them.
double phase_alignment(const ReMatrix& L, Index period, Index tol = 2, double share = 0.8,
                       double threshold_frac = 0.10);

enum class LineOrientation { row, col };

/// |X| along one image row or column for every frame: (line length) x N.
ReMatrix temporal_profile(const CasoratiImage& X, Index line, LineOrientation orient = LineOrientation::row);

/// Binary PGM (P5) with min-max windowing; the window is returned for the sidecar.
struct PgmImage {
  std::string bytes;
  double lo = 0, hi = 0;
};
PgmImage encode_pgm(const ReMatrix& img);

/// One header line, comma separated.
std::string series_csv(const std::vector<std::string>& header, const std::vector<ReVector>& columns);

} // namespace smr
