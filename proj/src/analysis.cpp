#include "smr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smr {

namespace {

void check_pair(const CasoratiImage& a, const CasoratiImage& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.n_frames() != b.n_frames()) {
    throw ShapeError("analysis: image series dims differ");
  }
}

std::vector<Index> mask_pixels(const RoiMask& m) {
  std::vector<Index> px;
  for (Index i = 0; i < m.mask.size(); ++i) {
    if (m.mask(i)) px.push_back(i);
  }
  return px;
}

double mean_magnitude(const CxMatrix& X, const std::vector<Index>& px) {
  double s = 0;
  for (Index f = 0; f < X.cols(); ++f) {
    for (Index p : px) s += std::abs(X(p, f));
  }
  return s / static_cast<double>(px.size() * static_cast<size_t>(X.cols()));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << v;
  return os.str();
}

} // namespace

void RoiMask::validate(Index r, Index c) const {
  if (mask.rows() != r || mask.cols() != c) throw ShapeError("RoiMask: dims differ from the image grid");
  if (count() == 0) throw ArgumentError("RoiMask: mask is empty");
}

RoiMask moving_edge_mask(const CasoratiImage& truth, double frac, int dilate) {
  if (!(frac >= 0 && frac < 1)) throw ArgumentError("moving_edge_mask: frac must lie in [0, 1)");
  if (dilate < 0) throw ArgumentError("moving_edge_mask: dilate must be >= 0");
  if (truth.n_frames() < 2) throw ArgumentError("moving_edge_mask: need at least two frames");
  const ReMatrix mag = truth.X.cwiseAbs();
  const ReVector mean = mag.rowwise().mean();
  const ReVector sd = ((mag.colwise() - mean).array().square().rowwise().mean()).sqrt();
  const double peak = sd.maxCoeff();
  // Round-off in the mean leaves a tiny spread on a static series.
  if (!(peak > 1e-12 * mag.maxCoeff())) throw DegenerateInputError("moving_edge_mask: ground truth does not move");
  BoolGrid core(truth.rows, truth.cols);
  for (Index i = 0; i < core.size(); ++i) core(i) = sd(i) > frac * peak;
  RoiMask out{BoolGrid::Constant(truth.rows, truth.cols, false), "moving_edges"};
  for (Index c = 0; c < truth.cols; ++c) {
    for (Index r = 0; r < truth.rows; ++r) {
      if (!core(r, c)) continue;
      for (Index dc = -dilate; dc <= dilate; ++dc) {
        for (Index dr = -dilate; dr <= dilate; ++dr) {
          const Index rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < truth.rows && cc >= 0 && cc < truth.cols) out.mask(rr, cc) = true;
        }
      }
    }
  }
  return out;
}

double mse_roi(const CasoratiImage& X, const CasoratiImage& X_ref, const RoiMask& mask) {
  check_pair(X, X_ref);
  mask.validate(X.rows, X.cols);
  const auto px = mask_pixels(mask);
  const double sx = mean_magnitude(X.X, px), sr = mean_magnitude(X_ref.X, px);
  if (!(sx > 0) || !(sr > 0)) throw DegenerateInputError("mse_roi: zero signal inside the mask");
  double s = 0;
  for (Index f = 0; f < X.n_frames(); ++f) {
    for (Index p : px) s += std::norm(X.X(p, f) / sx - X_ref.X(p, f) / sr);
  }
  return s / static_cast<double>(px.size() * static_cast<size_t>(X.n_frames()));
}

ReVector roi_time_profile(const CasoratiImage& X, const RoiMask& mask) {
  mask.validate(X.rows, X.cols);
  const auto px = mask_pixels(mask);
  ReVector out(X.n_frames());
  for (Index f = 0; f < X.n_frames(); ++f) {
    double s = 0;
    for (Index p : px) s += std::abs(X.X(p, f));
    out(f) = s / static_cast<double>(px.size());
  }
  return out;
}

std::vector<RowEntry> laplacian_row_report(const ReMatrix& L, Index row, double threshold_frac) {
  if (L.rows() != L.cols()) throw ShapeError("laplacian_row_report: L must be square");
  if (row < 0 || row >= L.rows()) throw ArgumentError("laplacian_row_report: row out of range");
  if (!(threshold_frac >= 0)) throw ArgumentError("laplacian_row_report: threshold must be >= 0");
  double mx = 0;
  for (Index j = 0; j < L.cols(); ++j) {
    if (j != row) mx = std::max(mx, std::abs(L(row, j)));
  }
  std::vector<RowEntry> out;
  for (Index j = 0; j < L.cols(); ++j) {
    if (j == row) continue;
    const double a = std::abs(L(row, j));
    // A threshold of one keeps the maximal entries themselves.
    const bool keep = threshold_frac == 0 || (threshold_frac >= 1.0 ? a >= mx * threshold_frac : a > threshold_frac * mx);
    if (keep && (a > 0 || threshold_frac == 0)) out.push_back({j, L(row, j)});
  }
  return out;
}

std::string row_report_csv(const std::vector<RowEntry>& entries) {
  std::string s = "index,value\n";
  for (const auto& e : entries) s += std::to_string(e.index) + "," + fmt(e.value) + "\n";
  return s;
}

double phase_alignment(const ReMatrix& L, Index period, Index tol, double share, double threshold_frac) {
  if (period < 1) throw ArgumentError("phase_alignment: period must be >= 1");
  const Index N = L.rows();
  Index good = 0;
  for (Index i = 0; i < N; ++i) {
    const auto hits = laplacian_row_report(L, i, threshold_frac);
    if (hits.empty()) continue;
    Index ok = 0;
    for (const auto& h : hits) {
      const Index d = ((h.index - i) % period + period) % period;
      if (d <= tol || d >= period - tol) ++ok;
    }
    if (static_cast<double>(ok) >= share * static_cast<double>(hits.size())) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(N);
}

ReMatrix temporal_profile(const CasoratiImage& X, Index line, LineOrientation orient) {
  const Index len = orient == LineOrientation::row ? X.cols : X.rows;
  const Index lim = orient == LineOrientation::row ? X.rows : X.cols;
  if (line < 0 || line >= lim) throw ArgumentError("temporal_profile: line out of range");
  ReMatrix out(len, X.n_frames());
  for (Index f = 0; f < X.n_frames(); ++f) {
    for (Index s = 0; s < len; ++s) {
      const Index px = orient == LineOrientation::row ? line + X.rows * s : s + X.rows * line;
      out(s, f) = std::abs(X.X(px, f));
    }
  }
  return out;
}

PgmImage encode_pgm(const ReMatrix& img) {
  if (img.size() == 0) throw ShapeError("encode_pgm: empty image");
  if (!img.allFinite()) throw ArgumentError("encode_pgm: non-finite values");
  PgmImage out;
  out.lo = img.minCoeff();
  out.hi = img.maxCoeff();
  const double span = out.hi > out.lo ? out.hi - out.lo : 1.0;
  // Rows of the PGM are image rows; the file is written row by row.
  out.bytes = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  out.bytes.reserve(out.bytes.size() + static_cast<size_t>(img.size()));
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      const double v = std::round(255.0 * (img(r, c) - out.lo) / span);
      out.bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
    }
  }
  return out;
}

std::string series_csv(const std::vector<std::string>& header, const std::vector<ReVector>& columns) {
  if (header.size() != columns.size() || columns.empty()) throw ShapeError("series_csv: header and column counts");
  const Index n = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) throw ShapeError("series_csv: columns differ in length");
  }
  std::string s;
  for (size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += "\n";
  for (Index r = 0; r < n; ++r) {
    for (size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + fmt(columns[i](r));
    s += "\n";
  }
  return s;
}

} // namespace smr
