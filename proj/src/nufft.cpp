#include "smr/nufft.hpp"

#include <cmath>

#include "smr/numerics.hpp"

namespace smr {

namespace {
constexpr double kPi = 3.14159265358979323846;

Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

// Continuous Fourier transform of the kernel at frequency nu (cycles/cell).
double kb_transform(double nu, int width, double beta) {
  const double a = kPi * width * nu;
  const double z2 = beta * beta - a * a;
  if (z2 > 0) {
    const double z = std::sqrt(z2);
    return width * std::sinh(z) / z;
  }
  if (z2 < 0) {
    const double z = std::sqrt(-z2);
    return width * std::sin(z) / z;
  }
  return width;
}

double kb_kernel(double u, int width, double beta) {
  const double t = 2.0 * u / width;
  const double v = 1.0 - t * t;
  if (v < 0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(v));
}

Index grid_size(Index n, double oversampling) {
  const auto g = static_cast<Index>(std::ceil(oversampling * static_cast<double>(n) / 2.0)) * 2;
  return std::max<Index>(g, 2);
}
} // namespace

double kaiser_bessel_beta(int width, double oversampling) {
  const double w = width, a = oversampling;
  return kPi * std::sqrt((w * w) / (a * a) * (a - 0.5) * (a - 0.5) - 0.8);
}

NufftPlan::NufftPlan(Index rows, Index cols, const Coords& k, NufftOptions opts)
    : rows_(rows), cols_(cols), grid_rows_(grid_size(rows, opts.oversampling)),
      grid_cols_(grid_size(cols, opts.oversampling)), n_(k.rows()), width_(opts.width) {
  if (rows < 2 || cols < 2) throw ShapeError("NufftPlan: grid must be at least 2x2");
  if (opts.width < 2 || !(opts.oversampling >= 1.0)) throw ArgumentError("NufftPlan: bad kernel options");
  const double beta = kaiser_bessel_beta(width_, opts.oversampling);

  apod_r_.resize(rows_);
  apod_c_.resize(cols_);
  for (Index r = 0; r < rows_; ++r) {
    apod_r_(r) = 1.0 / kb_transform(static_cast<double>(r - rows_ / 2) / grid_rows_, width_, beta);
  }
  for (Index c = 0; c < cols_; ++c) {
    apod_c_(c) = 1.0 / kb_transform(static_cast<double>(c - cols_ / 2) / grid_cols_, width_, beta);
  }

  const auto W = static_cast<size_t>(width_);
  idx_r_.resize(n_ * W);
  idx_c_.resize(n_ * W);
  w_r_.resize(n_ * W);
  w_c_.resize(n_ * W);
  constexpr double kTol = 1e-9;
  for (Index s = 0; s < n_; ++s) {
    const double kr = k(s, 0), kc = k(s, 1);
    if (!(std::abs(kr) <= 0.5 + kTol && std::abs(kc) <= 0.5 + kTol)) {
      throw ArgumentError("NufftPlan: sample coordinate outside [-0.5, 0.5] cycles/pixel");
    }
    const double gr = kr * grid_rows_, gc = kc * grid_cols_;
    const auto r0 = static_cast<Index>(std::floor(gr - 0.5 * width_)) + 1;
    const auto c0 = static_cast<Index>(std::floor(gc - 0.5 * width_)) + 1;
    for (size_t j = 0; j < W; ++j) {
      const Index mr = r0 + static_cast<Index>(j), mc = c0 + static_cast<Index>(j);
      idx_r_[s * W + j] = wrap(mr, grid_rows_);
      idx_c_[s * W + j] = wrap(mc, grid_cols_);
      w_r_[s * W + j] = kb_kernel(gr - static_cast<double>(mr), width_, beta);
      w_c_[s * W + j] = kb_kernel(gc - static_cast<double>(mc), width_, beta);
    }
  }
}

CxVector NufftPlan::forward(const CxMatrix& img) const {
  if (img.rows() != rows_ || img.cols() != cols_) throw ShapeError("NufftPlan::forward: image size mismatch");
  CxMatrix grid = CxMatrix::Zero(grid_rows_, grid_cols_);
  for (Index c = 0; c < cols_; ++c) {
    const Index gc = wrap(c - cols_ / 2, grid_cols_);
    for (Index r = 0; r < rows_; ++r) {
      grid(wrap(r - rows_ / 2, grid_rows_), gc) = img(r, c) * (apod_r_(r) * apod_c_(c));
    }
  }
  fft2_inplace(grid, false);

  const double scale = 1.0 / std::sqrt(static_cast<double>(rows_ * cols_));
  const auto W = static_cast<size_t>(width_);
  CxVector out(n_);
  for (Index s = 0; s < n_; ++s) {
    const Index* ir = &idx_r_[s * W];
    const Index* ic = &idx_c_[s * W];
    const double* wr = &w_r_[s * W];
    const double* wc = &w_c_[s * W];
    cx acc = 0;
    for (size_t b = 0; b < W; ++b) {
      const cx* col = grid.data() + ic[b] * grid_rows_;
      cx line = 0;
      for (size_t a = 0; a < W; ++a) line += wr[a] * col[ir[a]];
      acc += wc[b] * line;
    }
    out(s) = acc * scale;
  }
  return out;
}

CxMatrix NufftPlan::adjoint(const CxVector& samples) const {
  if (samples.size() != n_) throw ShapeError("NufftPlan::adjoint: sample count mismatch");
  CxMatrix grid = CxMatrix::Zero(grid_rows_, grid_cols_);
  const auto W = static_cast<size_t>(width_);
  for (Index s = 0; s < n_; ++s) {
    const Index* ir = &idx_r_[s * W];
    const Index* ic = &idx_c_[s * W];
    const double* wr = &w_r_[s * W];
    const double* wc = &w_c_[s * W];
    const cx v = samples(s);
    for (size_t b = 0; b < W; ++b) {
      cx* col = grid.data() + ic[b] * grid_rows_;
      const cx vb = wc[b] * v;
      for (size_t a = 0; a < W; ++a) col[ir[a]] += wr[a] * vb;
    }
  }
  fft2_inplace(grid, true);

  const double scale = 1.0 / std::sqrt(static_cast<double>(rows_ * cols_));
  CxMatrix img(rows_, cols_);
  for (Index c = 0; c < cols_; ++c) {
    const Index gc = wrap(c - cols_ / 2, grid_cols_);
    for (Index r = 0; r < rows_; ++r) {
      img(r, c) = grid(wrap(r - rows_ / 2, grid_rows_), gc) * (apod_r_(r) * apod_c_(c) * scale);
    }
  }
  return img;
}

ToeplitzNormal::ToeplitzNormal(Index rows, Index cols, const Coords& k, NufftOptions opts)
    : rows_(rows), cols_(cols) {
  const Index R2 = 2 * rows, C2 = 2 * cols;
  // h(d) = (1/M) sum_s exp(+2 pi i k_s.d), read off an adjoint on the doubled grid
  // whose origin sits at (rows, cols).
  const CxMatrix h = NufftPlan(R2, C2, k, opts).adjoint(CxVector::Ones(k.rows())) *
                     (2.0 / std::sqrt(static_cast<double>(rows * cols)));
  CxMatrix kernel(R2, C2);
  for (Index c = 0; c < C2; ++c) {
    for (Index r = 0; r < R2; ++r) kernel(wrap(r - rows, R2), wrap(c - cols, C2)) = h(r, c);
  }
  fft2_inplace(kernel, false);
  spectrum_ = kernel / static_cast<double>(R2 * C2);
}

CxMatrix ToeplitzNormal::apply(const CxMatrix& img) const {
  if (img.rows() != rows_ || img.cols() != cols_) throw ShapeError("ToeplitzNormal::apply: image size mismatch");
  const Index R2 = 2 * rows_, C2 = 2 * cols_;
  CxMatrix buf = CxMatrix::Zero(R2, C2);
  buf.topLeftCorner(rows_, cols_) = img;
  // Columns beyond cols_ are zero, so the first pass only touches the occupied ones.
  fft_many_inplace(buf.data(), R2, cols_, 1, R2, false);
  fft_many_inplace(buf.data(), C2, R2, R2, 1, false);
  buf.array() *= spectrum_.array();
  fft_many_inplace(buf.data(), C2, R2, R2, 1, true);
  fft_many_inplace(buf.data(), R2, cols_, 1, R2, true);
  return buf.topLeftCorner(rows_, cols_);
}

CxVector nufft_forward(const CxMatrix& img, const Coords& k, NufftOptions opts) {
  return NufftPlan(img.rows(), img.cols(), k, opts).forward(img);
}

CxMatrix nufft_adjoint(const CxVector& samples, const Coords& k, Index rows, Index cols, const ReVector* weights,
                       NufftOptions opts) {
  NufftPlan plan(rows, cols, k, opts);
  if (weights) {
    if (weights->size() != samples.size()) throw ShapeError("nufft_adjoint: weight count mismatch");
    return plan.adjoint(samples.cwiseProduct(weights->cast<cx>()));
  }
  return plan.adjoint(samples);
}

CxVector dft_forward(const CxMatrix& img, const Coords& k) {
  const Index R = img.rows(), C = img.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(R * C));
  CxVector out(k.rows());
  for (Index s = 0; s < k.rows(); ++s) {
    cx acc = 0;
    for (Index c = 0; c < C; ++c) {
      for (Index r = 0; r < R; ++r) {
        const double phase = -2.0 * kPi * (k(s, 0) * static_cast<double>(r - R / 2) + k(s, 1) * static_cast<double>(c - C / 2));
        acc += img(r, c) * std::polar(1.0, phase);
      }
    }
    out(s) = acc * scale;
  }
  return out;
}

} // namespace smr
