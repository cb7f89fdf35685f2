#pragma once

#include <vector>

#include "smr/types.hpp"

namespace smr {

struct NufftOptions {
  double oversampling = 2.0;
  int width = 6; // kernel support in oversampled grid cells
  bool toeplitz = true; // EncodingOperator::normal via ToeplitzNormal instead of adjoint(forward)
};

/// Kaiser-Bessel shape parameter for a given width and oversampling.
double kaiser_bessel_beta(int width, double oversampling);

/// Gridding plan for one set of non-Cartesian sample locations.
///
/// Coordinates are in cycles/pixel (|k| <= 0.5 per axis) and the image origin
/// is pixel (rows/2, cols/2). The forward transform approximates the unitary
/// DFT sum (1/sqrt(M)) sum_p x(p) exp(-2 pi i k.p); `adjoint` is its exact
/// adjoint.
class NufftPlan {
public:
  NufftPlan(Index rows, Index cols, const Coords& k, NufftOptions opts = {});

  [[nodiscard]] CxVector forward(const CxMatrix& img) const;
  [[nodiscard]] CxMatrix adjoint(const CxVector& samples) const;

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] Index cols() const { return cols_; }
  [[nodiscard]] Index n_samples() const { return n_; }

private:
  Index rows_, cols_, grid_rows_, grid_cols_, n_;
  int width_;
  ReVector apod_r_, apod_c_;
  std::vector<Index> idx_r_, idx_c_; // width entries per sample, already wrapped
  std::vector<double> w_r_, w_c_;
};

/// Exact normal operator A^H A of the unitary non-uniform DFT on a rows x cols
/// grid, applied as a circulant convolution on a 2x zero-padded grid. The kernel
/// is sampled once with a gridding adjoint, so the result agrees with
/// plan.adjoint(plan.forward(x)) to the gridding accuracy.
class ToeplitzNormal {
public:
  ToeplitzNormal(Index rows, Index cols, const Coords& k, NufftOptions opts = {});

  [[nodiscard]] CxMatrix apply(const CxMatrix& img) const;

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] Index cols() const { return cols_; }

private:
  Index rows_, cols_;
  CxMatrix spectrum_; // 2rows x 2cols, already divided by the FFT size
};

CxVector nufft_forward(const CxMatrix& img, const Coords& k, NufftOptions opts = {});
/// With `weights` (one per sample) the samples are scaled before the adjoint.
CxMatrix nufft_adjoint(const CxVector& samples, const Coords& k, Index rows, Index cols,
                       const ReVector* weights = nullptr, NufftOptions opts = {});

/// Brute-force DFT sum at the given coordinates; reference for tests and tiny problems.
CxVector dft_forward(const CxMatrix& img, const Coords& k);

} // namespace smr
