#pragma once

// Dense numerical kernels shared by every reconstruction path: centered FFTs,
// a residual-monotone Krylov solver, Hermitian eigendecomposition, thin SVD
// and PCA coil compression.

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smr/types.hpp"

namespace smr {

/// N-dimensional complex storage, first-listed dimension varies fastest.
struct ComplexArray {
  std::vector<Index> shape;
  CxVector data;

  ComplexArray() = default;
  explicit ComplexArray(std::vector<Index> dims);
  ComplexArray(std::vector<Index> dims, CxVector values);

  static ComplexArray from_matrix(const CxMatrix& m);

  [[nodiscard]] Index size() const { return data.size(); }
  [[nodiscard]] Index rank() const { return static_cast<Index>(shape.size()); }

  /// View of a rank-2 array (or any array reinterpreted as rows x cols).
  [[nodiscard]] Eigen::Map<const CxMatrix> matrix(Index rows, Index cols) const;
  [[nodiscard]] Eigen::Map<CxMatrix> matrix(Index rows, Index cols);
  [[nodiscard]] CxMatrix to_matrix() const;

  [[nodiscard]] bool all_finite() const { return data.allFinite(); }
};

Index shape_product(const std::vector<Index>& shape);

template <class Vec>
struct LinearOperator {
  std::function<Vec(const Vec&)> apply;
  std::vector<Index> domain_shape;
  std::vector<Index> range_shape;

  Vec operator()(const Vec& x) const { return apply(x); }
};

template <class A, class B>
auto inner(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a.derived().array().conjugate() * b.derived().array()).sum();
}

/// Record of a Krylov solve. `residuals[k]` is the relative residual after
/// k iterations (entry 0 is the starting point). `objective[k]` is the value of
/// the quadratic 0.5<x,Ax> - Re<b,x> at the same iterate.
struct SolverTrace {
  std::vector<double> residuals;
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-6;
  int max_iter = 100;
};

namespace detail {
template <class Vec>
bool finite(const Vec& v) {
  return v.allFinite();
}

[[noreturn]] void throw_divergence(const SolverTrace& trace, int iter);
} // namespace detail

/// Solves op(x) = rhs for a Hermitian positive-semidefinite operator.
///
/// Uses the conjugate-residual recurrence, which minimizes the residual norm
/// over the same Krylov space as classic CG. The residual norm is therefore
/// non-increasing, and for definite operators the quadratic objective is too.
/// An optional warm start `x0` is refined in place of zero.
template <class Vec>
Vec cg_solve(const LinearOperator<Vec>& op, const Vec& rhs, const CgOptions& opts,
             SolverTrace* trace = nullptr, const Vec* x0 = nullptr) {
  if (!(opts.tol > 0)) throw ArgumentError("cg_solve: tol must be positive");
  SolverTrace local;
  SolverTrace& tr = trace ? *trace : local;
  tr = SolverTrace{};

  const double bnorm = rhs.norm();
  Vec x = x0 ? *x0 : Vec(Vec::Zero(rhs.rows(), rhs.cols()));
  if (bnorm == 0.0) {
    x.setZero();
    tr.residuals.push_back(0.0);
    tr.objective.push_back(0.0);
    tr.converged = true;
    return x;
  }

  Vec r = rhs;
  if (x0) r -= op(x);
  auto quad = [&](const Vec& xk, const Vec& rk) {
    // 0.5<x, A x> - Re<b, x> with A x = b - r.
    return -0.5 * std::real(inner(xk, rhs)) - 0.5 * std::real(inner(xk, rk));
  };
  tr.residuals.push_back(r.norm() / bnorm);
  tr.objective.push_back(quad(x, r));
  if (tr.residuals.back() <= opts.tol) {
    tr.converged = true;
    return x;
  }

  Vec ar = op(r);
  Vec p = r;
  Vec ap = ar;
  auto rar = inner(r, ar);
  for (int it = 1; it <= opts.max_iter; ++it) {
    const double apap = std::real(inner(ap, ap));
    if (!std::isfinite(apap)) detail::throw_divergence(tr, it);
    if (!(apap > 0)) break;
    const auto alpha = rar / apap;
    x += alpha * p;
    r -= alpha * ap;
    tr.iterations = it;
    tr.residuals.push_back(r.norm() / bnorm);
    tr.objective.push_back(quad(x, r));
    if (!std::isfinite(tr.residuals.back()) || !detail::finite(x)) {
      detail::throw_divergence(tr, it);
    }
    if (tr.residuals.back() <= opts.tol) {
      tr.converged = true;
      break;
    }
    if (it == opts.max_iter) break;
    ar = op(r);
    const auto rar_next = inner(r, ar);
    if (std::abs(rar) == 0.0) break;
    const auto beta = rar_next / rar;
    rar = rar_next;
    p = r + beta * p;
    ap = ar + beta * ap;
  }
  return x;
}

// ---------------------------------------------------------------------------
// FFT

/// Unnormalized in-place 2-D DFT on a column-major complex matrix. Plans are
/// cached per size and created with deterministic (estimate-mode) planning.
void fft2_inplace(CxMatrix& m, bool inverse);

/// Batch of unnormalized in-place 1-D DFTs of length n: transform b starts at
/// data + b*dist and steps by stride. Shares the plan cache with fft2_inplace.
void fft_many_inplace(cx* data, Index n, Index howmany, Index stride, Index dist, bool inverse);

/// Unitary centered 2-D DFT: fftshift(fft2(ifftshift(x))) / sqrt(rows*cols).
CxMatrix fft2_centered(const CxMatrix& img);
/// Inverse of fft2_centered.
CxMatrix ifft2_centered(const CxMatrix& ksp);
ComplexArray fft2_centered(const ComplexArray& img);
ComplexArray ifft2_centered(const ComplexArray& ksp);

CxMatrix fftshift(const CxMatrix& m);
CxMatrix ifftshift(const CxMatrix& m);

// ---------------------------------------------------------------------------
// Dense factorizations

template <class Scalar>
struct EigResult {
  ReVector values; // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
};

/// Eigendecomposition of a Hermitian matrix, symmetrized as (A + A^H)/2 first.
template <class Derived>
EigResult<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (mat.rows() != mat.cols()) throw ShapeError("sym_eig: matrix must be square");
  const Mat sym = (mat + mat.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

template <class Scalar>
struct SvdResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> U;
  ReVector S; // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> V;
};

template <class Derived>
SvdResult<typename Derived::Scalar> svd_thin(const Eigen::MatrixBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (mat.rows() < 1 || mat.cols() < 1) throw ShapeError("svd_thin: empty matrix");
  Eigen::BDCSVD<Mat> svd(mat.derived(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

struct CoilCompression {
  CxMatrix compressed; // n_virtual x samples
  CxMatrix basis;      // coils x n_virtual, orthonormal columns
  double retained = 0; // energy fraction kept
};

/// Projects coils x samples data onto its top `n_virtual` left-singular
/// directions: compressed = basis^H * data.
CoilCompression pca_coil_compress(const CxMatrix& data, Index n_virtual);

} // namespace smr
