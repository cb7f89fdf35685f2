#include "smr/numerics.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

namespace smr {

Index shape_product(const std::vector<Index>& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

ComplexArray::ComplexArray(std::vector<Index> dims)
    : shape(std::move(dims)), data(CxVector::Zero(shape_product(shape))) {}

ComplexArray::ComplexArray(std::vector<Index> dims, CxVector values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("ComplexArray: shape does not match sample count");
  }
}

ComplexArray ComplexArray::from_matrix(const CxMatrix& m) {
  return ComplexArray({m.rows(), m.cols()}, m.reshaped());
}

Eigen::Map<const CxMatrix> ComplexArray::matrix(Index rows, Index cols) const {
  if (rows * cols != size()) throw ShapeError("ComplexArray::matrix: size mismatch");
  return {data.data(), rows, cols};
}

Eigen::Map<CxMatrix> ComplexArray::matrix(Index rows, Index cols) {
  if (rows * cols != size()) throw ShapeError("ComplexArray::matrix: size mismatch");
  return {data.data(), rows, cols};
}

CxMatrix ComplexArray::to_matrix() const {
  if (rank() != 2) throw ShapeError("ComplexArray::to_matrix: array is not 2-D");
  return matrix(shape[0], shape[1]);
}

namespace detail {
void throw_divergence(const SolverTrace& trace, int iter) {
  std::ostringstream msg;
  msg << "cg_solve: non-finite values at iteration " << iter << "; residual trace:";
  for (double r : trace.residuals) msg << ' ' << r;
  throw NumericalError(msg.str());
}
} // namespace detail

// ---------------------------------------------------------------------------

namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<Index, Index, bool>, fftw_plan> plans;
  std::map<std::tuple<Index, Index, Index, Index, bool>, fftw_plan> batches;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    for (auto& [key, plan] : batches) fftw_destroy_plan(plan);
  }

  fftw_plan get_many(Index n, Index howmany, Index stride, Index dist, bool inverse) {
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(n, howmany, stride, dist, inverse);
    if (auto it = batches.find(key); it != batches.end()) return it->second;
    const Index extent = (n - 1) * stride + (howmany - 1) * dist + 1;
    auto* buf = fftw_alloc_complex(static_cast<size_t>(extent));
    const int len = static_cast<int>(n);
    fftw_plan plan = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), buf, nullptr, static_cast<int>(stride),
                                        static_cast<int>(dist), buf, nullptr, static_cast<int>(stride),
                                        static_cast<int>(dist), inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!plan) throw NumericalError("fft_many: FFTW planning failed");
    batches.emplace(key, plan);
    return plan;
  }

  fftw_plan get(Index rows, Index cols, bool inverse) {
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(rows, cols, inverse);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    // Column-major rows x cols is row-major cols x rows; the DFT is separable so
    // only the dimension order passed to FFTW changes.
    auto* buf = fftw_alloc_complex(static_cast<size_t>(rows * cols));
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(cols), static_cast<int>(rows), buf, buf,
                                      inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!plan) throw NumericalError("fft2: FFTW planning failed");
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

CxMatrix circshift(const CxMatrix& m, Index dr, Index dc) {
  const Index R = m.rows(), C = m.cols();
  CxMatrix out(R, C);
  for (Index c = 0; c < C; ++c) {
    const Index oc = ((c + dc) % C + C) % C;
    for (Index r = 0; r < R; ++r) {
      out(((r + dr) % R + R) % R, oc) = m(r, c);
    }
  }
  return out;
}

void check_2d(const CxMatrix& m) {
  if (m.rows() < 2 || m.cols() < 2) throw ShapeError("fft2: both dimensions must be >= 2");
}

} // namespace

void fft2_inplace(CxMatrix& m, bool inverse) {
  check_2d(m);
  fftw_plan plan = plan_cache().get(m.rows(), m.cols(), inverse);
  auto* ptr = reinterpret_cast<fftw_complex*>(m.data());
  fftw_execute_dft(plan, ptr, ptr);
}

void fft_many_inplace(cx* data, Index n, Index howmany, Index stride, Index dist, bool inverse) {
  if (n < 1 || howmany < 1) throw ShapeError("fft_many: empty transform");
  fftw_plan plan = plan_cache().get_many(n, howmany, stride, dist, inverse);
  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, ptr, ptr);
}

CxMatrix fftshift(const CxMatrix& m) { return circshift(m, m.rows() / 2, m.cols() / 2); }
CxMatrix ifftshift(const CxMatrix& m) { return circshift(m, -(m.rows() / 2), -(m.cols() / 2)); }

CxMatrix fft2_centered(const CxMatrix& img) {
  check_2d(img);
  CxMatrix k = ifftshift(img);
  fft2_inplace(k, false);
  k /= std::sqrt(static_cast<double>(img.size()));
  return fftshift(k);
}

CxMatrix ifft2_centered(const CxMatrix& ksp) {
  check_2d(ksp);
  CxMatrix x = ifftshift(ksp);
  fft2_inplace(x, true);
  x /= std::sqrt(static_cast<double>(ksp.size()));
  return fftshift(x);
}

ComplexArray fft2_centered(const ComplexArray& img) {
  if (img.rank() != 2) throw ShapeError("fft2_centered: input must be 2-D");
  return ComplexArray::from_matrix(fft2_centered(img.to_matrix()));
}

ComplexArray ifft2_centered(const ComplexArray& ksp) {
  if (ksp.rank() != 2) throw ShapeError("ifft2_centered: input must be 2-D");
  return ComplexArray::from_matrix(ifft2_centered(ksp.to_matrix()));
}

// ---------------------------------------------------------------------------

CoilCompression pca_coil_compress(const CxMatrix& data, Index n_virtual) {
  const Index coils = data.rows();
  if (n_virtual < 1 || n_virtual > coils) {
    throw ArgumentError("pca_coil_compress: n_virtual must be in [1, coils]");
  }
  const CxMatrix cov = data * data.adjoint();
  const auto eig = sym_eig(cov);
  CoilCompression out;
  out.basis.resize(coils, n_virtual);
  double kept = 0;
  for (Index v = 0; v < n_virtual; ++v) {
    const Index src = coils - 1 - v; // eigenvalues ascending
    out.basis.col(v) = eig.vectors.col(src);
    kept += std::max(eig.values(src), 0.0);
  }
  const double total = eig.values.cwiseMax(0.0).sum();
  out.retained = total > 0 ? kept / total : 1.0;
  out.compressed = out.basis.adjoint() * data;
  return out;
}

} // namespace smr
