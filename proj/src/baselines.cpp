#include "smr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smr {

namespace {

std::vector<CxMatrix> scaled_frames(const KtData& data, double s) {
  std::vector<CxMatrix> out = data.frames;
  for (auto& f : out) f /= s;
  return out;
}

double frames_sq_norm(const std::vector<CxMatrix>& b) {
  double s = 0;
  for (const auto& f : b) s += f.squaredNorm();
  return s;
}

// Time-averaged gridding repeated in every frame, on the scaled data.
CxMatrix static_start(const KtData& data, const CoilMaps& maps, double scale) {
  const CxMatrix avg = time_averaged_gridding(data, maps) / scale;
  const Eigen::Map<const CxVector> v(avg.data(), avg.size());
  return v.replicate(1, data.n_frames());
}

double re_inner(const CxMatrix& a, const CxMatrix& b) { return std::real(inner(a, b)); }

void check_op(const KtData& data, const EncodingOperator& op) {
  data.validate();
  if (op.n_frames() != data.n_frames()) throw ShapeError("baseline: operator and data frame counts differ");
  for (Index f = 0; f < data.n_frames(); ++f) {
    if (op.samples(f) != data.frames[static_cast<size_t>(f)].rows() || op.coils() != data.n_coils()) {
      throw ShapeError("baseline: operator and data sample counts differ");
    }
  }
}

} // namespace

void BaselineParams::validate() const {
  if (!(lambda_lr >= 0) || !(lambda_t >= 0)) throw ArgumentError("baseline: weights must be >= 0");
  if (lr_iters < 1 || tfd_outer < 1 || power_iters < 1) throw ArgumentError("baseline: iteration caps must be >= 1");
  if (!(lr_safety > 0 && lr_safety <= 1)) throw ArgumentError("baseline: lr_safety must lie in (0, 1]");
  if (!(tfd_tau > 0)) throw ArgumentError("baseline: tfd_tau must be positive");
  if (step_arms == 0 || step_arms < -1) throw ArgumentError("baseline: step_arms must be >= 1");
  if (window_arms < 1 || (step_arms > 0 && window_arms < step_arms)) {
    throw ArgumentError("baseline: view window must be at least the step");
  }
}

CasoratiImage recon_view_share(const KtData& data, const CoilMaps& maps, Index window_arms, Index step_arms) {
  data.validate();
  const Index total = data.traj.arms_per_frame * data.n_frames();
  const Index step = step_arms < 0 ? data.traj.arms_per_frame : step_arms;
  if (step < 1 || window_arms < step) throw ArgumentError("recon_view_share: need window >= step >= 1");
  if (window_arms > total) throw ArgumentError("recon_view_share: window exceeds the acquired arms");
  const Index n_out = (total + step - 1) / step;
  CasoratiImage out(CxMatrix(maps.rows() * maps.cols(), n_out), maps.rows(), maps.cols());
#pragma omp parallel for schedule(dynamic)
  for (Index f = 0; f < n_out; ++f) {
    const double centre = (static_cast<double>(f) + 0.5) * static_cast<double>(step);
    const auto first = static_cast<Index>(std::floor(centre - 0.5 * static_cast<double>(window_arms) + 0.5));
    set_frame(out.X, f, gridding_arms(data, std::clamp<Index>(first, 0, total - window_arms), window_arms, maps));
  }
  return out;
}

CxMatrix svt(const CxMatrix& X, double threshold) {
  if (!(threshold >= 0)) throw ArgumentError("svt: threshold must be >= 0");
  const auto s = svd_thin(X);
  const ReVector shrunk = (s.S.array() - threshold).max(0.0);
  return s.U * shrunk.cast<cx>().asDiagonal() * s.V.adjoint();
}

CxMatrix soft_threshold(const CxMatrix& Z, double threshold) {
  if (!(threshold >= 0)) throw ArgumentError("soft_threshold: threshold must be >= 0");
  return Z.unaryExpr([threshold](const cx& z) {
    const double m = std::abs(z);
    return m > threshold ? z * ((m - threshold) / m) : cx(0.0);
  });
}

CxMatrix temporal_diff(const CxMatrix& X) {
  const Index N = X.cols();
  if (N < 2) return CxMatrix(X.rows(), 0);
  return X.rightCols(N - 1) - X.leftCols(N - 1);
}

CxMatrix temporal_diff_adjoint(const CxMatrix& Z) {
  const Index K = Z.cols();
  CxMatrix X = CxMatrix::Zero(Z.rows(), K + 1);
  X.rightCols(K) += Z;
  X.leftCols(K) -= Z;
  return X;
}

BaselineResult recon_low_rank(const KtData& data, const EncodingOperator& op, double lambda, const BaselineParams& p) {
  check_op(data, op);
  p.validate();
  if (!(lambda >= 0)) throw ArgumentError("recon_low_rank: lambda must be >= 0");
  BaselineResult res;
  res.data_scale = pooled_gridding_peak(data, op.maps());
  const std::vector<CxMatrix> b = scaled_frames(data, res.data_scale);
  const CxMatrix Ahb = op.adjoint_all(b);
  const double bb = frames_sq_norm(b);
  const double nu = op.norm_sq_estimate(p.power_iters);
  const double step = p.lr_safety / (2.0 * nu);
  const double weight = lambda * nu;

  // F(X) = <X, A^H A X> - 2 Re<X, A^H b> + ||b||^2 + weight ||X||_*, with A^H A X supplied.
  auto data_term = [&](const CxMatrix& X, const CxMatrix& NX) { return re_inner(X, NX) - 2 * re_inner(X, Ahb) + bb; };

  CxMatrix x = static_start(data, op.maps(), res.data_scale);
  CxMatrix Nx = op.normal_all(x);
  double Fx = data_term(x, Nx) + weight * svd_thin(x).S.sum();
  res.objective.push_back(Fx);

  CxMatrix x_prev = x, Nx_prev = Nx;
  CxMatrix y = x, Ny = Nx;
  double t = 1;
  for (int it = 0; it < p.lr_iters; ++it) {
    const CxMatrix g = y - (2.0 * step) * (Ny - Ahb);
    const auto s = svd_thin(g);
    const ReVector shrunk = (s.S.array() - step * weight).max(0.0);
    const CxMatrix z = s.U * shrunk.cast<cx>().asDiagonal() * s.V.adjoint();
    const CxMatrix Nz = op.normal_all(z);
    const double Fz = data_term(z, Nz) + weight * shrunk.sum();
    if (!std::isfinite(Fz)) throw NumericalError("recon_low_rank: objective diverged at iteration " + std::to_string(it + 1));

    x_prev = x;
    Nx_prev = Nx;
    if (Fz <= Fx) {
      x = z;
      Nx = Nz;
      Fx = Fz;
    } else {
      // Momentum overshot: restart from the current iterate.
      res.objective.push_back(Fx);
      y = x;
      Ny = Nx;
      t = 1;
      continue;
    }
    res.objective.push_back(Fx);
    const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    const double a = t / t_next, c = (t - 1) / t_next;
    y = x + a * (z - x) + c * (x - x_prev);
    Ny = Nx + a * (Nz - Nx) + c * (Nx - Nx_prev);
    t = t_next;
  }
  res.X = CasoratiImage(CxMatrix(x * res.data_scale), op.rows(), op.cols());
  return res;
}

BaselineResult recon_tfd(const KtData& data, const EncodingOperator& op, double lambda, const BaselineParams& p) {
  check_op(data, op);
  p.validate();
  if (!(lambda >= 0)) throw ArgumentError("recon_tfd: lambda must be >= 0");
  if (data.n_frames() < 2) throw ArgumentError("recon_tfd: need at least two frames");
  BaselineResult res;
  res.data_scale = pooled_gridding_peak(data, op.maps());
  const std::vector<CxMatrix> b = scaled_frames(data, res.data_scale);
  const CxMatrix Ahb = op.adjoint_all(b);
  const double bb = frames_sq_norm(b);
  const double nu = op.norm_sq_estimate(p.power_iters);
  const double rho = lambda * nu / p.tfd_tau;
  const double weight = lambda * nu;
  const double shrink = p.tfd_tau;

  const Index M = op.pixels(), N = op.n_frames();
  const LinearOperator<CxMatrix> normal{
      [&](const CxMatrix& X) {
        return CxMatrix(op.normal_all(X) + (0.5 * rho) * temporal_diff_adjoint(temporal_diff(X)));
      },
      {M, N},
      {M, N}};

  CxMatrix X = static_start(data, op.maps(), res.data_scale);
  CxMatrix Z = soft_threshold(temporal_diff(X), shrink);
  // The objective is carried forward by the exact change of each block step.
  // Forming it afresh from 2 q(X) + ||b||^2 cancels most of its digits once
  // the fit is good, and that noise would mask the true descent.
  double J = 0;
  for (int it = 0; it < p.tfd_outer; ++it) {
    const CxMatrix rhs = Ahb + (0.5 * rho) * temporal_diff_adjoint(Z);
    SolverTrace trace;
    const CxMatrix x0 = X;
    X = cg_solve(normal, rhs, p.tfd_cg, &trace, &x0);
    // 2 q(X) + ||b||^2 + rho/2 ||Z||^2 = ||A X - b||^2 + rho/2 ||D X - Z||^2.
    if (it == 0) {
      J = 2 * trace.objective.front() + bb + 0.5 * rho * Z.squaredNorm() + weight * Z.cwiseAbs().sum();
      res.objective.push_back(J);
    }
    J += 2 * (trace.objective.back() - trace.objective.front());
    const CxMatrix DX = temporal_diff(X);
    const CxMatrix Z_new = soft_threshold(DX, shrink);
    J += (0.5 * rho * ((DX - Z_new).cwiseAbs2() - (DX - Z).cwiseAbs2()).array() +
          weight * (Z_new.cwiseAbs() - Z.cwiseAbs()).array())
             .sum();
    Z = Z_new;
    if (!std::isfinite(J)) throw NumericalError("recon_tfd: objective diverged at iteration " + std::to_string(it + 1));
    res.objective.push_back(J);
    res.inner.push_back(std::move(trace));
  }
  res.X = CasoratiImage(CxMatrix(X * res.data_scale), op.rows(), op.cols());
  return res;
}

std::vector<Index> xd_sort_order(const CxMatrix& X_low) {
  if (X_low.cols() < 1 || X_low.rows() < 1) throw ShapeError("xd_sort_order: empty Casorati matrix");
  const CxMatrix centred = X_low.colwise() - X_low.rowwise().mean();
  CxVector v = svd_thin(centred).V.col(0);
  Index peak = 0;
  v.cwiseAbs().maxCoeff(&peak);
  if (std::abs(v(peak)) > 0) v *= std::conj(v(peak)) / std::abs(v(peak));
  std::vector<Index> order(static_cast<size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index c) { return v(a).real() < v(c).real(); });
  return order;
}

std::vector<Index> inverse_permutation(const std::vector<Index>& perm) {
  std::vector<Index> inv(perm.size(), -1);
  for (size_t i = 0; i < perm.size(); ++i) {
    const Index j = perm[i];
    if (j < 0 || j >= static_cast<Index>(perm.size()) || inv[static_cast<size_t>(j)] != -1) {
      throw ArgumentError("inverse_permutation: not a permutation");
    }
    inv[static_cast<size_t>(j)] = static_cast<Index>(i);
  }
  return inv;
}

KtData permute_frames(const KtData& data, const std::vector<Index>& perm) {
  data.validate();
  if (static_cast<Index>(perm.size()) != data.n_frames()) throw ShapeError("permute_frames: permutation length");
  (void)inverse_permutation(perm);
  KtData out = data;
  const auto block = static_cast<size_t>(data.traj.arms_per_frame * data.traj.n_slices);
  for (size_t i = 0; i < perm.size(); ++i) {
    const auto src = static_cast<size_t>(perm[i]);
    out.frames[i] = data.frames[src];
    std::copy_n(data.traj.angles_deg.begin() + static_cast<std::ptrdiff_t>(src * block), block,
                out.traj.angles_deg.begin() + static_cast<std::ptrdiff_t>(i * block));
  }
  return out;
}

BaselineResult recon_xd_sort(const KtData& data, const CoilMaps& maps, double lambda, const CasoratiImage& X_low,
                             const BaselineParams& p) {
  data.validate();
  if (X_low.n_frames() != data.n_frames()) throw ShapeError("recon_xd_sort: X_low frame count differs from data");
  const std::vector<Index> perm = xd_sort_order(X_low.X);
  const KtData sorted = permute_frames(data, perm);
  const EncodingOperator op(maps, sorted.traj, sorted.slice);
  BaselineResult res = recon_tfd(sorted, op, lambda, p);
  CxMatrix X(res.X.X.rows(), res.X.X.cols());
  for (size_t i = 0; i < perm.size(); ++i) X.col(perm[i]) = res.X.X.col(static_cast<Index>(i));
  res.X.X = std::move(X);
  return res;
}

} // namespace smr
