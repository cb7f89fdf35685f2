#include "smr/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smr {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

KtData scaled(const KtData& data, double s) {
  KtData out = data;
  for (auto& f : out.frames) f /= s;
  return out;
}

} // namespace

Index navigator_samples(double q, Index n_samples) {
  if (!(q > 0 && q <= 100)) throw ArgumentError("navigator: q must lie in (0, 100]");
  const auto n = static_cast<Index>(std::floor(q / 100.0 * static_cast<double>(n_samples) + 0.5));
  return std::clamp<Index>(n, 1, n_samples);
}

NavigatorData extract_navigator(const KtData& data, double q, Index full_rows, Index full_cols, Index nav_rows,
                                Index nav_cols) {
  data.validate();
  if (nav_rows < 2 || nav_cols < 2) throw ArgumentError("extract_navigator: navigator grid must be at least 2x2");
  const Index ns = data.traj.base_arm.n_samples();
  const Index keep = navigator_samples(q, ns);
  const Index arms = data.traj.arms_per_frame;
  const double fr = static_cast<double>(full_rows) / static_cast<double>(nav_rows);
  const double fc = static_cast<double>(full_cols) / static_cast<double>(nav_cols);

  NavigatorData nav;
  nav.samples_per_arm = keep;
  nav.full_samples_per_arm = ns;
  nav.q = q;
  nav.rows = nav_rows;
  nav.cols = nav_cols;
  nav.weights = arm_set_weights(data.traj, arms, keep) * (fr * fc);
  for (Index f = 0; f < data.n_frames(); ++f) {
    const CxMatrix& y = data.frames[static_cast<size_t>(f)];
    const Coords k = data.traj.frame_coords(f, data.slice);
    CxMatrix yn(arms * keep, y.cols());
    Coords kn(arms * keep, 2);
    for (Index a = 0; a < arms; ++a) {
      yn.middleRows(a * keep, keep) = y.middleRows(a * ns, keep);
      kn.middleRows(a * keep, keep) = k.middleRows(a * ns, keep);
    }
    kn.col(0) *= fr;
    kn.col(1) *= fc;
    if (kn.cwiseAbs().maxCoeff() > 0.5 + 1e-9) {
      throw ArgumentError("extract_navigator: navigator grid too small for the retained k-space extent");
    }
    nav.frames.push_back(std::move(yn));
    nav.coords.push_back(std::move(kn));
  }
  return nav;
}

ReMatrix pairwise_sq_distances(const CxMatrix& X) {
  const Index N = X.cols();
  ReMatrix d2 = ReMatrix::Zero(N, N);
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < N; ++i) {
    for (Index j = i + 1; j < N; ++j) d2(i, j) = (X.col(i) - X.col(j)).squaredNorm();
  }
  for (Index i = 0; i < N; ++i) {
    for (Index j = i + 1; j < N; ++j) d2(j, i) = d2(i, j);
  }
  return d2;
}

double distance_scale(const ReMatrix& d2, const CxMatrix& X, const KernelOptions& opts) {
  const Index N = d2.rows();
  if (opts.scale == DistanceScale::all_pairs_median) {
    std::vector<double> pairs;
    pairs.reserve(static_cast<size_t>(N * (N - 1) / 2));
    for (Index i = 0; i < N; ++i) {
      for (Index j = i + 1; j < N; ++j) pairs.push_back(d2(i, j));
    }
    return median(std::move(pairs));
  }
  std::vector<double> nearest(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < N; ++j) {
      if (j != i) m = std::min(m, d2(i, j));
    }
    nearest[static_cast<size_t>(i)] = m;
  }
  const double energy = X.colwise().squaredNorm().mean();
  return std::max(median(std::move(nearest)), opts.floor * energy);
}

ReMatrix gaussian_weights(const CxMatrix& X, const KernelOptions& opts) {
  if (!(opts.delta2 > 0)) throw ArgumentError("gaussian_weights: delta2 must be positive");
  if (X.cols() < 2) throw ArgumentError("gaussian_weights: need at least two frames");
  const ReMatrix d2 = pairwise_sq_distances(X);
  const double s = distance_scale(d2, X, opts);
  const Index N = X.cols();
  ReMatrix W(N, N);
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i < N; ++i) {
      if (i == j) {
        W(i, j) = 0.0;
      } else if (s > 0) {
        W(i, j) = std::exp(-d2(i, j) / (s * opts.delta2));
      } else {
        W(i, j) = d2(i, j) == 0.0 ? 1.0 : 0.0;
      }
    }
  }
  return W;
}

ReMatrix build_laplacian(const ReMatrix& W) {
  if (W.rows() != W.cols()) throw ShapeError("build_laplacian: W must be square");
  const double tol = 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > tol) throw ArgumentError("build_laplacian: W is not symmetric");
  if (W.size() && W.minCoeff() < 0) throw ArgumentError("build_laplacian: W has negative entries");
  ReMatrix L = -W;
  L.diagonal() += W.rowwise().sum();
  return L;
}

double laplacian_energy(const CxMatrix& X, const ReMatrix& L) {
  if (L.rows() != X.cols() || L.cols() != X.cols()) throw ShapeError("laplacian_energy: dims");
  const CxMatrix XL = X * L.cast<cx>();
  return std::real((X.conjugate().array() * XL.array()).sum());
}

double pairwise_energy(const CxMatrix& X, const ReMatrix& W) {
  const ReMatrix d2 = pairwise_sq_distances(X);
  return 0.5 * (W.array() * d2.array()).sum();
}

void check_laplacian(const ReMatrix& W, const ReMatrix& L) {
  const Index N = W.rows();
  if (W.cols() != N || L.rows() != N || L.cols() != N) throw NumericalError("Laplacian check: dims");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw NumericalError("Laplacian check: W not symmetric");
  if (W.minCoeff() < 0 || W.maxCoeff() > 1) throw NumericalError("Laplacian check: W outside [0, 1]");
  if (W.diagonal().cwiseAbs().maxCoeff() != 0.0) throw NumericalError("Laplacian check: W diagonal not zero");
  if (L.rowwise().sum().cwiseAbs().maxCoeff() >= 1e-10) throw NumericalError("Laplacian check: row sums not zero");
  const auto eig = sym_eig(L);
  if (eig.values(0) < -1e-8) throw NumericalError("Laplacian check: L not positive semidefinite");
}

LaplacianModel estimate_laplacian(const NavigatorData& nav, const CoilMaps& nav_maps, const NavigatorSolve& opts,
                                  CxMatrix* x_low) {
  if (opts.outer_iters < 1) throw ArgumentError("estimate_laplacian: outer_iters must be >= 1");
  if (!(opts.lambda >= 0)) throw ArgumentError("estimate_laplacian: lambda must be >= 0");
  if (nav_maps.rows() != nav.rows || nav_maps.cols() != nav.cols) throw ShapeError("estimate_laplacian: map dims");
  const Index N = nav.n_frames();
  if (N < 2) throw ArgumentError("estimate_laplacian: need at least two frames");

  const EncodingOperator op(nav_maps, nav.coords);
  const double lambda = opts.lambda_relative ? opts.lambda * op.norm_sq_estimate() / static_cast<double>(N) : opts.lambda;

  CxMatrix X(op.pixels(), N);
#pragma omp parallel for schedule(static)
  for (Index f = 0; f < N; ++f) {
    set_frame(X, f, gridding_recon(nav.frames[static_cast<size_t>(f)], nav.coords[static_cast<size_t>(f)], nav.weights,
                                   nav_maps));
  }
  const CxMatrix rhs = op.adjoint_all(nav.frames);

  LaplacianModel model;
  model.kernel = opts.kernel;
  model.q = nav.q;
  for (int it = 0; it < opts.outer_iters; ++it) {
    model.W = gaussian_weights(X, opts.kernel);
    model.scale = distance_scale(pairwise_sq_distances(X), X, opts.kernel);
    model.L = build_laplacian(model.W);
    check_laplacian(model.W, model.L);
    const CxMatrix Lc = model.L.cast<cx>();
    const LinearOperator<CxMatrix> normal{
        [&](const CxMatrix& Z) { return CxMatrix(op.normal_all(Z) + lambda * (Z * Lc)); }, {op.pixels(), N},
        {op.pixels(), N}};
    SolverTrace trace;
    const CxMatrix x0 = X;
    X = cg_solve(normal, rhs, opts.cg, &trace, &x0);
    model.traces.push_back(std::move(trace));
    model.iterations = it + 1;
  }
  const auto eig = sym_eig(model.L);
  model.eigvals = eig.values;
  if (x_low) *x_low = std::move(X);
  return model;
}

EigenBasis solve_basis(const ReMatrix& L, Index r) {
  if (r < 1 || r > L.rows()) throw ArgumentError("solve_basis: r must lie in [1, N]");
  const auto eig = sym_eig(L);
  return {eig.vectors.leftCols(r), eig.values.head(r)};
}

CxMatrix solve_spatial_coeffs(const std::vector<CxMatrix>& b, const EncodingOperator& op, const EigenBasis& basis,
                              double lambda, const CgOptions& cg, SolverTrace* trace, const CxMatrix* u0) {
  const Index N = op.n_frames(), r = basis.V.cols();
  if (basis.V.rows() != N) throw ShapeError("solve_spatial_coeffs: basis rows differ from frame count");
  if (basis.sigma.size() != r) throw ShapeError("solve_spatial_coeffs: sigma length differs from basis size");
  if (static_cast<Index>(b.size()) != N) throw ShapeError("solve_spatial_coeffs: data frame count");
  if (!(lambda >= 0)) throw ArgumentError("solve_spatial_coeffs: lambda must be >= 0");
  const CxMatrix V = basis.V.cast<cx>();
  const CxMatrix Vt = basis.V.transpose().cast<cx>();
  const CxVector reg = (lambda * basis.sigma).cast<cx>();
  const LinearOperator<CxMatrix> normal{
      [&](const CxMatrix& U) {
        CxMatrix out = op.normal_all(U * Vt) * V;
        out += U * reg.asDiagonal();
        return out;
      },
      {op.pixels(), r},
      {op.pixels(), r}};
  const CxMatrix rhs = op.adjoint_all(b) * V;
  return cg_solve(normal, rhs, cg, trace, u0);
}

void ManifoldParams::validate(Index n_frames) const {
  if (!(q > 0 && q <= 100)) throw ArgumentError("manifold: q must lie in (0, 100]");
  if (!(delta2 > 0)) throw ArgumentError("manifold: delta2 must be positive");
  if (!(lambda >= 0)) throw ArgumentError("manifold: lambda must be >= 0");
  if (r < 1 || r > n_frames) throw ArgumentError("manifold: r must lie in [1, N]");
  if (outer_iters < 1) throw ArgumentError("manifold: outer_iters must be >= 1");
  if (nav_rows < 2 || nav_cols < 2) throw ArgumentError("manifold: navigator grid must be at least 2x2");
}

std::string ManifoldParams::describe() const {
  std::ostringstream os;
  os << "q=" << q << "\ndelta2=" << delta2 << "\nlambda=" << lambda << "\nr=" << r;
  os << "\nlambda_nav=" << (lambda_nav < 0 ? lambda : lambda_nav) << "\nouter_iters=" << outer_iters;
  os << "\nnav_grid=" << nav_rows << 'x' << nav_cols;
  os << "\ndistance_scale=" << (scale == DistanceScale::all_pairs_median ? "all_pairs_median" : "nearest_neighbour_median");
  os << "\nscale_floor=" << scale_floor << '\n';
  return os.str();
}

NavigatorStage run_navigator(const KtData& data, const CoilMaps& maps, const ManifoldParams& params) {
  data.validate();
  params.validate(data.n_frames());
  NavigatorStage st;
  st.data_scale = pooled_gridding_peak(data, maps);
  const KtData b = scaled(data, st.data_scale);
  const NavigatorData nav = extract_navigator(b, params.q, maps.rows(), maps.cols(), params.nav_rows, params.nav_cols);
  NavigatorSolve ns;
  ns.lambda = params.lambda_nav < 0 ? params.lambda : params.lambda_nav;
  ns.lambda_relative = true;
  ns.outer_iters = params.outer_iters;
  ns.cg = params.nav_cg;
  ns.kernel = {params.delta2, params.scale, params.scale_floor};
  CxMatrix x_low;
  st.model = estimate_laplacian(nav, resample_maps(maps, params.nav_rows, params.nav_cols), ns, &x_low);
  st.X_low = CasoratiImage(x_low * st.data_scale, params.nav_rows, params.nav_cols);
  return st;
}

ManifoldResult reconstruct_manifold(const KtData& data, const CoilMaps& maps, const ManifoldParams& params) {
  NavigatorStage st = run_navigator(data, maps, params);
  ManifoldResult res;
  res.data_scale = st.data_scale;
  res.model = std::move(st.model);
  res.X_low = std::move(st.X_low);
  const KtData b = scaled(data, res.data_scale);

  const EigenBasis basis = solve_basis(res.model.L, params.r);
  res.model.eigvecs = basis.V;

  const EncodingOperator op(maps, data.traj, data.slice);
  const double nu = op.norm_sq_estimate() / static_cast<double>(data.n_frames());
  const CxMatrix U = solve_spatial_coeffs(b.frames, op, basis, params.lambda * nu, params.cg, &res.coeff_trace);
  res.X = CasoratiImage(CxMatrix(U * basis.V.transpose().cast<cx>() * res.data_scale), maps.rows(), maps.cols());
  return res;
}

} // namespace smr
