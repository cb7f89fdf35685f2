#include "smr/pipeline.hpp"

#include <chrono>
#include <sstream>

#include "smr/analysis.hpp"

namespace smr {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << v;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::string matrix_csv(const ReMatrix& m) {
  std::string s;
  for (Index j = 0; j < m.cols(); ++j) s += (j ? ",c" : "c") + std::to_string(j);
  s += "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + num(m(i, j));
    s += "\n";
  }
  return s;
}

void write_real(const fs::path& stem, const ReMatrix& m) {
  const ReVector v = Eigen::Map<const ReVector>(m.data(), m.size());
  write_array(stem, ArrayFile::from_real({m.rows(), m.cols()}, v));
}

ReMatrix read_real(const fs::path& stem) {
  const ArrayFile a = read_array(stem);
  if (a.dims.size() != 2) throw IoError("expected a 2-D array in " + header_path(stem).string());
  const ReVector v = a.to_real();
  return Eigen::Map<const ReMatrix>(v.data(), a.dims[0], a.dims[1]);
}

void require(const fs::path& stem, const std::string& what) {
  if (!fs::exists(header_path(stem)) || !fs::exists(raw_path(stem))) {
    throw IoError("missing input " + header_path(stem).string() + " (" + what + ")");
  }
}

std::vector<Index> arms_list(const RunConfig& cfg) {
  std::vector<Index> out;
  for (long long a : cfg.get_int_list("acq.arms_per_frame")) {
    if (a < 1) throw ArgumentError("config: acq.arms_per_frame entries must be >= 1");
    out.push_back(static_cast<Index>(a));
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  write_trajectory_csv(os, traj);
  return os.str();
}

} // namespace

Algorithm parse_algorithm(const std::string& id) {
  for (Algorithm a : all_algorithms()) {
    if (algorithm_id(a) == id) return a;
  }
  throw ArgumentError("unknown algorithm '" + id + "' (manifold, viewshare, lowrank, tfd, xdsort)");
}

std::string algorithm_id(Algorithm a) {
  switch (a) {
  case Algorithm::manifold: return "manifold";
  case Algorithm::viewshare: return "viewshare";
  case Algorithm::lowrank: return "lowrank";
  case Algorithm::tfd: return "tfd";
  case Algorithm::xdsort: return "xdsort";
  }
  throw ArgumentError("unknown algorithm");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all{Algorithm::manifold, Algorithm::viewshare, Algorithm::lowrank, Algorithm::tfd,
                                          Algorithm::xdsort};
  return all;
}

Index frames_for_interleaves(Index total_arms, Index arms_per_frame) {
  if (total_arms < 1 || arms_per_frame < 1) throw ArgumentError("frames_for_interleaves: counts must be positive");
  if (total_arms % arms_per_frame != 0) {
    throw ArgumentError("frames_for_interleaves: " + std::to_string(total_arms) + " interleaves do not divide into " +
                        std::to_string(arms_per_frame) + " per frame");
  }
  return total_arms / arms_per_frame;
}

Index run_frames(const RunConfig& cfg, Index arms_per_frame) {
  const auto total = cfg.get_int("acq.total_arms");
  if (total > 0) return frames_for_interleaves(static_cast<Index>(total), arms_per_frame);
  return static_cast<Index>(cfg.get_int("phantom.frames"));
}

PhantomSpec phantom_from_config(const RunConfig& cfg, Index n_frames) {
  const auto rows = static_cast<Index>(cfg.get_int("phantom.rows"));
  const auto cols = static_cast<Index>(cfg.get_int("phantom.cols"));
  const std::string scene = cfg.get("phantom.scene");
  PhantomSpec spec;
  if (scene == "speech" || scene == "static" || scene == "random") {
    spec = PhantomSpec::speech_default(rows, cols, n_frames, static_cast<Index>(cfg.get_int("phantom.period")));
    if (scene == "static") {
      spec.static_ellipses.push_back(spec.moving[0].shape);
      spec.moving.clear();
    } else if (scene == "random") {
      auto& law = spec.moving[0].law;
      law.kind = MotionKind::smooth_random;
      law.bandwidth = cfg.get_double("phantom.bandwidth");
      law.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
    }
  } else if (scene == "two_cluster") {
    spec = PhantomSpec::two_cluster(rows, cols, n_frames);
  } else {
    throw ArgumentError("config: phantom.scene must be speech, two_cluster, static or random, got '" + scene + "'");
  }
  spec.validate();
  return spec;
}

SpiralArm arm_from_config(const RunConfig& cfg) {
  return design_vds(FovSchedule::speech_default(), static_cast<Index>(cfg.get_int("traj.design_arms")),
                    static_cast<Index>(cfg.get_int("traj.samples")), cfg.get_double("traj.resolution_cm"));
}

Trajectory trajectory_from_config(const RunConfig& cfg, Index arms_per_frame, Index n_frames) {
  return golden_schedule(arm_from_config(cfg), n_frames, arms_per_frame, static_cast<Index>(cfg.get_int("traj.slices")),
                         cfg.get_double("traj.increment_deg"));
}

AcquisitionSpec acquisition_from_config(const RunConfig& cfg, Index arms_per_frame) {
  AcquisitionSpec acq;
  acq.arms_per_frame = arms_per_frame;
  acq.n_coils = static_cast<Index>(cfg.get_int("acq.coils"));
  acq.snr_db = cfg.get_double("acq.snr_db");
  acq.noise_seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
  acq.inverse_crime = cfg.get_bool("acq.inverse_crime");
  acq.validate();
  return acq;
}

ManifoldParams manifold_from_config(const RunConfig& cfg) {
  ManifoldParams p;
  p.q = cfg.get_double("recon.q");
  p.delta2 = cfg.get_double("recon.delta2");
  p.lambda = cfg.get_double("recon.lambda");
  p.lambda_nav = cfg.get_double("recon.lambda_nav");
  p.r = static_cast<Index>(cfg.get_int("recon.r"));
  p.outer_iters = static_cast<int>(cfg.get_int("recon.outer_iters"));
  p.nav_rows = p.nav_cols = static_cast<Index>(cfg.get_int("recon.nav_grid"));
  const std::string scale = cfg.get("recon.distance_scale");
  if (scale == "nearest_neighbour") {
    p.scale = DistanceScale::nearest_neighbour_median;
  } else if (scale == "all_pairs") {
    p.scale = DistanceScale::all_pairs_median;
  } else {
    throw ArgumentError("config: recon.distance_scale must be nearest_neighbour or all_pairs");
  }
  p.scale_floor = cfg.get_double("recon.scale_floor");
  p.cg = {cfg.get_double("recon.cg_tol"), static_cast<int>(cfg.get_int("recon.cg_iters"))};
  p.nav_cg = {cfg.get_double("recon.nav_cg_tol"), static_cast<int>(cfg.get_int("recon.nav_cg_iters"))};
  return p;
}

BaselineParams baseline_from_config(const RunConfig& cfg) {
  BaselineParams p;
  p.lambda_lr = cfg.get_double("recon.lambda_lr");
  p.lambda_t = cfg.get_double("recon.lambda_t");
  p.lr_iters = static_cast<int>(cfg.get_int("recon.lr_iters"));
  p.tfd_outer = static_cast<int>(cfg.get_int("recon.tfd_outer"));
  p.tfd_cg.max_iter = static_cast<int>(cfg.get_int("recon.tfd_inner"));
  p.tfd_tau = cfg.get_double("recon.tfd_tau");
  p.window_arms = static_cast<Index>(cfg.get_int("recon.view_window"));
  const auto step = cfg.get_int("recon.view_step");
  p.step_arms = step == 0 ? -1 : static_cast<Index>(step);
  p.validate();
  return p;
}

fs::path phantom_dir(const fs::path& out) { return out / "phantom"; }
fs::path sim_dir(const fs::path& out, Index apf) { return out / "sim" / ("apf" + std::to_string(apf)); }
fs::path recon_dir(const fs::path& out, Algorithm a, Index apf) {
  return out / "recon" / algorithm_id(a) / ("apf" + std::to_string(apf));
}
fs::path analysis_dir(const fs::path& out) { return out / "analysis"; }

void write_casorati(const fs::path& stem, const CasoratiImage& X) {
  write_array(stem, ArrayFile::from_complex(ComplexArray({X.rows, X.cols, X.n_frames()},
                                                         Eigen::Map<const CxVector>(X.X.data(), X.X.size()))));
}

CasoratiImage read_casorati(const fs::path& stem) {
  const ComplexArray a = read_array(stem).to_complex();
  if (a.shape.size() != 3) throw IoError("expected rows x cols x frames in " + header_path(stem).string());
  return CasoratiImage(Eigen::Map<const CxMatrix>(a.data.data(), a.shape[0] * a.shape[1], a.shape[2]), a.shape[0],
                       a.shape[1]);
}

SimulationFiles load_simulation(const RunConfig& cfg, const fs::path& out, Index apf) {
  const fs::path dir = sim_dir(out, apf);
  require(dir / "kdata", "run simulate first");
  require(dir / "maps", "run simulate first");
  require(dir / "truth", "run simulate first");
  SimulationFiles s;
  const ComplexArray k = read_array(dir / "kdata").to_complex();
  const ComplexArray m = read_array(dir / "maps").to_complex();
  if (k.shape.size() != 3 || m.shape.size() != 3) throw IoError("simulation arrays in " + dir.string() + " are not 3-D");
  const Index N = run_frames(cfg, apf);
  s.data.traj = trajectory_from_config(cfg, apf, N);
  if (k.shape[0] != s.data.traj.samples_per_frame() || k.shape[2] != N || k.shape[1] != m.shape[2]) {
    throw IoError("simulation in " + dir.string() + " does not match the configuration");
  }
  const Index per = k.shape[0] * k.shape[1];
  for (Index f = 0; f < N; ++f) {
    s.data.frames.push_back(Eigen::Map<const CxMatrix>(k.data.data() + f * per, k.shape[0], k.shape[1]));
  }
  const Index px = m.shape[0] * m.shape[1];
  for (Index j = 0; j < m.shape[2]; ++j) {
    s.maps.maps.push_back(Eigen::Map<const CxMatrix>(m.data.data() + j * px, m.shape[0], m.shape[1]));
  }
  s.maps.validate();
  s.truth = read_casorati(dir / "truth");
  s.data.validate();
  return s;
}

void cmd_phantom(const RunConfig& cfg, const fs::path& out) {
  const PhantomSpec spec = phantom_from_config(cfg, static_cast<Index>(cfg.get_int("phantom.frames")));
  const fs::path dir = phantom_dir(out);
  write_casorati(dir / "truth", render_all(spec));
  write_file_atomic(dir / "config.txt", cfg.dump());
}

void cmd_traj(const RunConfig& cfg, const fs::path& out) {
  for (Index apf : arms_list(cfg)) {
    const Trajectory traj = trajectory_from_config(cfg, apf, run_frames(cfg, apf));
    write_file_atomic(out / "traj" / ("apf" + std::to_string(apf) + ".csv"), trajectory_csv(traj));
  }
}

void cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  require(phantom_dir(out) / "truth", "run phantom first");
  for (Index apf : arms_list(cfg)) {
    const Index N = run_frames(cfg, apf);
    const PhantomSpec spec = phantom_from_config(cfg, N);
    const Trajectory traj = trajectory_from_config(cfg, apf, N);
    const AcquisitionSpec acq = acquisition_from_config(cfg, apf);
    const CoilMaps maps = synth_coilmaps(acq.n_coils, spec.rows, spec.cols);
    const Simulation sim = simulate_kt(spec, traj, acq, maps);

    const fs::path dir = sim_dir(out, apf);
    const Index per = traj.samples_per_frame(), coils = acq.n_coils;
    CxVector k(per * coils * N);
    for (Index f = 0; f < N; ++f) {
      k.segment(f * per * coils, per * coils) = Eigen::Map<const CxVector>(sim.data.frames[size_t(f)].data(), per * coils);
    }
    write_array(dir / "kdata", ArrayFile::from_complex(ComplexArray({per, coils, N}, std::move(k))));
    CxVector m(spec.rows * spec.cols * coils);
    for (Index j = 0; j < coils; ++j) {
      m.segment(j * spec.rows * spec.cols, spec.rows * spec.cols) =
          Eigen::Map<const CxVector>(maps.maps[size_t(j)].data(), spec.rows * spec.cols);
    }
    write_array(dir / "maps", ArrayFile::from_complex(ComplexArray({spec.rows, spec.cols, coils}, std::move(m))));
    write_casorati(dir / "truth", sim.truth);
    write_file_atomic(dir / "traj.csv", trajectory_csv(traj));
  }
}

void cmd_recon(Algorithm algorithm, const RunConfig& cfg, const fs::path& out) {
  for (Index apf : arms_list(cfg)) {
    const SimulationFiles sim = load_simulation(cfg, out, apf);
    const fs::path dir = recon_dir(out, algorithm, apf);
    const auto t0 = std::chrono::steady_clock::now();
    std::string log = "algorithm=" + algorithm_id(algorithm) + "\narms_per_frame=" + std::to_string(apf) +
                      "\nframes=" + std::to_string(sim.data.n_frames()) + "\n";
    CasoratiImage X;

    if (algorithm == Algorithm::manifold) {
      const ManifoldParams p = manifold_from_config(cfg);
      const ManifoldResult r = reconstruct_manifold(sim.data, sim.maps, p);
      X = r.X;
      log += p.describe();
      for (size_t i = 0; i < r.model.traces.size(); ++i) {
        log += "navigator_residuals_" + std::to_string(i + 1) + "=" + join(r.model.traces[i].residuals) + "\n";
      }
      log += "objective=" + join(r.coeff_trace.objective) + "\nresiduals=" + join(r.coeff_trace.residuals) + "\n";
      write_real(dir / "W", r.model.W);
      write_real(dir / "L", r.model.L);
      write_real(dir / "eigvals", r.model.eigvals);
      write_real(dir / "eigvecs", r.model.eigvecs);
      write_file_atomic(dir / "W.csv", matrix_csv(r.model.W));
      write_file_atomic(dir / "L.csv", matrix_csv(r.model.L));
    } else {
      const BaselineParams p = baseline_from_config(cfg);
      BaselineResult r;
      if (algorithm == Algorithm::viewshare) {
        r.X = recon_view_share(sim.data, sim.maps, p.window_arms, p.step_arms);
        log += "window=" + std::to_string(p.window_arms) +
               "\nstep=" + std::to_string(p.step_arms < 0 ? apf : p.step_arms) + "\n";
      } else if (algorithm == Algorithm::lowrank) {
        const EncodingOperator op(sim.maps, sim.data.traj);
        r = recon_low_rank(sim.data, op, p.lambda_lr, p);
        log += "lambda_lr=" + num(p.lambda_lr) + "\niterations=" + std::to_string(p.lr_iters) + "\n";
      } else if (algorithm == Algorithm::tfd) {
        const EncodingOperator op(sim.maps, sim.data.traj);
        r = recon_tfd(sim.data, op, p.lambda_t, p);
        log += "lambda_t=" + num(p.lambda_t) + "\nouter=" + std::to_string(p.tfd_outer) + "\ntau=" + num(p.tfd_tau) + "\n";
      } else {
        const NavigatorStage nav = run_navigator(sim.data, sim.maps, manifold_from_config(cfg));
        const double lambda = cfg.get_double("recon.lambda_xd");
        r = recon_xd_sort(sim.data, sim.maps, lambda, nav.X_low, p);
        log += "lambda_t=" + num(lambda) + "\nouter=" + std::to_string(p.tfd_outer) + "\ntau=" + num(p.tfd_tau) + "\n";
      }
      X = std::move(r.X);
      if (!r.objective.empty()) log += "objective=" + join(r.objective) + "\n";
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log += "wall_time_s=" + num(secs) + "\n";
    write_casorati(dir / "image", X);
    write_file_atomic(dir / "log.txt", log);
  }
}

void cmd_analyze(const RunConfig& cfg, const fs::path& out) {
  std::vector<Algorithm> algs;
  for (const auto& id : cfg.get_list("analysis.algorithms")) algs.push_back(parse_algorithm(id));
  const fs::path dir = analysis_dir(out);
  const double threshold = cfg.get_double("analysis.threshold");
  const auto line = static_cast<Index>(cfg.get_int("analysis.profile_line"));
  const std::string orient_id = cfg.get("analysis.profile_orientation");
  if (orient_id != "row" && orient_id != "col") throw ArgumentError("config: analysis.profile_orientation must be row or col");
  const LineOrientation orient = orient_id == "row" ? LineOrientation::row : LineOrientation::col;

  std::string table = "algorithm,arms_per_frame,mse\n";
  for (Index apf : arms_list(cfg)) {
    const fs::path sdir = sim_dir(out, apf);
    require(sdir / "truth", "run simulate first");
    const CasoratiImage truth = read_casorati(sdir / "truth");
    const RoiMask mask = moving_edge_mask(truth, cfg.get_double("analysis.mask_frac"),
                                          static_cast<int>(cfg.get_int("analysis.mask_dilate")));
    const fs::path adir = dir / ("apf" + std::to_string(apf));

    std::vector<std::string> header{"frame", "truth"};
    ReVector frames(truth.n_frames());
    for (Index f = 0; f < truth.n_frames(); ++f) frames(f) = static_cast<double>(f);
    std::vector<ReVector> columns{frames, roi_time_profile(truth, mask)};

    auto write_profile = [&](const std::string& name, const CasoratiImage& X) {
      const PgmImage pgm = encode_pgm(temporal_profile(X, line, orient));
      write_file_atomic(adir / ("profile_" + name + ".pgm"), pgm.bytes);
      write_file_atomic(adir / ("profile_" + name + ".txt"), "min=" + num(pgm.lo) + "\nmax=" + num(pgm.hi) +
                                                                 "\nline=" + std::to_string(line) +
                                                                 "\norientation=" + orient_id + "\n");
    };
    write_profile("truth", truth);

    for (Algorithm a : algs) {
      const fs::path rdir = recon_dir(out, a, apf);
      require(rdir / "image", "run recon " + algorithm_id(a) + " first");
      const CasoratiImage X = read_casorati(rdir / "image");
      table += algorithm_id(a) + "," + std::to_string(apf) + "," + num(mse_roi(X, truth, mask)) + "\n";
      header.push_back(algorithm_id(a));
      columns.push_back(roi_time_profile(X, mask));
      write_profile(algorithm_id(a), X);

      if (a == Algorithm::manifold) {
        const ReMatrix L = read_real(rdir / "L");
        for (long long row : cfg.get_int_list("analysis.rows")) {
          if (row < 0 || row >= L.rows()) throw ArgumentError("config: analysis.rows entry out of range");
          write_file_atomic(adir / ("laplacian_row" + std::to_string(row) + ".csv"),
                            row_report_csv(laplacian_row_report(L, static_cast<Index>(row), threshold)));
        }
        if (cfg.get("phantom.scene") == "speech") {
          const double align = phase_alignment(L, static_cast<Index>(cfg.get_int("phantom.period")), 2, 0.8, threshold);
          write_file_atomic(adir / "laplacian_alignment.txt", "phase_alignment=" + num(align) + "\n");
        }
      }
    }
    write_file_atomic(adir / "roi_profile.csv", series_csv(header, columns));
  }
  write_file_atomic(dir / "mse.csv", table);
}

} // namespace smr
