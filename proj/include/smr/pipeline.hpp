#pragma once

// File-based pipeline stages behind the command-line tool. Every stage reads
// its inputs from and writes its outputs below one output directory.

#include <string>
#include <vector>

#include "smr/baselines.hpp"
#include "smr/io.hpp"
#include "smr/manifold.hpp"
#include "smr/phantom.hpp"

namespace smr {

enum class Algorithm { manifold, viewshare, lowrank, tfd, xdsort };

Algorithm parse_algorithm(const std::string& id);
std::string algorithm_id(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

/// Frames obtained by binning `total_arms` interleaves `arms_per_frame` at a
/// time. Throws ArgumentError unless the division is exact.
Index frames_for_interleaves(Index total_arms, Index arms_per_frame);

PhantomSpec phantom_from_config(const RunConfig& cfg, Index n_frames);
SpiralArm arm_from_config(const RunConfig& cfg);
Trajectory trajectory_from_config(const RunConfig& cfg, Index arms_per_frame, Index n_frames);
AcquisitionSpec acquisition_from_config(const RunConfig& cfg, Index arms_per_frame);
ManifoldParams manifold_from_config(const RunConfig& cfg);
BaselineParams baseline_from_config(const RunConfig& cfg);
/// Frame count of a run at `arms_per_frame`.
Index run_frames(const RunConfig& cfg, Index arms_per_frame);

// Output layout below the output directory.
fs::path phantom_dir(const fs::path& out);
fs::path sim_dir(const fs::path& out, Index arms_per_frame);
fs::path recon_dir(const fs::path& out, Algorithm a, Index arms_per_frame);
fs::path analysis_dir(const fs::path& out);

/// Loaded simulation of one arms-per-frame setting.
struct SimulationFiles {
  KtData data;
  CasoratiImage truth;
  CoilMaps maps;
};
SimulationFiles load_simulation(const RunConfig& cfg, const fs::path& out, Index arms_per_frame);

void write_casorati(const fs::path& stem, const CasoratiImage& X);
CasoratiImage read_casorati(const fs::path& stem);

/// Ground-truth series and the echoed configuration.
void cmd_phantom(const RunConfig& cfg, const fs::path& out);
/// Trajectory CSV for every arms-per-frame setting.
void cmd_traj(const RunConfig& cfg, const fs::path& out);
/// k-t data, coil maps, truth and trajectory per arms-per-frame setting.
void cmd_simulate(const RunConfig& cfg, const fs::path& out);
/// Reconstruction image, parameter log with objective trace and wall time.
void cmd_recon(Algorithm algorithm, const RunConfig& cfg, const fs::path& out);
/// MSE table, ROI profiles, Laplacian row reports and space-time profiles.
void cmd_analyze(const RunConfig& cfg, const fs::path& out);

} // namespace smr
