#include "smr/pipeline.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>

#include <unistd.h>

using namespace smr;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("smr_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

struct EnvVar {
  std::string name;
  EnvVar(std::string n, const std::string& value) : name(std::move(n)) { ::setenv(name.c_str(), value.c_str(), 1); }
  ~EnvVar() { ::unsetenv(name.c_str()); }
};

RunConfig small_config() {
  RunConfig cfg;
  cfg.parse(R"(
# small end-to-end run
phantom.rows = 32
phantom.cols = 32
phantom.frames = 18
phantom.period = 6
acq.arms_per_frame = 2,3
acq.coils = 2
recon.nav_grid = 16
recon.r = 6
recon.outer_iters = 2
recon.cg_iters = 10
recon.lr_iters = 4
recon.tfd_outer = 3
analysis.rows = 0,5
analysis.profile_line = 16
)");
  return cfg;
}

void run_all(const RunConfig& cfg, const fs::path& out) {
  cmd_phantom(cfg, out);
  cmd_traj(cfg, out);
  cmd_simulate(cfg, out);
  for (Algorithm a : all_algorithms()) cmd_recon(a, cfg, out);
  cmd_analyze(cfg, out);
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

} // namespace

TEST_CASE("array files", "[io]") {
  TempDir tmp("array");
  SECTION("complex round trip is bit-exact") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    CxVector v(3 * 4 * 2);
    for (Index i = 0; i < v.size(); ++i) v(i) = cx(static_cast<float>(g(rng)), static_cast<float>(g(rng)));
    v(0) = cx(-0.0, 1e-40); // signed zero and a float32 subnormal
    const ArrayFile a = ArrayFile::from_complex(ComplexArray({3, 4, 2}, v));
    write_array(tmp.path / "z", a);
    CHECK(read_file(header_path(tmp.path / "z")) == "dims: 3 4 2\ndtype: complex64\norder: first-fastest\n");
    CHECK(fs::file_size(raw_path(tmp.path / "z")) == 3 * 4 * 2 * 8);
    const ArrayFile b = read_array(tmp.path / "z");
    CHECK(b.dims == a.dims);
    CHECK(b.dtype == DType::complex64);
    REQUIRE(b.values.size() == a.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) == 0);
    CHECK(std::signbit(b.to_complex().data(0).real()));
  }
  SECTION("real arrays") {
    ReVector v(5);
    v << 1, -2.5, 0.375, 0, 7;
    write_array(tmp.path / "r", ArrayFile::from_real({5}, v));
    CHECK(fs::file_size(raw_path(tmp.path / "r")) == 20);
    CHECK(read_array(tmp.path / "r").to_real() == v);
  }
  SECTION("bad inputs") {
    ReVector v(2);
    v << 1, std::nan("");
    CHECK_THROWS_AS(write_array(tmp.path / "n", ArrayFile::from_real({2}, v)), ArgumentError);
    CHECK_THROWS_AS(read_array(tmp.path / "missing"), IoError);
    v(1) = 2;
    write_array(tmp.path / "t", ArrayFile::from_real({2}, v));
    fs::resize_file(raw_path(tmp.path / "t"), 4);
    CHECK_THROWS_AS(read_array(tmp.path / "t"), IoError);
    write_file_atomic(header_path(tmp.path / "t"), "dims: 2\ndtype: float64\norder: first-fastest\n");
    CHECK_THROWS_AS(read_array(tmp.path / "t"), IoError);
  }
}

TEST_CASE("run configuration", "[io][config]") {
  RunConfig cfg;
  SECTION("defaults carry the manifold parameters") {
    CHECK(cfg.get("recon.q") == "18");
    CHECK(cfg.get_double("recon.delta2") == 4.5);
    CHECK(cfg.get_double("recon.lambda") == 0.2);
    CHECK(cfg.get_int("recon.r") == 30);
    CHECK(cfg.get_int("recon.view_window") == 27);
    for (const auto& [key, e] : cfg.entries()) CHECK_FALSE(e.doc.empty());
  }
  SECTION("parsing") {
    cfg.parse("# comment\nrecon.r = 12  # trailing\n\nacq.arms_per_frame=2,3,4\nacq.snr_db = off\n");
    CHECK(cfg.get_int("recon.r") == 12);
    CHECK(cfg.get_int_list("acq.arms_per_frame") == std::vector<long long>{2, 3, 4});
    CHECK(std::isinf(cfg.get_double("acq.snr_db")));
    try {
      cfg.parse("recon.bogus = 1\n");
      FAIL("unknown key accepted");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("recon.bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(cfg.parse("recon.r 12\n"), ArgumentError);
    CHECK_THROWS_AS(cfg.get_int("recon.delta2"), ArgumentError);
  }
  SECTION("environment overrides") {
    EnvVar v("SMR_RECON_R", "7");
    cfg.apply_env();
    CHECK(cfg.get_int("recon.r") == 7);
    EnvVar bad("SMR_RECON_NOPE", "1");
    CHECK_THROWS_AS(cfg.apply_env(), ArgumentError);
  }
  SECTION("dump lists every key") {
    const auto out = lines(cfg.dump());
    CHECK(out.size() == cfg.entries().size());
    RunConfig again;
    again.parse(cfg.dump(true));
    CHECK(again.dump() == cfg.dump());
  }
}

TEST_CASE("frame binning", "[pipeline]") {
  CHECK(frames_for_interleaves(2700, 3) == 900);
  CHECK(frames_for_interleaves(2700, 27) == 100);
  CHECK_THROWS_AS(frames_for_interleaves(100, 3), ArgumentError);
  RunConfig cfg;
  CHECK(run_frames(cfg, 3) == 200);
  cfg.set("acq.total_arms", "2700");
  CHECK(run_frames(cfg, 3) == 900);
  CHECK(run_frames(cfg, 4) == 675);
  CHECK(parse_algorithm("xdsort") == Algorithm::xdsort);
  CHECK_THROWS_AS(parse_algorithm("sense"), ArgumentError);
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(algorithm_id(a)) == a);
}

TEST_CASE("phantom command", "[pipeline]") {
  TempDir tmp("phantom");
  const RunConfig cfg;
  cmd_phantom(cfg, tmp.path);
  const fs::path truth = phantom_dir(tmp.path) / "truth";
  CHECK(lines(read_file(header_path(truth)))[0] == "dims: 64 64 200");
  const ComplexArray a = read_array(truth).to_complex();
  const Index frame = 64 * 64;
  CHECK(a.data.segment(0, frame) == a.data.segment(20 * frame, frame));
  CHECK(a.data.segment(0, frame) != a.data.segment(10 * frame, frame));
  CHECK_THROWS_AS(cmd_simulate(cfg, tmp.path / "empty"), IoError);
}

TEST_CASE("end-to-end pipeline", "[pipeline][slow]") {
  TempDir a("run_a"), b("run_b");
  const RunConfig cfg = small_config();
  run_all(cfg, a.path);
  run_all(cfg, b.path);

  // Every array is reproduced byte for byte.
  {
    Index compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.path)) {
      if (!e.is_regular_file() || e.path().filename() == "log.txt") continue;
      const fs::path twin = b.path / fs::relative(e.path(), a.path);
      REQUIRE(fs::exists(twin));
      CHECK(read_file(e.path()) == read_file(twin));
      ++compared;
    }
    CHECK(compared > 40);
  }
  // Logs.
  {
    const std::string m = read_file(recon_dir(a.path, Algorithm::manifold, 3) / "log.txt");
    for (const char* line : {"q=18\n", "delta2=4.5\n", "lambda=0.2\n", "r=6\n", "wall_time_s="}) {
      CHECK(m.find(line) != std::string::npos);
    }
    CHECK(read_file(recon_dir(a.path, Algorithm::viewshare, 2) / "log.txt").find("window=27\n") != std::string::npos);
    CHECK(read_file(recon_dir(a.path, Algorithm::lowrank, 2) / "log.txt").find("objective=") != std::string::npos);
  }
  // MSE table has one row per algorithm and arms setting.
  {
    const auto rows = lines(read_file(analysis_dir(a.path) / "mse.csv"));
    REQUIRE(rows.size() == 1 + 2 * all_algorithms().size());
    CHECK(rows[0] == "algorithm,arms_per_frame,mse");
    CHECK(fs::exists(analysis_dir(a.path) / "apf3" / "laplacian_row5.csv"));
    CHECK(fs::exists(analysis_dir(a.path) / "apf2" / "profile_tfd.pgm"));
  }
  // A reconstruction equal to the truth scores zero.
  {
    RunConfig one = cfg;
    one.set("analysis.algorithms", "viewshare");
    one.set("acq.arms_per_frame", "3");
    fs::copy_file(raw_path(sim_dir(a.path, 3) / "truth"), raw_path(recon_dir(a.path, Algorithm::viewshare, 3) / "image"),
                  fs::copy_options::overwrite_existing);
    cmd_analyze(one, a.path);
    const auto rows = lines(read_file(analysis_dir(a.path) / "mse.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == "viewshare,3,0");
  }
}

TEST_CASE("command-line tool", "[cli]") {
  TempDir tmp("cli");
  const std::string err = (tmp.path / "err.txt").string();
  const std::string cli = SMR_CLI_PATH;
  CHECK(std::system((cli + " config > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " recon bogus --out " + tmp.path.string() + " 2> " + err).c_str()) != 0);
  const auto msg = lines(read_file(err));
  REQUIRE(msg.size() == 1);
  CHECK(msg[0].rfind("smr: ", 0) == 0);
}
