#include "smr/io.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

extern char** environ;

namespace smr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string t;
  while (std::getline(ss, t, sep)) out.push_back(trim(t));
  return out;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

const char* dtype_name(DType t) { return t == DType::complex64 ? "complex64" : "float32"; }

long long parse_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ArgumentError("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

} // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Index ArrayFile::elements() const { return dims.empty() ? 0 : shape_product(dims); }

void ArrayFile::validate() const {
  if (dims.empty()) throw ShapeError("ArrayFile: no dims");
  for (Index d : dims) {
    if (d < 1) throw ShapeError("ArrayFile: dims must be positive");
  }
  const Index per = dtype == DType::complex64 ? 2 : 1;
  if (static_cast<Index>(values.size()) != elements() * per) throw ShapeError("ArrayFile: value count differs from dims");
  for (float v : values) {
    if (!std::isfinite(v)) throw ArgumentError("ArrayFile: non-finite value");
  }
}

ArrayFile ArrayFile::from_complex(const ComplexArray& a) {
  ArrayFile f;
  f.dims = a.shape;
  f.dtype = DType::complex64;
  f.values.resize(static_cast<size_t>(2 * a.data.size()));
  for (Index i = 0; i < a.data.size(); ++i) {
    f.values[static_cast<size_t>(2 * i)] = static_cast<float>(a.data(i).real());
    f.values[static_cast<size_t>(2 * i + 1)] = static_cast<float>(a.data(i).imag());
  }
  f.validate();
  return f;
}

ArrayFile ArrayFile::from_real(std::vector<Index> dims, const ReVector& v) {
  ArrayFile f;
  f.dims = std::move(dims);
  f.dtype = DType::float32;
  f.values.resize(static_cast<size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) f.values[static_cast<size_t>(i)] = static_cast<float>(v(i));
  f.validate();
  return f;
}

ComplexArray ArrayFile::to_complex() const {
  validate();
  CxVector v(elements());
  if (dtype == DType::complex64) {
    for (Index i = 0; i < v.size(); ++i) {
      v(i) = cx(values[static_cast<size_t>(2 * i)], values[static_cast<size_t>(2 * i + 1)]);
    }
  } else {
    for (Index i = 0; i < v.size(); ++i) v(i) = cx(values[static_cast<size_t>(i)], 0.0);
  }
  return ComplexArray(dims, std::move(v));
}

ReVector ArrayFile::to_real() const {
  validate();
  if (dtype != DType::float32) throw ArgumentError("ArrayFile: not a float32 array");
  ReVector v(elements());
  for (Index i = 0; i < v.size(); ++i) v(i) = values[static_cast<size_t>(i)];
  return v;
}

fs::path header_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".hdr";
  return p;
}

fs::path raw_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".raw";
  return p;
}

std::string array_header(const ArrayFile& a) {
  std::string s = "dims:";
  for (Index d : a.dims) s += " " + std::to_string(d);
  s += "\ndtype: ";
  s += dtype_name(a.dtype);
  s += "\norder: first-fastest\n";
  return s;
}

void write_array(const fs::path& stem, const ArrayFile& a) {
  a.validate();
  std::string raw(a.values.size() * sizeof(float), '\0');
  for (size_t i = 0; i < a.values.size(); ++i) {
    const std::uint32_t w = to_le(std::bit_cast<std::uint32_t>(a.values[i]));
    std::memcpy(raw.data() + i * sizeof(float), &w, sizeof(w));
  }
  write_file_atomic(raw_path(stem), raw);
  write_file_atomic(header_path(stem), array_header(a));
}

ArrayFile read_array(const fs::path& stem) {
  const std::string hdr = read_file(header_path(stem));
  ArrayFile a;
  bool have_dims = false, have_dtype = false, have_order = false;
  std::istringstream is(hdr);
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw IoError("array header: malformed line '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, colon));
    const std::string val = trim(std::string_view(line).substr(colon + 1));
    if (key == "dims") {
      std::istringstream ds(val);
      std::string tok;
      while (ds >> tok) {
        try {
          a.dims.push_back(static_cast<Index>(parse_ll("dims", tok)));
        } catch (const ArgumentError&) {
          throw IoError("array header: bad dimension '" + tok + "'");
        }
      }
      have_dims = true;
    } else if (key == "dtype") {
      if (val == "complex64") {
        a.dtype = DType::complex64;
      } else if (val == "float32") {
        a.dtype = DType::float32;
      } else {
        throw IoError("array header: unknown dtype '" + val + "'");
      }
      have_dtype = true;
    } else if (key == "order") {
      if (val != "first-fastest") throw IoError("array header: unsupported order '" + val + "'");
      have_order = true;
    } else {
      throw IoError("array header: unknown field '" + key + "'");
    }
  }
  if (!have_dims || !have_dtype || !have_order) throw IoError("array header: missing field in " + header_path(stem).string());
  const std::string raw = read_file(raw_path(stem));
  const Index per = a.dtype == DType::complex64 ? 2 : 1;
  if (a.dims.empty()) throw IoError("array header: no dims");
  const auto count = static_cast<size_t>(shape_product(a.dims) * per);
  if (raw.size() != count * sizeof(float)) throw IoError("array data: byte length differs from header");
  a.values.resize(count);
  for (size_t i = 0; i < count; ++i) {
    std::uint32_t w = 0;
    std::memcpy(&w, raw.data() + i * sizeof(float), sizeof(w));
    a.values[i] = std::bit_cast<float>(to_le(w));
  }
  try {
    a.validate();
  } catch (const std::exception& e) {
    throw IoError(std::string("array data: ") + e.what());
  }
  return a;
}

// ---------------------------------------------------------------------------

RunConfig::RunConfig() {
  entries_ = {
      {"run.seed", {"7", "seed for measurement noise and random motion"}},
      {"run.threads", {"0", "worker threads; 0 keeps the OpenMP default"}},

      {"phantom.rows", {"64", "image rows"}},
      {"phantom.cols", {"64", "image columns"}},
      {"phantom.frames", {"200", "frames; overridden per run when acq.total_arms is set"}},
      {"phantom.scene", {"speech", "speech | two_cluster | static | random"}},
      {"phantom.period", {"20", "motion period in frames (speech scene)"}},
      {"phantom.bandwidth", {"0.05", "highest motion frequency in cycles/frame (random scene)"}},

      {"traj.design_arms", {"27", "interleaves the variable-density spiral is designed for"}},
      {"traj.samples", {"335", "samples per readout"}},
      {"traj.resolution_cm", {"0.24", "pixel size; k_max = 1/(2 resolution)"}},
      {"traj.increment_deg", {"222.379", "rotation between successive arms"}},
      {"traj.slices", {"1", "slices sharing each frame's angles"}},

      {"acq.arms_per_frame", {"3", "arms per frame; a comma list runs a sweep"}},
      {"acq.total_arms", {"0", "if > 0, frames = total_arms / arms_per_frame"}},
      {"acq.coils", {"8", "receive coils"}},
      {"acq.snr_db", {"30", "signal-to-noise ratio in dB, or 'off'"}},
      {"acq.inverse_crime", {"false", "simulate on the reconstruction grid"}},

      {"recon.q", {"18", "navigator: percent of leading samples per readout"}},
      {"recon.delta2", {"4.5", "Gaussian kernel width"}},
      {"recon.lambda", {"0.2", "manifold weight"}},
      {"recon.lambda_nav", {"-1", "navigator-solve weight; negative reuses recon.lambda"}},
      {"recon.r", {"30", "eigenvectors kept"}},
      {"recon.outer_iters", {"5", "navigator Laplacian iterations"}},
      {"recon.nav_grid", {"32", "navigator grid size (square)"}},
      {"recon.distance_scale", {"nearest_neighbour", "nearest_neighbour | all_pairs"}},
      {"recon.scale_floor", {"0.001", "energy floor of the nearest-neighbour distance scale"}},
      {"recon.cg_tol", {"1e-5", "coefficient solve tolerance"}},
      {"recon.cg_iters", {"60", "coefficient solve iteration cap"}},
      {"recon.nav_cg_tol", {"1e-4", "navigator solve tolerance"}},
      {"recon.nav_cg_iters", {"30", "navigator solve iteration cap"}},
      {"recon.view_window", {"27", "view-sharing window in arms"}},
      {"recon.view_step", {"0", "view-sharing step in arms; 0 uses arms_per_frame"}},
      {"recon.lambda_lr", {"0.3", "nuclear-norm weight, relative to ||A^H A||"}},
      {"recon.lambda_t", {"0.003", "TFD weight, relative to ||A^H A||"}},
      {"recon.lambda_xd", {"0.003", "XD-sort TFD weight, relative to ||A^H A||"}},
      {"recon.lr_iters", {"40", "low-rank proximal iterations"}},
      {"recon.tfd_outer", {"30", "TFD splitting iterations"}},
      {"recon.tfd_inner", {"6", "TFD inner Krylov iterations"}},
      {"recon.tfd_tau", {"0.05", "TFD shrinkage threshold; coupling weight is lambda_t ||A^H A|| / tau"}},

      {"analysis.algorithms", {"manifold,viewshare,lowrank,tfd,xdsort", "reconstructions to evaluate"}},
      {"analysis.mask_frac", {"0.2", "moving-edge mask: temporal-std fraction of its maximum"}},
      {"analysis.mask_dilate", {"1", "moving-edge mask dilation in pixels"}},
      {"analysis.threshold", {"0.1", "Laplacian row report threshold, fraction of the row maximum"}},
      {"analysis.rows", {"0,50,100", "Laplacian rows to report"}},
      {"analysis.profile_line", {"32", "image row (or column) for the space-time profile"}},
      {"analysis.profile_orientation", {"row", "row | col"}},
  };
}

const RunConfig::Entry& RunConfig::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ArgumentError("config: unknown key '" + key + "'");
  return it->second;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ArgumentError("config: unknown key '" + key + "'");
  it->second.value = value;
}

void RunConfig::parse(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line " + std::to_string(n) + ": expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(n) + ": empty key");
    set(key, trim(std::string_view(body).substr(eq + 1)));
  }
}

void RunConfig::load(const fs::path& path) { parse(read_file(path)); }

void RunConfig::apply_env() {
  std::map<std::string, std::string> env_keys;
  for (const auto& [key, e] : entries_) {
    std::string v = "SMR_" + key;
    for (auto& ch : v) ch = ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    env_keys[v] = key;
  }
  for (char** env = environ; env && *env; ++env) {
    const std::string_view kv(*env);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos || kv.substr(0, 4) != "SMR_") continue;
    const std::string name(kv.substr(0, eq));
    const auto it = env_keys.find(name);
    if (it == env_keys.end()) throw ArgumentError("environment: unknown override '" + name + "'");
    set(it->second, std::string(kv.substr(eq + 1)));
  }
}

const std::string& RunConfig::get(const std::string& key) const { return entry(key).value; }

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "off" || v == "inf") return std::numeric_limits<double>::infinity();
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || std::isnan(d)) {
    throw ArgumentError("config: " + key + " expects a number, got '" + v + "'");
  }
  return d;
}

long long RunConfig::get_int(const std::string& key) const { return parse_ll(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError("config: " + key + " expects true or false, got '" + v + "'");
}

std::vector<long long> RunConfig::get_int_list(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& t : get_list(key)) out.push_back(parse_ll(key, t));
  return out;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  auto parts = split(get(key), ',');
  if (parts.empty() || std::any_of(parts.begin(), parts.end(), [](const std::string& s) { return s.empty(); })) {
    throw ArgumentError("config: " + key + " expects a comma-separated list");
  }
  return parts;
}

std::string RunConfig::dump(bool with_docs) const {
  std::string s;
  for (const auto& [key, e] : entries_) {
    if (with_docs) s += "# " + e.doc + "\n";
    s += key + "=" + e.value + "\n";
  }
  return s;
}

} // namespace smr
