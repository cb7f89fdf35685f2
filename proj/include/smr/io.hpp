#pragma once

// Portable on-disk artifacts: header + raw float32 arrays, key=value run
// configuration, and atomic file replacement.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smr/numerics.hpp"

namespace smr {

namespace fs = std::filesystem;

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

enum class DType { complex64, float32 };

/// Array stored as `<stem>.hdr` (text) and `<stem>.raw` (little-endian
/// float32, complex as interleaved real/imag, first dimension fastest).
struct ArrayFile {
  std::vector<Index> dims;
  DType dtype = DType::complex64;
  std::vector<float> values; // interleaved for complex64

  [[nodiscard]] Index elements() const;
  void validate() const;

  static ArrayFile from_complex(const ComplexArray& a);
  static ArrayFile from_real(std::vector<Index> dims, const ReVector& v);
  [[nodiscard]] ComplexArray to_complex() const;
  [[nodiscard]] ReVector to_real() const;
};

fs::path header_path(const fs::path& stem);
fs::path raw_path(const fs::path& stem);

/// Header text: "dims: d0 d1 ...\ndtype: complex64|float32\norder: first-fastest\n".
std::string array_header(const ArrayFile& a);
void write_array(const fs::path& stem, const ArrayFile& a);
ArrayFile read_array(const fs::path& stem);

/// Flat key=value configuration. Keys are "section.name"; every accepted key
/// has a documented default, and anything else is rejected.
class RunConfig {
public:
  struct Entry {
    std::string value;
    std::string doc;
  };

  RunConfig();

  /// Merges key=value text; '#' starts a comment. Throws ArgumentError naming
  /// the line or key on malformed input or unknown keys.
  void parse(std::string_view text);
  void load(const fs::path& path);
  /// Applies SMR_<SECTION>_<NAME> variables (upper case, '.' -> '_').
  void apply_env();
  void set(const std::string& key, const std::string& value);

  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] long long get_int(const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& key) const;
  [[nodiscard]] std::vector<long long> get_int_list(const std::string& key) const;
  [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const;

  /// Every key with its current value and documentation, sorted by key.
  [[nodiscard]] std::string dump(bool with_docs = false) const;
  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

private:
  std::map<std::string, Entry> entries_;
  const Entry& entry(const std::string& key) const;
};

} // namespace smr
