#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace aqml::csv {

inline constexpr const char* kSchemaLine = "# aqml-csv v1";

/// 17 significant digits, so doubles round-trip exactly.
std::string format(double v);
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(long v) { return std::to_string(v); }
inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(unsigned long v) { return std::to_string(v); }
inline std::string format(unsigned long long v) { return std::to_string(v); }
inline std::string format(bool v) { return v ? "1" : "0"; }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

/// In-memory table written as: schema line, optional "# key=value" comment
/// lines, header, rows.
struct Table {
  std::string name;  // file stem
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Table() = default;
  Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}

  template <typename... Ts>
  void add(const Ts&... cells) {
    rows.push_back({format(cells)...});
  }
  void write(std::ostream& out) const;
  /// Writes <dir>/<name>.csv, creating the directory.
  std::string write_to(const std::string& dir) const;
};

/// Byte comparison of two files; false if either is missing.
bool identical_files(const std::string& a, const std::string& b);

}  // namespace aqml::csv
