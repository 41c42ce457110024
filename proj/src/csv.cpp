#include "aqml/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>

#include "aqml/error.hpp"

namespace aqml::csv {

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void Table::write(std::ostream& out) const {
  out << kSchemaLine << '\n';
  for (const auto& c : comments) out << "# " << c << '\n';
  for (size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& r : rows) {
    if (r.size() != columns.size()) throw Error("csv", name + ": row width " + std::to_string(r.size()) + " != " +
                                                           std::to_string(columns.size()));
    for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

std::string Table::write_to(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / (name + ".csv")).string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("csv", "cannot open " + path);
  write(f);
  return path;
}

bool identical_files(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

}  // namespace aqml::csv
