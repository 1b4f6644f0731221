#ifndef SERPENT_CSV_HPP
#define SERPENT_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "serpent/errors.hpp"

namespace serpent {

// Shortest round-trippable decimal form of a double (15, 16 or 17
// significant digits).  Used everywhere a number is written to disk so
// repeated runs produce identical bytes.
inline std::string format_double(double v) {
  for (int prec = 15; prec < 17; ++prec) {
    char s[32];
    std::snprintf(s, sizeof(s), "%.*g", prec, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal CSV emitter: one header, numeric rows, deterministic formatting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header,
            const std::vector<std::string>& metadata = {})
      : out_(path) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
    for (const auto& line : metadata) out_ << "# " << line << "\n";
    out_ << header << "\n";
  }

  void begin_row() { first_ = true; }
  void field(double v) { sep(); out_ << format_double(v); }
  void field(int v) { sep(); out_ << v; }
  void field(std::int64_t v) { sep(); out_ << v; }
  void field(const std::string& v) { sep(); out_ << v; }
  void end_row() { out_ << "\n"; }

  template <class Range>
  void row(const Range& values) {
    begin_row();
    for (double v : values) field(v);
    end_row();
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ofstream out_;
  bool first_ = true;
};

// Reads a CSV written by CsvWriter: '#' metadata lines, then a header,
// then numeric rows.
struct CsvTable {
  std::vector<std::string> metadata;
  std::string header;
  std::vector<std::vector<double>> rows;

  static CsvTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        std::size_t start = line.find_first_not_of(" \t", 1);
        table.metadata.push_back(start == std::string::npos
                                     ? std::string()
                                     : line.substr(start));
        continue;
      }
      if (!have_header) {
        table.header = line;
        have_header = true;
        continue;
      }
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ','))
        row.push_back(std::strtod(cell.c_str(), nullptr));
      table.rows.push_back(std::move(row));
    }
    return table;
  }
};

}  // namespace serpent

#endif  // SERPENT_CSV_HPP
