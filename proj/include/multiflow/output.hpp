#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/solver.hpp"
#include "multiflow/text.hpp"

namespace multiflow {

// Text outputs: comma-separated, one header row, numbers at 17 significant
// digits, every line newline-terminated.

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

inline std::string timeseries_header(int n_constituents) {
  std::string h = "t";
  for (int i = 1; i <= n_constituents; ++i) h += ",mass_" + std::to_string(i);
  return h + ",kinetic,potential,dissipation,floor_events\n";
}

inline std::string format_timeseries(const std::vector<StepDiagnostics>& series, int n_constituents) {
  std::string out = timeseries_header(n_constituents);
  for (const auto& d : series) {
    if (static_cast<int>(d.masses.size()) != n_constituents) {
      throw ConfigError("timeseries row has a different number of constituents than the header");
    }
    out += format_double(d.t);
    for (double m : d.masses) out += "," + format_double(m);
    out += "," + format_double(d.kinetic) + "," + format_double(d.potential) + "," +
           format_double(d.dissipation) + "," + std::to_string(d.floor_events) + "\n";
  }
  return out;
}

inline void write_timeseries(const Trajectory& traj, int n_constituents, const std::filesystem::path& path) {
  detail::write_text_file(path, format_timeseries(traj.series, n_constituents));
}

inline std::string format_snapshot(const MixtureState& s) {
  const int nc = s.n_constituents();
  std::string out = "x";
  for (int i = 1; i <= nc; ++i) out += ",rho_" + std::to_string(i);
  for (int i = 1; i <= nc; ++i) out += ",u_" + std::to_string(i);
  out += "\n";
  for (int c = 0; c < s.grid.n_cells; ++c) {
    out += format_double(s.grid.x(c));
    for (int i = 0; i < nc; ++i) out += "," + format_double(s.rho[i][c]);
    for (int i = 0; i < nc; ++i) out += "," + format_double(s.u[i][c]);
    out += "\n";
  }
  return out;
}

inline void write_snapshot(const MixtureState& s, const std::filesystem::path& path) {
  detail::write_text_file(path, format_snapshot(s));
}

/// Parsed comma-separated table: header names and numeric rows.
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline DelimitedTable parse_delimited(const std::string& text) {
  DelimitedTable t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = split_tokens(line, ",");
    if (line_no == 1) {
      for (auto c : cells) t.header.emplace_back(c);
      continue;
    }
    std::vector<double> row;
    for (auto c : cells) {
      const auto v = parse_double(c);
      if (!v) throw InvalidInputError("line " + std::to_string(line_no) + ": '" + std::string(c) + "' is not a number");
      row.push_back(*v);
    }
    if (row.size() != t.header.size()) {
      throw InvalidInputError("line " + std::to_string(line_no) + ": column count differs from header");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline DelimitedTable read_delimited(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_delimited(buf.str());
}

}  // namespace multiflow
