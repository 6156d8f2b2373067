#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flatdd/errors.hpp"
#include "flatdd/signals.hpp"

namespace flatdd {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto cell : split(text, '\n')) {
    if (!cell.empty() && cell.back() == '\r') cell.remove_suffix(1);
    lines.push_back(cell);
  }
  // A terminating LF produces one trailing empty entry.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': not a finite number: '" + std::string(cell) + "'");
  }
  return v;
}

void check_index(std::string_view cell, std::size_t row) {
  long long k = -1;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, k);
  if (ec != std::errc{} || ptr != end || k != static_cast<long long>(row)) {
    throw ParseError("row " + std::to_string(row) + ": expected sample index " +
                     std::to_string(row) + ", got '" + std::string(cell) + "'");
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_trajectory(const IoTrajectory& traj) {
  std::string out = "k,u,y\n";
  const int n_u = traj.u().size();
  for (int k = 0; k < traj.length(); ++k) {
    out += std::to_string(k);
    out += ',';
    if (k < n_u) out += format_double(traj.u()[k]);
    out += ',';
    out += format_double(traj.y()[k]);
    out += '\n';
  }
  return out;
}

IoTrajectory parse_trajectory(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("empty trajectory file");
  if (lines.front() != "k,u,y") {
    throw ParseError("row 0: expected header 'k,u,y', got '" + std::string(lines.front()) + "'");
  }
  if (lines.size() < 2) throw ParseError("trajectory file has a header but no samples");

  std::vector<double> u;
  std::vector<double> y;
  std::size_t missing_y = 0;
  std::optional<std::size_t> first_empty_u;
  for (std::size_t row = 0; row + 1 < lines.size(); ++row) {
    const auto cells = split(lines[row + 1], ',');
    if (cells.size() != 3) {
      throw ParseError("row " + std::to_string(row) + ": expected 3 cells, got " +
                       std::to_string(cells.size()));
    }
    check_index(cells[0], row);
    if (cells[1].empty()) {
      if (!first_empty_u) first_empty_u = row;
    } else {
      if (first_empty_u) {
        throw FormatError("row " + std::to_string(row) +
                          ": input sample after an empty input cell; only the last n rows may "
                          "omit u");
      }
      u.push_back(parse_number(cells[1], row, "u"));
    }
    if (cells[2].empty()) {
      ++missing_y;
    } else {
      y.push_back(parse_number(cells[2], row, "y"));
    }
  }
  const int order = static_cast<int>(y.size()) - static_cast<int>(u.size());
  if (missing_y > 0 || order < 1 || u.empty()) {
    throw FormatError("length(y) = " + std::to_string(y.size()) + " must equal length(u) + n with " +
                      "n >= 1 and length(u) >= 1 (length(u) = " + std::to_string(u.size()) +
                      ", empty y cells = " + std::to_string(missing_y) + ")");
  }
  return IoTrajectory(Signal(u), Signal(y), order);
}

void write_trajectory(const std::filesystem::path& path, const IoTrajectory& traj) {
  dump(path, format_trajectory(traj));
}

IoTrajectory read_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(slurp(path));
}

void write_series(const std::filesystem::path& path, const std::string& column, const Signal& s) {
  if (s.dim() != 1) throw DimensionError("series output requires a scalar signal");
  std::string out = "k," + column + "\n";
  for (int k = 0; k < s.size(); ++k) {
    out += std::to_string(k) + "," + format_double(s[k]) + "\n";
  }
  dump(path, out);
}

Signal read_series(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("empty series file '" + path.string() + "'");
  const auto header = split(lines.front(), ',');
  if (header.size() != 2 || header[0] != "k") {
    throw ParseError("row 0: expected header 'k,<name>', got '" + std::string(lines.front()) + "'");
  }
  std::vector<double> v;
  for (std::size_t row = 0; row + 1 < lines.size(); ++row) {
    const auto cells = split(lines[row + 1], ',');
    if (cells.size() != 2) {
      throw ParseError("row " + std::to_string(row) + ": expected 2 cells, got " +
                       std::to_string(cells.size()));
    }
    check_index(cells[0], row);
    v.push_back(parse_number(cells[1], row, header[1]));
  }
  if (v.empty()) throw ParseError("series file '" + path.string() + "' has no samples");
  return Signal(v);
}

}  // namespace flatdd
