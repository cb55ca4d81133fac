#include "fpca/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& tok, double& out) {
  const std::string t = trim(tok);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path,
                                           bool allow_header) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto toks = split_line(line);
    std::vector<double> row;
    row.reserve(toks.size());
    bool ok = true;
    for (const auto& tok : toks) {
      double v = 0.0;
      if (!parse_double(tok, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (allow_header && first_content_line) {
        first_content_line = false;
        continue;  // header row
      }
      throw CsvError(path.string() + ": line " + std::to_string(lineno) +
                     " has a missing or non-numeric cell");
    }
    first_content_line = false;
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw CsvError(path.string() + ": line " + std::to_string(lineno) +
                       " contains a non-finite value");
      }
    }
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw CsvError(path.string() + ": line " + std::to_string(lineno) +
                     " has " + std::to_string(row.size()) + " cells, expected " +
                     std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path.string() + ": no data rows");
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Panel read_panel_csv(const std::filesystem::path& path) {
  return Panel{rows_to_matrix(read_rows(path, /*allow_header=*/true))};
}

void write_panel_csv(const std::filesystem::path& path, const Panel& p, bool header) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path.string());
  if (header) {
    for (Eigen::Index j = 0; j < p.n_len(); ++j) {
      if (j > 0) out << ',';
      out << 's' << (j + 1);
    }
    out << '\n';
  }
  for (Eigen::Index t = 0; t < p.t_len(); ++t) {
    for (Eigen::Index j = 0; j < p.n_len(); ++j) {
      if (j > 0) out << ',';
      out << format_double(p.data(t, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  return rows_to_matrix(read_rows(path, /*allow_header=*/false));
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace fpca
