#pragma once

// Matrix file I/O in two formats:
//   - whitespace-delimited text: one matrix row per line, columns separated
//     by blanks, dimensions inferred from the layout;
//   - MatrixMarket array format ("%%MatrixMarket matrix array real general",
//     dimension line, then entries in column-major order).
// Readers sniff the format from the first line. Writers pick the format from
// the file extension (".mtx" selects MatrixMarket). All numeric output uses
// 17 significant digits, '.' decimal separator and LF line endings, so equal
// inputs produce byte-identical files.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stgeo/matfunc.hpp"

namespace stgeo::io {

/// A file could not be opened or parsed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest-round-trip style formatting: %.17g.
inline std::string fmt_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline MatrixXd read_matrix_text(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (!ls.eof()) throw IoError("text matrix: non-numeric token in \"" + line + "\"");
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("text matrix: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("text matrix: no data");
  MatrixXd m(static_cast<Index>(rows.size()),
             static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  require_finite(m, "read_matrix");
  return m;
}

inline MatrixXd read_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("MatrixMarket: empty file");
  {
    std::istringstream hs(header);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix" ||
        format != "array" || field != "real" || symmetry != "general")
      throw IoError("MatrixMarket: expected \"matrix array real general\" header");
  }
  std::string line;
  Index rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ds(line);
    if (!(ds >> rows >> cols)) throw IoError("MatrixMarket: bad dimension line");
    break;
  }
  if (rows <= 0 || cols <= 0) throw IoError("MatrixMarket: bad dimensions");
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      if (!(in >> m(i, j))) throw IoError("MatrixMarket: too few entries");
  require_finite(m, "read_matrix");
  return m;
}

/// Reads a matrix, sniffing the format from the first byte ('%' means
/// MatrixMarket).
inline MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  const int first = in.peek();
  if (first == '%') return read_matrix_market(in);
  return read_matrix_text(in);
}

inline void write_matrix_text(std::ostream& out, const MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << fmt_g17(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_market(std::ostream& out, const MatrixXd& m) {
  out << "%%MatrixMarket matrix array real general\n"
      << m.rows() << ' ' << m.cols() << '\n';
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out << fmt_g17(m(i, j)) << '\n';
}

/// Writes a matrix; ".mtx" extension selects MatrixMarket, anything else
/// plain text.
inline void write_matrix(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".mtx")
    write_matrix_market(out, m);
  else
    write_matrix_text(out, m);
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace stgeo::io
