#include "gibbsmf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

namespace {

constexpr const char* kFullyKnownPrefix = "fully-known:";

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what,
                       const std::string& remedy) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what + " (" + remedy + ")");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

bool parse_size(const std::string& s, std::size_t& out) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  const auto r = std::from_chars(first, last, out);
  return r.ec == std::errc() && r.ptr == last;
}

bool parse_real(const std::string& s, double& out) {
  const char* begin = s.data();
  if (!s.empty() && s[0] == '+') ++begin;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(begin, end, out);
  return r.ec == std::errc() && r.ptr == end;
}

/// Line reader that tracks line numbers and skips comments after the header.
class MarketReader {
 public:
  explicit MarketReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) fail(path, 0, "cannot open file", "check the path and permissions");
  }

  MarketLayout read_header() {
    std::string line;
    if (!std::getline(in_, line)) fail(path_, 1, "empty file", "expected a %%MatrixMarket header");
    line_ = 1;
    const auto t = tokens(line);
    if (t.size() != 5 || t[0] != "%%MatrixMarket" || lower(t[1]) != "matrix") {
      fail(path_, 1, "malformed header '" + line + "'",
           "expected '%%MatrixMarket matrix coordinate real general' or '... array real general'");
    }
    const std::string layout = lower(t[2]);
    const std::string field = lower(t[3]);
    const std::string symmetry = lower(t[4]);
    if ((layout != "coordinate" && layout != "array") ||
        (field != "real" && field != "integer" && field != "double") || symmetry != "general") {
      fail(path_, 1, "unsupported header '" + line + "'",
           "only real general coordinate or array matrices are supported");
    }
    return layout == "coordinate" ? MarketLayout::Coordinate : MarketLayout::Array;
  }

  /// Next non-comment, non-blank line split into tokens; false at EOF.
  bool next(std::vector<std::string>& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      out = tokens(line);
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

struct Coordinate {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Triplet> entries;
};

Coordinate read_coordinate_body(MarketReader& r) {
  std::vector<std::string> t;
  if (!r.next(t)) fail(r.path(), r.line(), "missing size line", "expected 'rows cols entries'");
  Coordinate c;
  std::size_t declared = 0;
  if (t.size() != 3 || !parse_size(t[0], c.rows) || !parse_size(t[1], c.cols) ||
      !parse_size(t[2], declared)) {
    fail(r.path(), r.line(), "malformed size line", "expected 'rows cols entries'");
  }
  c.entries.reserve(declared);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(declared);
  while (r.next(t)) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (t.size() != 3 || !parse_size(t[0], i) || !parse_size(t[1], j) || !parse_real(t[2], v)) {
      fail(r.path(), r.line(), "malformed entry", "expected 'row col value' with 1-based indices");
    }
    if (i < 1 || i > c.rows || j < 1 || j > c.cols) {
      fail(r.path(), r.line(), "index (" + t[0] + "," + t[1] + ") out of bounds",
           "indices are 1-based and must lie within " + std::to_string(c.rows) + "x" +
               std::to_string(c.cols));
    }
    if (!std::isfinite(v)) fail(r.path(), r.line(), "non-finite value", "values must be finite");
    const std::uint64_t key = (static_cast<std::uint64_t>(i - 1) << 32) | (j - 1);
    if (!seen.insert(key).second) {
      fail(r.path(), r.line(), "duplicate entry (" + t[0] + "," + t[1] + ")",
           "each cell may appear once; merge duplicates before loading");
    }
    if (c.entries.size() == declared) {
      fail(r.path(), r.line(), "more entries than the declared " + std::to_string(declared),
           "fix the entry count on the size line");
    }
    c.entries.push_back({i - 1, j - 1, v});
  }
  if (c.entries.size() != declared) {
    fail(r.path(), r.line(),
         "found " + std::to_string(c.entries.size()) + " entries, header declares " +
             std::to_string(declared),
         "fix the entry count on the size line");
  }
  return c;
}

DenseMatrix read_array_body(MarketReader& r) {
  std::vector<std::string> t;
  if (!r.next(t)) fail(r.path(), r.line(), "missing size line", "expected 'rows cols'");
  std::size_t rows = 0, cols = 0;
  if (t.size() != 2 || !parse_size(t[0], rows) || !parse_size(t[1], cols)) {
    fail(r.path(), r.line(), "malformed size line", "expected 'rows cols' for an array file");
  }
  std::vector<double> row_major(rows * cols);
  std::size_t n = 0;
  while (r.next(t)) {
    for (const auto& tok : t) {
      double v = 0.0;
      if (!parse_real(tok, v) || !std::isfinite(v)) {
        fail(r.path(), r.line(), "malformed value '" + tok + "'", "values must be finite reals");
      }
      if (n == rows * cols) {
        fail(r.path(), r.line(), "more values than " + std::to_string(rows * cols),
             "array files hold exactly rows*cols values");
      }
      // column-major on disk
      row_major[(n % rows) * cols + n / rows] = v;
      ++n;
    }
  }
  if (n != rows * cols) {
    fail(r.path(), r.line(),
         "found " + std::to_string(n) + " values, expected " + std::to_string(rows * cols),
         "array files hold exactly rows*cols values in column-major order");
  }
  return DenseMatrix(rows, cols, std::move(row_major));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing (check the directory exists)");
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MarketLayout peek_matrix_market(const std::string& path) {
  MarketReader r(path);
  return r.read_header();
}

DataMatrix read_matrix_market(const std::string& path, MatrixKind kind) {
  MarketReader r(path);
  const MarketLayout layout = r.read_header();
  if (kind == MatrixKind::Dense) {
    if (layout != MarketLayout::Array) {
      fail(path, 1, "expected an array file for a dense matrix",
           "write the matrix in '%%MatrixMarket matrix array real general' format");
    }
    return DataMatrix::from_dense(read_array_body(r));
  }
  if (layout != MarketLayout::Coordinate) {
    fail(path, 1, "expected a coordinate file for a sparse matrix",
         "write the matrix in '%%MatrixMarket matrix coordinate real general' format");
  }
  auto c = read_coordinate_body(r);
  auto sp = SparseMatrix::from_triplets(c.rows, c.cols, std::move(c.entries));
  return kind == MatrixKind::SparseObserved ? DataMatrix::observed(std::move(sp))
                                            : DataMatrix::fully_known(std::move(sp));
}

DataMatrix read_matrix_market_auto(const std::string& spec) {
  const std::string prefix = kFullyKnownPrefix;
  if (spec.rfind(prefix, 0) == 0) {
    return read_matrix_market(spec.substr(prefix.size()), MatrixKind::SparseFullyKnown);
  }
  const auto layout = peek_matrix_market(spec);
  return read_matrix_market(spec, layout == MarketLayout::Coordinate ? MatrixKind::SparseObserved
                                                                     : MatrixKind::Dense);
}

SideInfo read_side_info(const std::string& path) {
  const auto layout = peek_matrix_market(path);
  if (layout == MarketLayout::Array) {
    return SideInfo(read_matrix_market(path, MatrixKind::Dense).as_dense());
  }
  return SideInfo(read_matrix_market(path, MatrixKind::SparseFullyKnown).as_sparse());
}

TestSet read_test_set(const std::string& path) {
  MarketReader r(path);
  if (r.read_header() != MarketLayout::Coordinate) {
    fail(path, 1, "test set must be a coordinate file", "list held-out cells as 'row col value'");
  }
  auto c = read_coordinate_body(r);
  return TestSet{std::move(c.entries)};
}

Matrix read_array(const std::string& path) {
  const auto d = read_matrix_market(path, MatrixKind::Dense).as_dense();
  Matrix m(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d(i, j);
  return m;
}

void write_coordinate(std::ostream& out, std::size_t rows, std::size_t cols,
                      const std::vector<Triplet>& entries) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows << ' ' << cols << ' ' << entries.size() << '\n';
  for (const auto& t : entries) {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << format_real(t.value) << '\n';
  }
}

void write_coordinate(const std::string& path, const SparseMatrix& m) {
  auto out = open_out(path);
  write_coordinate(out, m.rows(), m.cols(), m.triplets());
}

void write_array(std::ostream& out, const Matrix& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out << format_real(m(i, j)) << '\n';
}

void write_array(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  write_array(out, m);
}

void write_array(const std::string& path, const DenseMatrix& m) {
  Matrix e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  write_array(path, e);
}

void write_matrix_market(const std::string& path, const DataMatrix& m) {
  if (m.kind() == MatrixKind::Dense) {
    write_array(path, m.as_dense());
  } else {
    write_coordinate(path, m.as_sparse());
  }
}

std::vector<std::pair<std::size_t, std::size_t>> read_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ":0: cannot open queries file (check the path)");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    std::size_t i = 0, j = 0;
    const bool ok = comma != std::string::npos && parse_size(line.substr(0, comma), i) &&
                    parse_size(line.substr(comma + 1), j);
    if (!ok) {
      if (lineno == 1) continue;  // header
      fail(path, lineno, "malformed query '" + line + "'", "expected 'i,j' with 0-based indices");
    }
    out.emplace_back(i, j);
  }
  return out;
}

}  // namespace gibbsmf
