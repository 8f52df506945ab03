#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gibbsmf/data.hpp"
#include "gibbsmf/linalg.hpp"

namespace gibbsmf {

/// Layout declared by a Matrix Market header.
enum class MarketLayout { Coordinate, Array };

/// Reads the header line only. Throws DataError on a malformed header.
MarketLayout peek_matrix_market(const std::string& path);

/// Reads a real general Matrix Market file as the requested kind:
/// coordinate for the sparse kinds, array (column-major) for Dense.
/// Errors name the file, the line and a remedy.
DataMatrix read_matrix_market(const std::string& path, MatrixKind kind);

/// Coordinate -> SparseObserved, array -> Dense. A `fully-known:` prefix on
/// the path selects SparseFullyKnown for a coordinate file.
DataMatrix read_matrix_market_auto(const std::string& spec);

/// Coordinate or array file as side information (sparse or dense features).
SideInfo read_side_info(const std::string& path);

/// Coordinate file whose entries are held-out cells.
TestSet read_test_set(const std::string& path);

/// Array file into an Eigen matrix.
Matrix read_array(const std::string& path);

/// Writers render values with 17 significant digits, so reading back is
/// bit-exact.
void write_coordinate(std::ostream& out, std::size_t rows, std::size_t cols,
                      const std::vector<Triplet>& entries);
void write_coordinate(const std::string& path, const SparseMatrix& m);
void write_array(std::ostream& out, const Matrix& m);
void write_array(const std::string& path, const Matrix& m);
void write_array(const std::string& path, const DenseMatrix& m);
void write_matrix_market(const std::string& path, const DataMatrix& m);

/// "%.17g" rendering shared by every text output that must round-trip.
std::string format_real(double v);

/// Reads `i,j` pairs (0-based), one per line; a non-numeric first line is
/// treated as a header.
std::vector<std::pair<std::size_t, std::size_t>> read_queries(const std::string& path);

}  // namespace gibbsmf
