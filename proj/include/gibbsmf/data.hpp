#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace gibbsmf {

using Index = std::uint32_t;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// One row (or one column) of a finalized sparse matrix: parallel arrays of
/// the other-axis indices and values, ascending by index.
struct SparseLine {
  std::span<const Index> index;
  std::span<const double> value;

  std::size_t size() const { return index.size(); }
  bool empty() const { return index.empty(); }
};

/// Finalized sparse matrix with both a compressed-per-row and a
/// compressed-per-column layout, built once. Immutable after construction.
///
/// Whether absent cells are unknown or known zeros is not a property of this
/// type; see MatrixKind.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Throws DataError on out-of-range indices or duplicate (row, col).
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return row_val_.size(); }

  /// Stored entries of row i in ascending column order. Throws on i >= rows().
  SparseLine row(std::size_t i) const;
  /// Stored entries of column j in ascending row order.
  SparseLine col(std::size_t j) const;

  std::size_t row_count(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::size_t col_count(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

  /// Logical transpose; swaps the two layouts, no re-sorting.
  SparseMatrix transposed() const;

  /// Entries in row-major order.
  std::vector<Triplet> triplets() const;

  /// Value at (i, j) or 0 if absent. Binary search within the row.
  double value_or_zero(std::size_t i, std::size_t j) const;
  bool contains(std::size_t i, std::size_t j) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> row_idx_;  // column index per row entry
  std::vector<double> row_val_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<Index> col_idx_;  // row index per column entry
  std::vector<double> col_val_;
};

/// Dense row-major matrix. All values must be finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  DenseMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class MatrixKind {
  SparseObserved,    // absent cells unknown
  SparseFullyKnown,  // absent cells are known zeros
  Dense,
};

const char* to_string(MatrixKind kind);

/// A training matrix together with the semantics of its absent cells.
class DataMatrix {
 public:
  DataMatrix() = default;
  static DataMatrix observed(SparseMatrix m);
  static DataMatrix fully_known(SparseMatrix m);
  static DataMatrix from_dense(DenseMatrix m);

  MatrixKind kind() const { return kind_; }
  std::size_t rows() const;
  std::size_t cols() const;
  /// Number of cells entering the likelihood.
  std::size_t likelihood_cells() const;

  const SparseMatrix& as_sparse() const { return std::get<SparseMatrix>(storage_); }
  const DenseMatrix& as_dense() const { return std::get<DenseMatrix>(storage_); }

  DataMatrix transposed() const;

 private:
  MatrixKind kind_ = MatrixKind::SparseObserved;
  std::variant<SparseMatrix, DenseMatrix> storage_;
};

/// Held-out cells with known values.
struct TestSet {
  std::vector<Triplet> cells;

  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }

  /// Throws DataError when a cell lies outside rows x cols.
  void validate(std::size_t rows, std::size_t cols) const;
  /// Number of test cells that are also stored training entries.
  std::size_t overlap_count(const DataMatrix& train) const;
};

/// Per-entity features for one mode: entities x D, dense or sparse.
class SideInfo {
 public:
  SideInfo() = default;
  explicit SideInfo(DenseMatrix features) : features_(std::move(features)) {}
  explicit SideInfo(SparseMatrix features) : features_(std::move(features)) {}

  std::size_t entities() const;
  std::size_t features() const;
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(features_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(features_); }
  const DenseMatrix& dense() const { return std::get<DenseMatrix>(features_); }

 private:
  std::variant<DenseMatrix, SparseMatrix> features_;
};

}  // namespace gibbsmf
