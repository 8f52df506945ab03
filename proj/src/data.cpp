#include "gibbsmf/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

namespace {

std::string cell(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  if (rows > std::numeric_limits<Index>::max() || cols > std::numeric_limits<Index>::max()) {
    throw DataError("matrix dimensions exceed 32-bit index range");
  }
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw DataError("entry " + cell(t.row, t.col) + " outside " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " matrix");
    }
  }
  // stable so the error below names the first duplicate in input order
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t n = 1; n < entries.size(); ++n) {
    if (entries[n].row == entries[n - 1].row && entries[n].col == entries[n - 1].col) {
      throw DataError("duplicate entry " + cell(entries[n].row, entries[n].col));
    }
  }

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  const std::size_t nnz = entries.size();

  m.row_ptr_.assign(rows + 1, 0);
  m.row_idx_.resize(nnz);
  m.row_val_.resize(nnz);
  for (const auto& t : entries) ++m.row_ptr_[t.row + 1];
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  for (std::size_t n = 0; n < nnz; ++n) {
    m.row_idx_[n] = static_cast<Index>(entries[n].col);
    m.row_val_[n] = entries[n].value;
  }

  // counting sort into columns; row-major input keeps rows ascending per column
  m.col_ptr_.assign(cols + 1, 0);
  m.col_idx_.resize(nnz);
  m.col_val_.resize(nnz);
  for (const auto& t : entries) ++m.col_ptr_[t.col + 1];
  for (std::size_t j = 0; j < cols; ++j) m.col_ptr_[j + 1] += m.col_ptr_[j];
  std::vector<std::size_t> fill(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (const auto& t : entries) {
    const std::size_t at = fill[t.col]++;
    m.col_idx_[at] = static_cast<Index>(t.row);
    m.col_val_[at] = t.value;
  }
  return m;
}

SparseLine SparseMatrix::row(std::size_t i) const {
  if (i >= rows_) {
    throw std::out_of_range("row " + std::to_string(i) + " out of range for " +
                            std::to_string(rows_) + " rows");
  }
  const std::size_t b = row_ptr_[i], e = row_ptr_[i + 1];
  return {std::span<const Index>(row_idx_).subspan(b, e - b),
          std::span<const double>(row_val_).subspan(b, e - b)};
}

SparseLine SparseMatrix::col(std::size_t j) const {
  if (j >= cols_) {
    throw std::out_of_range("column " + std::to_string(j) + " out of range for " +
                            std::to_string(cols_) + " columns");
  }
  const std::size_t b = col_ptr_[j], e = col_ptr_[j + 1];
  return {std::span<const Index>(col_idx_).subspan(b, e - b),
          std::span<const double>(col_val_).subspan(b, e - b)};
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.rows_ = cols_;
  t.cols_ = rows_;
  t.row_ptr_ = col_ptr_;
  t.row_idx_ = col_idx_;
  t.row_val_ = col_val_;
  t.col_ptr_ = row_ptr_;
  t.col_idx_ = row_idx_;
  t.col_val_ = row_val_;
  return t;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t n = row_ptr_[i]; n < row_ptr_[i + 1]; ++n) {
      out.push_back({i, row_idx_[n], row_val_[n]});
    }
  }
  return out;
}

double SparseMatrix::value_or_zero(std::size_t i, std::size_t j) const {
  const auto line = row(i);
  const auto it = std::lower_bound(line.index.begin(), line.index.end(), static_cast<Index>(j));
  if (it == line.index.end() || *it != j) return 0.0;
  return line.value[static_cast<std::size_t>(it - line.index.begin())];
}

bool SparseMatrix::contains(std::size_t i, std::size_t j) const {
  const auto line = row(i);
  return std::binary_search(line.index.begin(), line.index.end(), static_cast<Index>(j));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), values_(std::move(row_major)) {
  if (values_.size() != rows * cols) {
    throw DataError("dense matrix expects " + std::to_string(rows * cols) + " values, got " +
                    std::to_string(values_.size()));
  }
  for (std::size_t n = 0; n < values_.size(); ++n) {
    if (!std::isfinite(values_[n])) {
      throw DataError("non-finite value at " + cell(n / cols, n % cols));
    }
  }
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

const char* to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::SparseObserved: return "observed";
    case MatrixKind::SparseFullyKnown: return "fully-known";
    case MatrixKind::Dense: return "dense";
  }
  return "?";
}

DataMatrix DataMatrix::observed(SparseMatrix m) {
  DataMatrix d;
  d.kind_ = MatrixKind::SparseObserved;
  d.storage_ = std::move(m);
  return d;
}

DataMatrix DataMatrix::fully_known(SparseMatrix m) {
  DataMatrix d;
  d.kind_ = MatrixKind::SparseFullyKnown;
  d.storage_ = std::move(m);
  return d;
}

DataMatrix DataMatrix::from_dense(DenseMatrix m) {
  DataMatrix d;
  d.kind_ = MatrixKind::Dense;
  d.storage_ = std::move(m);
  return d;
}

std::size_t DataMatrix::rows() const {
  return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

std::size_t DataMatrix::cols() const {
  return std::visit([](const auto& m) { return m.cols(); }, storage_);
}

std::size_t DataMatrix::likelihood_cells() const {
  if (kind_ == MatrixKind::SparseObserved) return as_sparse().nnz();
  return rows() * cols();
}

DataMatrix DataMatrix::transposed() const {
  DataMatrix d;
  d.kind_ = kind_;
  d.storage_ = std::visit([](const auto& m) -> std::variant<SparseMatrix, DenseMatrix> {
    return m.transposed();
  }, storage_);
  return d;
}

void TestSet::validate(std::size_t rows, std::size_t cols) const {
  for (const auto& t : cells) {
    if (t.row >= rows || t.col >= cols) {
      throw DataError("test cell " + cell(t.row, t.col) + " outside training dimensions " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
}

std::size_t TestSet::overlap_count(const DataMatrix& train) const {
  if (train.kind() != MatrixKind::SparseObserved) return 0;
  std::size_t n = 0;
  for (const auto& t : cells) {
    if (train.as_sparse().contains(t.row, t.col)) ++n;
  }
  return n;
}

std::size_t SideInfo::entities() const {
  return std::visit([](const auto& m) { return m.rows(); }, features_);
}

std::size_t SideInfo::features() const {
  return std::visit([](const auto& m) { return m.cols(); }, features_);
}

}  // namespace gibbsmf
