#pragma once

#include <cstdint>
#include <vector>

#include "gibbsmf/data.hpp"
#include "gibbsmf/linalg.hpp"

namespace gibbsmf {

/// Known low-rank generator: R = U^T V with U (K x rows), V (K x cols).
struct LowRankTruth {
  Matrix u;
  Matrix v;

  double value(std::size_t i, std::size_t j) const {
    return u.col(static_cast<Eigen::Index>(i)).dot(v.col(static_cast<Eigen::Index>(j)));
  }
};

/// Entries N(0, 1) / sqrt(K).
LowRankTruth random_low_rank(std::size_t rows, std::size_t cols, int k, std::uint64_t seed);

struct SyntheticSplit {
  SparseMatrix train;
  TestSet test;
  std::vector<std::size_t> cold_rows;  // rows with no training cells
};

struct SyntheticOptions {
  std::size_t train_cells = 0;
  std::size_t test_cells = 0;
  double noise_sd = 0.0;
  std::size_t cold_rows = 0;           // rows stripped of training cells
  std::size_t cold_test_per_row = 0;   // extra test cells drawn on each cold row
  std::uint64_t seed = 0;
};

/// Draws distinct cells uniformly; the first `train_cells` (outside cold
/// rows) form the training matrix, the next `test_cells` the test set. Values
/// are truth plus N(0, noise_sd^2).
SyntheticSplit sample_cells(const LowRankTruth& truth, const SyntheticOptions& opts);

}  // namespace gibbsmf
