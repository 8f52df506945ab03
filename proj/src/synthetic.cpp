#include "gibbsmf/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "gibbsmf/rng.hpp"

namespace gibbsmf {

LowRankTruth random_low_rank(std::size_t rows, std::size_t cols, int k, std::uint64_t seed) {
  LowRankTruth t;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  auto s = stream_for(seed, 0, 1, 0);
  t.u.resize(k, static_cast<Eigen::Index>(rows));
  t.v.resize(k, static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < t.u.size(); ++i) t.u.data()[i] = sample_normal(s) * scale;
  for (Eigen::Index i = 0; i < t.v.size(); ++i) t.v.data()[i] = sample_normal(s) * scale;
  return t;
}

SyntheticSplit sample_cells(const LowRankTruth& truth, const SyntheticOptions& opts) {
  const std::size_t rows = static_cast<std::size_t>(truth.u.cols());
  const std::size_t cols = static_cast<std::size_t>(truth.v.cols());
  if (opts.cold_rows > rows) throw std::invalid_argument("more cold rows than rows");
  const std::size_t warm_cells = (rows - opts.cold_rows) * cols;
  const std::size_t wanted = opts.train_cells + opts.test_cells +
                             opts.cold_rows * opts.cold_test_per_row;
  if (wanted > rows * cols || opts.train_cells > warm_cells) {
    throw std::invalid_argument("requested more cells than the matrix holds");
  }

  auto s = stream_for(opts.seed, 0, 2, 0);
  SyntheticSplit out;

  // cold rows: a uniformly drawn subset
  std::vector<char> cold(rows, 0);
  while (out.cold_rows.size() < opts.cold_rows) {
    const auto i = static_cast<std::size_t>(s.next_u64() % rows);
    if (!cold[i]) {
      cold[i] = 1;
      out.cold_rows.push_back(i);
    }
  }

  std::unordered_set<std::uint64_t> used;
  used.reserve(wanted * 2);
  const auto draw = [&](bool want_cold, std::size_t fixed_row, bool use_fixed) {
    for (;;) {
      const std::size_t i = use_fixed ? fixed_row : static_cast<std::size_t>(s.next_u64() % rows);
      const std::size_t j = static_cast<std::size_t>(s.next_u64() % cols);
      if (!use_fixed && static_cast<bool>(cold[i]) != want_cold) continue;
      if (used.insert((static_cast<std::uint64_t>(i) << 32) | j).second) {
        const double v = truth.value(i, j) + opts.noise_sd * sample_normal(s);
        return Triplet{static_cast<Index>(i), static_cast<Index>(j), v};
      }
    }
  };

  std::vector<Triplet> train;
  train.reserve(opts.train_cells);
  for (std::size_t n = 0; n < opts.train_cells; ++n) train.push_back(draw(false, 0, false));
  for (std::size_t n = 0; n < opts.test_cells; ++n) {
    // test cells may fall on any row
    for (;;) {
      const std::size_t i = static_cast<std::size_t>(s.next_u64() % rows);
      const std::size_t j = static_cast<std::size_t>(s.next_u64() % cols);
      if (used.insert((static_cast<std::uint64_t>(i) << 32) | j).second) {
        out.test.cells.push_back({static_cast<Index>(i), static_cast<Index>(j),
                                  truth.value(i, j) + opts.noise_sd * sample_normal(s)});
        break;
      }
    }
  }
  for (std::size_t r : out.cold_rows) {
    for (std::size_t n = 0; n < opts.cold_test_per_row; ++n) {
      out.test.cells.push_back(draw(true, r, true));
    }
  }
  out.train = SparseMatrix::from_triplets(rows, cols, std::move(train));
  return out;
}

}  // namespace gibbsmf
