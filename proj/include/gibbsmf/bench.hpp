#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gibbsmf {

struct BenchOptions {
  std::string kernel;  // accumulate | cholesky | full-iteration
  int num_latent = 32;
  std::size_t reps = 100;
  // accumulate: entries of the single heavy entity
  std::size_t entries = 100000;
  std::vector<std::size_t> split_thresholds{4096};
  // full-iteration
  std::size_t rows = 20000;
  std::size_t cols = 20000;
  std::size_t nnz = 2000000;
  std::vector<std::size_t> threads{1};
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::string kernel;
  int num_latent = 0;
  std::string param;  // e.g. threads=4, threshold=1
  std::size_t reps = 0;
  double min_s = 0.0;
  double median_s = 0.0;
  double throughput = 0.0;  // updates (or factorizations) per second at the median
  double speedup = 1.0;     // full-iteration only, relative to the first thread count
  std::string checksum;     // digest of the numerical output
};

/// Runs one kernel; throws UsageError for an unknown kernel name.
std::vector<BenchRow> run_bench(const BenchOptions& opts);

std::string bench_csv_header();
std::string bench_csv_line(const BenchRow& row);

}  // namespace gibbsmf
