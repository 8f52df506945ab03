#include <gtest/gtest.h>

#include "gibbsmf/bench.hpp"
#include "gibbsmf/errors.hpp"

using namespace gibbsmf;

TEST(Bench, AccumulateThresholdsAgree) {
  BenchOptions o;
  o.kernel = "accumulate";
  o.num_latent = 8;
  o.reps = 3;
  o.entries = 5000;
  o.split_thresholds = {1, 4096, 1000000};
  o.threads = {2};
  const auto rows = run_bench(o);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].checksum, rows[1].checksum);
  EXPECT_EQ(rows[0].checksum, rows[2].checksum);
  EXPECT_EQ(rows[0].param, "threshold=1;threads=2");
  for (const auto& r : rows) {
    EXPECT_EQ(r.reps, 3u);
    EXPECT_LE(r.min_s, r.median_s);
    EXPECT_GT(r.throughput, 0.0);
  }
}

TEST(Bench, CholeskyReportsEveryRep) {
  BenchOptions o;
  o.kernel = "cholesky";
  o.num_latent = 32;
  o.reps = 1000;
  const auto rows = run_bench(o);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].reps, 1000u);
  EXPECT_EQ(rows[0].checksum.size(), 16u);
}

TEST(Bench, FullIterationSpeedupIsRelativeToFirst) {
  BenchOptions o;
  o.kernel = "full-iteration";
  o.num_latent = 4;
  o.reps = 2;
  o.rows = 300;
  o.cols = 200;
  o.nnz = 6000;
  o.threads = {1, 2, 4, 8};
  const auto rows = run_bench(o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].speedup, 1.0);
  for (const auto& r : rows) EXPECT_EQ(r.checksum, rows[0].checksum) << r.param;
  EXPECT_EQ(rows[3].param, "threads=8");
}

TEST(Bench, CsvFormat) {
  BenchRow r{"cholesky", 32, "K=32", 10, 1e-6, 2e-6, 5e5, 1.0, "00000000deadbeef"};
  EXPECT_EQ(bench_csv_header(),
            "kernel,num_latent,param,reps,min_s,median_s,throughput_per_s,speedup,checksum");
  EXPECT_EQ(bench_csv_line(r), "cholesky,32,K=32,10,1e-06,2e-06,500000,1.000,00000000deadbeef");
}

TEST(Bench, RejectsBadInput) {
  BenchOptions o;
  o.kernel = "fft";
  EXPECT_THROW(run_bench(o), UsageError);
  o.kernel = "cholesky";
  o.num_latent = 0;
  EXPECT_THROW(run_bench(o), UsageError);
  o.num_latent = 4;
  o.threads.clear();
  EXPECT_THROW(run_bench(o), UsageError);
}
