#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/snapshot.hpp"
#include "gibbsmf/synthetic.hpp"

namespace fs = std::filesystem;
using namespace gibbsmf;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gibbsmf_snap_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Problem problem_with(PriorKind rows, PriorKind cols, std::uint64_t seed) {
  const auto truth = random_low_rank(30, 25, 3, seed);
  SyntheticOptions so;
  so.train_cells = 250;
  so.test_cells = 40;
  so.noise_sd = 0.1;
  so.seed = seed;
  auto split = sample_cells(truth, so);
  Problem p;
  p.views.push_back({DataMatrix::observed(std::move(split.train)), AdaptiveNoise{1.0, 1.0}});
  p.test = std::move(split.test);
  p.row_prior.kind = rows;
  if (rows == PriorKind::Macau) {
    DenseMatrix f(30, 4);
    for (std::size_t i = 0; i < 30; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const auto c = static_cast<Eigen::Index>(j % 3);
        f(i, j) = truth.u(c, static_cast<Eigen::Index>(i)) + 0.1 * static_cast<double>(j);
      }
    }
    p.row_prior.side = SideInfo(f);
  }
  p.views[0].col_prior.kind = cols;
  return p;
}

SessionConfig config(std::size_t burnin, std::size_t nsamples) {
  SessionConfig c;
  c.num_latent = 3;
  c.burnin = burnin;
  c.nsamples = nsamples;
  c.seed = 21;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

class SnapshotPriors : public ::testing::TestWithParam<std::pair<PriorKind, PriorKind>> {};

TEST_P(SnapshotPriors, WriteReadWriteIsByteIdentical) {
  const auto [rows, cols] = GetParam();
  const Problem p = problem_with(rows, cols, 1);
  Session a(config(3, 4), p);
  a.run();
  const auto d1 = fresh_dir("rt1"), d2 = fresh_dir("rt2");
  write_snapshot(a, d1.string());

  Session b(config(3, 4), p);
  read_snapshot(d1.string(), b);
  write_snapshot(b, d2.string());

  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    const auto other = d2 / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++files;
  }
  EXPECT_EQ(files, static_cast<std::size_t>(std::distance(fs::directory_iterator(d2), {})));
  EXPECT_GT(files, 5u);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_P(SnapshotPriors, ResumeMatchesUninterruptedRun) {
  const auto [rows, cols] = GetParam();
  const Problem p = problem_with(rows, cols, 2);
  Session full(config(4, 6), p);
  const auto want = full.run();

  Session first(config(4, 6), p);
  for (int t = 0; t < 5; ++t) first.step();  // stop inside the sampling phase
  const auto dir = fresh_dir("resume");
  write_snapshot(first, dir.string());

  Session resumed(config(4, 6), p);
  read_snapshot(dir.string(), resumed);
  EXPECT_EQ(resumed.iterations_done(), 5u);
  const auto rest = resumed.run();
  ASSERT_EQ(rest.size(), want.size() - 5);
  for (std::size_t t = 0; t < rest.size(); ++t) {
    const auto& w = want[t + 5];
    EXPECT_EQ(rest[t].iteration, w.iteration);
    EXPECT_TRUE(same_bits(rest[t].rmse_avg, w.rmse_avg)) << t;
    EXPECT_TRUE(same_bits(rest[t].rmse_sample, w.rmse_sample)) << t;
    EXPECT_EQ(rest[t].alpha, w.alpha);
  }
  for (std::size_t m = 0; m < full.mode_count(); ++m) {
    EXPECT_EQ(resumed.model().modes[m].factors, full.model().modes[m].factors);
  }
  fs::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(
    Priors, SnapshotPriors,
    ::testing::Values(std::pair{PriorKind::Normal, PriorKind::Normal},
                      std::pair{PriorKind::Macau, PriorKind::Normal},
                      std::pair{PriorKind::Normal, PriorKind::SpikeAndSlab}));

TEST(Snapshot, TamperedDigestIsRefused) {
  const Problem p = problem_with(PriorKind::Normal, PriorKind::Normal, 3);
  Session a(config(1, 1), p);
  a.run();
  const auto dir = fresh_dir("tamper");
  write_snapshot(a, dir.string());
  std::string manifest = slurp(dir / "manifest.txt");
  const auto pos = manifest.find("config_digest=") + std::strlen("config_digest=");
  manifest[pos] = manifest[pos] == '0' ? '1' : '0';
  std::ofstream(dir / "manifest.txt") << manifest;

  Session b(config(1, 1), p);
  try {
    read_snapshot(dir.string(), b);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("digest"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Snapshot, DifferentConfigIsRefused) {
  const Problem p = problem_with(PriorKind::Normal, PriorKind::Normal, 4);
  Session a(config(1, 1), p);
  const auto dir = fresh_dir("mismatch");
  write_snapshot(a, dir.string());
  auto other = config(1, 1);
  other.seed = 22;
  Session b(other, p);
  EXPECT_THROW(read_snapshot(dir.string(), b), DataError);

  // thread count, threshold and nsamples do not enter the digest
  auto fine = config(1, 50);
  fine.threads = 2;
  fine.split_threshold = 7;
  Session c(fine, p);
  EXPECT_NO_THROW(read_snapshot(dir.string(), c));
  fs::remove_all(dir);
}

TEST(Snapshot, VersionAndMissingFiles) {
  const Problem p = problem_with(PriorKind::Normal, PriorKind::Normal, 5);
  Session a(config(1, 1), p);
  const auto dir = fresh_dir("missing");
  write_snapshot(a, dir.string());
  fs::remove(dir / "mode1-latents.mtx");
  Session b(config(1, 1), p);
  try {
    read_snapshot(dir.string(), b);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("mode1-latents.mtx"), std::string::npos) << e.what();
  }

  write_snapshot(a, dir.string());
  std::string manifest = slurp(dir / "manifest.txt");
  manifest.replace(manifest.find("version=1"), 9, "version=9");
  std::ofstream(dir / "manifest.txt") << manifest;
  try {
    read_snapshot(dir.string(), b);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_snapshot((dir / "nope").string(), b), DataError);
  fs::remove_all(dir);
}

TEST(Snapshot, ManifestFields) {
  const Problem p = problem_with(PriorKind::Normal, PriorKind::Normal, 6);
  Session a(config(1, 2), p);
  a.run();
  const auto dir = fresh_dir("manifest");
  write_snapshot(a, dir.string());
  const auto m = Manifest::read(dir.string());
  EXPECT_EQ(m.at("version"), "1");
  EXPECT_EQ(m.at("iteration"), "3");
  EXPECT_EQ(m.at("seed"), "21");
  EXPECT_EQ(m.at("num_latent"), "3");
  EXPECT_EQ(std::stod(m.at("rmse")), rmse(a.aggregate(), p.test));
  EXPECT_EQ(m.at("config_digest").size(), 16u);
  EXPECT_THROW(m.at("nothing"), DataError);
  fs::remove_all(dir);
}
