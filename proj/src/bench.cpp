#include "gibbsmf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <sstream>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"
#include "gibbsmf/linalg.hpp"
#include "gibbsmf/parallel.hpp"
#include "gibbsmf/sampler.hpp"
#include "gibbsmf/synthetic.hpp"

namespace gibbsmf {

namespace {

using Clock = std::chrono::steady_clock;

class Digest {
 public:
  void add(const double* p, std::size_t n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
      h_ ^= bytes[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void add(const Matrix& m) { add(m.data(), static_cast<std::size_t>(m.size())); }
  std::string hex() const {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h_;
    return out.str();
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

void summarize(std::vector<double>& times, BenchRow& row) {
  std::sort(times.begin(), times.end());
  row.reps = times.size();
  row.min_s = times.front();
  row.median_s = times[times.size() / 2];
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<BenchRow> bench_cholesky(const BenchOptions& o) {
  const Eigen::Index k = o.num_latent;
  auto s = stream_for(o.seed, 0, 0, 0);
  Matrix m(k, k);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sample_normal(s);
  Matrix a = m.transpose() * m;
  a.diagonal().array() += static_cast<double>(k);

  BenchRow row{"cholesky", o.num_latent, "K=" + std::to_string(k)};
  std::vector<double> times;
  Digest d;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, o.reps); ++r) {
    const auto t0 = Clock::now();
    const CholFactor l = chol_spd(a);
    times.push_back(seconds_since(t0));
    if (r == 0) d.add(l.lower());
  }
  summarize(times, row);
  row.throughput = 1.0 / row.median_s;
  row.checksum = d.hex();
  return {row};
}

std::vector<BenchRow> bench_accumulate(const BenchOptions& o) {
  const Eigen::Index k = o.num_latent;
  const std::size_t n = o.entries;
  auto s = stream_for(o.seed, 0, 0, 1);
  Matrix factors(k, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < factors.size(); ++i) factors.data()[i] = sample_normal(s);
  std::vector<Index> idx(n);
  std::vector<double> val(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<Index>(i);
    val[i] = sample_normal(s);
  }
  const SparseLine line{idx, val};
  const std::size_t threads = *std::max_element(o.threads.begin(), o.threads.end());
  ThreadPool pool(threads);

  std::vector<BenchRow> rows;
  for (std::size_t threshold : o.split_thresholds) {
    BenchRow row{"accumulate", o.num_latent,
                 "threshold=" + std::to_string(threshold) + ";threads=" + std::to_string(threads)};
    std::vector<double> times;
    Precision result;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, o.reps); ++r) {
      const auto t0 = Clock::now();
      if (n > threshold) {
        std::vector<PrecisionPartial> partials(chunk_count(n));
        pool.parallel_for(partials.size(),
                          [&](std::size_t c) { partials[c] = accumulate_chunk(factors, line, c); });
        result = combine_partials(partials, 1.0, k);
      } else {
        result = accumulate_precision(factors, line, 1.0);
      }
      times.push_back(seconds_since(t0));
    }
    summarize(times, row);
    row.throughput = static_cast<double>(n) / row.median_s;
    Digest d;
    d.add(result.a);
    d.add(result.b.data(), static_cast<std::size_t>(result.b.size()));
    row.checksum = d.hex();
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> bench_full_iteration(const BenchOptions& o) {
  const auto truth = random_low_rank(o.rows, o.cols, o.num_latent, o.seed);
  SyntheticOptions so;
  so.train_cells = o.nnz;
  so.noise_sd = 0.1;
  so.seed = o.seed;
  auto split = sample_cells(truth, so);

  Problem problem;
  problem.views.push_back({DataMatrix::observed(std::move(split.train)), FixedNoise{100.0}});

  std::vector<BenchRow> rows;
  const std::size_t reps = std::max<std::size_t>(1, o.reps);
  for (std::size_t threads : o.threads) {
    SessionConfig cfg;
    cfg.num_latent = o.num_latent;
    cfg.burnin = reps;
    cfg.nsamples = 1;
    cfg.seed = o.seed;
    cfg.threads = threads;
    Session session(cfg, problem);
    BenchRow row{"full-iteration", o.num_latent, "threads=" + std::to_string(threads)};
    std::vector<double> times;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t0 = Clock::now();
      session.step();
      times.push_back(seconds_since(t0));
    }
    summarize(times, row);
    row.throughput = static_cast<double>(o.rows + o.cols) / row.median_s;
    Digest d;
    for (const auto& m : session.model().modes) d.add(m.factors);
    row.checksum = d.hex();
    rows.push_back(row);
  }
  for (auto& row : rows) row.speedup = rows.front().median_s / row.median_s;
  return rows;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.num_latent < 1) throw UsageError("bench: --num-latent must be at least 1");
  if (opts.threads.empty()) throw UsageError("bench: --threads needs at least one value");
  if (opts.kernel == "cholesky") return bench_cholesky(opts);
  if (opts.kernel == "accumulate") return bench_accumulate(opts);
  if (opts.kernel == "full-iteration") return bench_full_iteration(opts);
  throw UsageError("unknown bench kernel '" + opts.kernel +
                   "': use accumulate, cholesky or full-iteration");
}

std::string bench_csv_header() {
  return "kernel,num_latent,param,reps,min_s,median_s,throughput_per_s,speedup,checksum";
}

std::string bench_csv_line(const BenchRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%s,%zu,%.6g,%.6g,%.6g,%.3f,%s", r.kernel.c_str(),
                r.num_latent, r.param.c_str(), r.reps, r.min_s, r.median_s, r.throughput,
                r.speedup, r.checksum.c_str());
  return buf;
}

}  // namespace gibbsmf
