#include "gibbsmf/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"

namespace fs = std::filesystem;

namespace gibbsmf {

namespace {

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string format_progress(const IterationRecord& rec) {
  std::ostringstream out;
  out << "iter=" << rec.iteration << " phase=" << (rec.burnin ? "burnin" : "sample")
      << " rmse_avg=" << short_real(rec.rmse_avg) << " rmse_1sample=" << short_real(rec.rmse_sample);
  if (rec.alpha.size() == 1) {
    out << " alpha=" << short_real(rec.alpha[0]);
  } else {
    for (std::size_t v = 0; v < rec.alpha.size(); ++v) {
      out << " alpha_" << v << "=" << short_real(rec.alpha[v]);
    }
  }
  return out.str();
}

std::string csv_trace_header(std::size_t views) {
  std::string h = "iteration,phase,rmse_avg,rmse_1sample";
  for (std::size_t v = 0; v < views; ++v) h += ",alpha_" + std::to_string(v);
  return h;
}

std::string csv_trace_line(const IterationRecord& rec) {
  std::string line = std::to_string(rec.iteration) + "," + (rec.burnin ? "burnin" : "sample") +
                     "," + format_real(rec.rmse_avg) + "," + format_real(rec.rmse_sample);
  for (double a : rec.alpha) line += "," + format_real(a);
  return line;
}

std::vector<QueryPrediction> predict_from_snapshot(
    const std::string& dir, const std::vector<std::pair<std::size_t, std::size_t>>& queries) {
  std::vector<fs::path> sources;
  const fs::path samples = fs::path(dir) / "samples";
  if (fs::is_directory(samples)) {
    for (const auto& e : fs::directory_iterator(samples)) {
      if (e.is_directory()) sources.push_back(e.path());
    }
    std::sort(sources.begin(), sources.end());
  }
  if (sources.empty()) {
    if (!fs::exists(fs::path(dir) / "manifest.txt")) {
      throw DataError(dir + ": not a snapshot directory (expected manifest.txt; pass the "
                      "--save-prefix directory of a training run)");
    }
    sources.push_back(dir);
  }

  std::vector<QueryPrediction> out(queries.size());
  std::vector<double> m2(queries.size(), 0.0);
  std::size_t count = 0;
  for (const auto& src : sources) {
    const Matrix u = read_array((src / "mode0-latents.mtx").string());
    const Matrix v = read_array((src / "mode1-latents.mtx").string());
    ++count;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto [i, j] = queries[q];
      if (i >= static_cast<std::size_t>(u.cols()) || j >= static_cast<std::size_t>(v.cols())) {
        throw DataError("query (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside the model's " + std::to_string(u.cols()) + "x" +
                        std::to_string(v.cols()) + " matrix (queries are 0-based)");
      }
      const double p = u.col(static_cast<Eigen::Index>(i)).dot(v.col(static_cast<Eigen::Index>(j)));
      auto& r = out[q];
      r.row = i;
      r.col = j;
      const double delta = p - r.mean;
      r.mean += delta / static_cast<double>(count);
      m2[q] += delta * (p - r.mean);
    }
  }
  for (std::size_t q = 0; q < out.size(); ++q) {
    out[q].sd = count > 1 ? std::sqrt(m2[q] / static_cast<double>(count - 1)) : 0.0;
  }
  return out;
}

}  // namespace gibbsmf
