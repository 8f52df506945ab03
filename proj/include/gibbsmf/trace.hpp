#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gibbsmf/sampler.hpp"

namespace gibbsmf {

/// `iter=12 phase=sample rmse_avg=0.1234 rmse_1sample=0.1301 alpha=5`
/// (alpha_0=, alpha_1=, ... with several views).
std::string format_progress(const IterationRecord& rec);

std::string csv_trace_header(std::size_t views);
/// Reals rendered with 17 significant digits.
std::string csv_trace_line(const IterationRecord& rec);

struct QueryPrediction {
  std::size_t row;
  std::size_t col;
  double mean;
  double sd;
};

/// Predictions from a snapshot directory. When `<dir>/samples/` holds saved
/// posterior samples, mean and sample std are taken across them; otherwise
/// the snapshot's own factors are used and std is 0.
std::vector<QueryPrediction> predict_from_snapshot(
    const std::string& dir, const std::vector<std::pair<std::size_t, std::size_t>>& queries);

}  // namespace gibbsmf
