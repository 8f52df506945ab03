#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gibbsmf/noise.hpp"
#include "gibbsmf/sampler.hpp"

namespace gibbsmf {

/// Settings of the `train` subcommand. Every field has a flag `--a-b` and a
/// config-file key `a_b`.
struct TrainOptions {
  std::string train;
  std::string test;
  std::string preset;
  std::vector<std::string> view;
  std::string prior_rows;
  std::string prior_cols;
  std::string side_rows;
  std::string side_cols;
  double beta_precision = 1.0;
  std::string noise;
  int num_latent = 16;
  std::size_t burnin = 200;
  std::size_t nsamples = 800;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t split_threshold = 4096;
  std::string save_prefix;
  std::size_t checkpoint_every = 0;
  std::string csv_trace;
  std::string resume;
};

/// Config-file keys accepted by `train`, in flag order.
const std::vector<std::string>& train_config_keys();

/// Parses `key = value` lines (`#` starts a comment). Repeated keys
/// accumulate; only `view` may repeat. Unknown keys are UsageErrors naming
/// file and line.
std::map<std::string, std::vector<std::string>> parse_config_file(const std::string& path);

/// Sets every option named in `values` whose key is not in `set_by_flags`.
void apply_config(TrainOptions& opts, const std::map<std::string, std::vector<std::string>>& values,
                  const std::set<std::string>& set_by_flags);

enum class SideRule { Forbidden, Required, Optional };

/// Table of named model recipes.
struct PresetExpansion {
  std::string name;
  PriorKind row_prior = PriorKind::Normal;
  PriorKind col_prior = PriorKind::Normal;
  NoiseSpec default_noise = FixedNoise{5.0};
  SideRule side = SideRule::Optional;
  bool multi_view = false;  // accepts --view
};

/// bmf: normal/normal, fixed noise, no side info.
/// macau: normal priors with link matrices on the decorated modes, fixed or
///        adaptive noise (adaptive by default), side info required.
/// gfa: normal on the shared rows, spike-and-slab on each view's columns.
/// Throws UsageError for unknown names.
PresetExpansion expand_preset(const std::string& name);

/// Loaded data plus the resolved session setup.
struct TrainSetup {
  SessionConfig config;
  Problem problem;
};

/// Resolves presets and overrides, loads all matrices. Throws UsageError
/// (inconsistent flags) or DataError (bad files).
TrainSetup build_train_setup(const TrainOptions& opts);

/// Applies preset and override rules: fills priors and noise of a problem
/// whose views are already loaded. Exposed so tests can check resolution
/// without files.
void resolve_priors(const TrainOptions& opts, Problem& problem, std::optional<SideInfo> side_rows,
                    std::optional<SideInfo> side_cols);

}  // namespace gibbsmf
