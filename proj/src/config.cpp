#include "gibbsmf/config.hpp"

#include <charconv>
#include <fstream>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"

namespace gibbsmf {

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "train",     "test",         "preset",         "view",           "prior_rows",
      "prior_cols", "side_rows",   "side_cols",      "beta_precision", "noise",
      "num_latent", "burnin",      "nsamples",       "seed",           "threads",
      "split_threshold", "save_prefix", "checkpoint_every", "csv_trace", "resume"};
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw UsageError("invalid value '" + text + "' for " + key);
  }
  return v;
}

}  // namespace

std::map<std::string, std::vector<std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open config file (check the path)");
  const auto& keys = train_config_keys();
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) {
      throw UsageError(where + "expected 'key = value' (see --help for keys)");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw UsageError(where + "unknown key '" + key + "' (keys mirror the flags, e.g. " +
                       "--num-latent -> num_latent)");
    }
    auto& slot = out[key];
    if (!slot.empty() && key != "view") {
      throw UsageError(where + "key '" + key + "' repeated (only 'view' may repeat)");
    }
    slot.push_back(value);
  }
  return out;
}

void apply_config(TrainOptions& o, const std::map<std::string, std::vector<std::string>>& values,
                  const std::set<std::string>& set_by_flags) {
  for (const auto& [key, vals] : values) {
    if (set_by_flags.count(key)) continue;
    const std::string& v = vals.back();
    if (key == "train") o.train = v;
    else if (key == "test") o.test = v;
    else if (key == "preset") o.preset = v;
    else if (key == "view") o.view = vals;
    else if (key == "prior_rows") o.prior_rows = v;
    else if (key == "prior_cols") o.prior_cols = v;
    else if (key == "side_rows") o.side_rows = v;
    else if (key == "side_cols") o.side_cols = v;
    else if (key == "beta_precision") o.beta_precision = parse_number<double>(key, v);
    else if (key == "noise") o.noise = v;
    else if (key == "num_latent") o.num_latent = parse_number<int>(key, v);
    else if (key == "burnin") o.burnin = parse_number<std::size_t>(key, v);
    else if (key == "nsamples") o.nsamples = parse_number<std::size_t>(key, v);
    else if (key == "seed") o.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "threads") o.threads = parse_number<std::size_t>(key, v);
    else if (key == "split_threshold") o.split_threshold = parse_number<std::size_t>(key, v);
    else if (key == "save_prefix") o.save_prefix = v;
    else if (key == "checkpoint_every") o.checkpoint_every = parse_number<std::size_t>(key, v);
    else if (key == "csv_trace") o.csv_trace = v;
    else if (key == "resume") o.resume = v;
    else throw UsageError("unknown config key '" + key + "'");
  }
}

PresetExpansion expand_preset(const std::string& name) {
  PresetExpansion p;
  p.name = name;
  if (name == "bmf") {
    p.default_noise = FixedNoise{5.0};
    p.side = SideRule::Forbidden;
  } else if (name == "macau") {
    p.default_noise = AdaptiveNoise{1.0, 1.0};
    p.side = SideRule::Required;
  } else if (name == "gfa") {
    p.col_prior = PriorKind::SpikeAndSlab;
    p.default_noise = AdaptiveNoise{1.0, 1.0};
    p.side = SideRule::Forbidden;
    p.multi_view = true;
  } else if (name.empty()) {
    p.multi_view = true;
  } else {
    throw UsageError("unknown preset '" + name + "': use bmf, macau or gfa");
  }
  return p;
}

void resolve_priors(const TrainOptions& opts, Problem& problem, std::optional<SideInfo> side_rows,
                    std::optional<SideInfo> side_cols) {
  const PresetExpansion p = expand_preset(opts.preset);
  const std::string label = opts.preset.empty() ? "this configuration" : "preset " + opts.preset;
  const bool any_side = side_rows.has_value() || side_cols.has_value();

  if (p.side == SideRule::Forbidden && any_side) {
    throw UsageError(label + " takes no side information; drop --side-rows/--side-cols or use "
                     "--preset macau");
  }
  if (p.side == SideRule::Required && !any_side) {
    throw UsageError("preset macau needs side information: pass --side-rows <path> and/or "
                     "--side-cols <path>");
  }
  if (!p.multi_view && problem.views.size() > 1) {
    throw UsageError(label + " factorizes a single matrix; --view is only valid with "
                     "--preset gfa or without a preset");
  }

  PriorKind row = p.row_prior;
  PriorKind col = p.col_prior;
  if (p.side == SideRule::Required) {
    if (side_rows) row = PriorKind::Macau;
    if (side_cols) col = PriorKind::Macau;
  }
  if (!opts.prior_rows.empty()) row = parse_prior_kind(opts.prior_rows);
  if (!opts.prior_cols.empty()) col = parse_prior_kind(opts.prior_cols);

  if (row == PriorKind::Macau && !side_rows) {
    throw UsageError("macau prior on rows needs --side-rows <path>");
  }
  if (col == PriorKind::Macau && !side_cols) {
    throw UsageError("macau prior on columns needs --side-cols <path>");
  }
  if (side_rows && row != PriorKind::Macau) {
    throw UsageError("--side-rows given but the row prior is " + std::string(to_string(row)) +
                     "; use --prior-rows macau");
  }
  if (side_cols && col != PriorKind::Macau) {
    throw UsageError("--side-cols given but the column prior is " + std::string(to_string(col)) +
                     "; use --prior-cols macau");
  }
  if (col == PriorKind::Macau && problem.views.size() > 1) {
    throw UsageError("--side-cols decorates a single matrix; it cannot be combined with --view");
  }

  const NoiseSpec noise = opts.noise.empty() ? p.default_noise : parse_noise_spec(opts.noise);

  problem.row_prior = PriorSpec{};
  problem.row_prior.kind = row;
  problem.row_prior.side = std::move(side_rows);
  problem.row_prior.beta_precision = opts.beta_precision;
  for (auto& v : problem.views) {
    v.noise = noise;
    v.col_prior = PriorSpec{};
    v.col_prior.kind = col;
    v.col_prior.beta_precision = opts.beta_precision;
  }
  if (col == PriorKind::Macau) problem.views[0].col_prior.side = std::move(side_cols);
}

TrainSetup build_train_setup(const TrainOptions& opts) {
  if (opts.train.empty() && opts.view.empty()) {
    throw UsageError("no training data: pass --train <path> (or --view <path> with gfa)");
  }
  if (opts.num_latent < 1) throw UsageError("--num-latent must be at least 1");
  if (opts.nsamples < 1) throw UsageError("--nsamples must be at least 1");
  if (opts.split_threshold < 1) throw UsageError("--split-threshold must be at least 1");
  if (!(opts.beta_precision > 0.0)) throw UsageError("--beta-precision must be positive");
  expand_preset(opts.preset);

  TrainSetup setup;
  if (!opts.train.empty()) setup.problem.views.push_back({read_matrix_market_auto(opts.train)});
  for (const auto& v : opts.view) setup.problem.views.push_back({read_matrix_market_auto(v)});

  std::optional<SideInfo> side_rows, side_cols;
  if (!opts.side_rows.empty()) side_rows = read_side_info(opts.side_rows);
  if (!opts.side_cols.empty()) side_cols = read_side_info(opts.side_cols);
  resolve_priors(opts, setup.problem, std::move(side_rows), std::move(side_cols));

  if (!opts.test.empty()) setup.problem.test = read_test_set(opts.test);

  auto& c = setup.config;
  c.num_latent = opts.num_latent;
  c.burnin = opts.burnin;
  c.nsamples = opts.nsamples;
  c.seed = opts.seed;
  c.threads = opts.threads;
  c.split_threshold = opts.split_threshold;
  c.checkpoint_every = opts.checkpoint_every;
  return setup;
}

}  // namespace gibbsmf
