#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gibbsmf/data.hpp"
#include "gibbsmf/linalg.hpp"
#include "gibbsmf/noise.hpp"
#include "gibbsmf/parallel.hpp"
#include "gibbsmf/priors.hpp"

namespace gibbsmf {

enum class PriorKind { Normal, Macau, SpikeAndSlab };

const char* to_string(PriorKind kind);
/// Accepts `normal`, `macau`, `spikeandslab`; throws UsageError otherwise.
PriorKind parse_prior_kind(const std::string& name);

struct PriorSpec {
  PriorKind kind = PriorKind::Normal;
  std::optional<SideInfo> side;  // required for Macau
  double beta_precision = 1.0;
  SnSHyper sns;
};

/// One training matrix. All views share the row mode; each has its own
/// column mode.
struct View {
  DataMatrix matrix;
  NoiseSpec noise = FixedNoise{};
  PriorSpec col_prior;
};

struct Problem {
  PriorSpec row_prior;
  std::vector<View> views;
  TestSet test;  // cells of views[0]
};

struct SessionConfig {
  int num_latent = 16;
  std::size_t burnin = 200;
  std::size_t nsamples = 800;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // 0 = hardware concurrency
  std::size_t split_threshold = 4096;
  std::size_t checkpoint_every = 0;
};

// Stream keys. Mode 0 is the row mode, mode v+1 the columns of view v.
inline constexpr std::uint64_t kInitIteration = kMaxIteration;
inline constexpr std::uint64_t kHyperStream = kMaxIndex;
inline constexpr std::uint64_t kLinkStream = kMaxIndex - 1;
inline constexpr std::uint64_t kSnsHyperStream = kMaxIndex - 2;
inline constexpr std::uint32_t kNoiseMode = kMaxMode;

struct ModeState {
  Matrix factors;  // K x entities
  ModeHyper hyper;
  std::optional<LinkState> link;
  std::optional<SnSState> sns;
};

struct LatentModel {
  std::vector<ModeState> modes;
  std::vector<NoiseState> noise;  // one per view
};

/// Streaming mean and squared-deviation sum of test-cell predictions.
class PredictionAggregate {
 public:
  PredictionAggregate() = default;
  explicit PredictionAggregate(const TestSet& test);

  /// One prediction per test cell, in test-set order.
  void add(std::span<const double> predictions);

  std::size_t count() const { return count_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<Triplet>& cells() const { return cells_; }
  const std::vector<double>& means() const { return mean_; }
  const std::vector<double>& squared_deviations() const { return m2_; }

  /// (mean, sample std); std is 0 while count == 1. Throws std::out_of_range
  /// for a cell not in the test set or before any sample was added.
  std::pair<double, double> predict(std::size_t i, std::size_t j) const;
  std::pair<double, double> predict_index(std::size_t n) const;

  void restore(std::vector<double> means, std::vector<double> m2, std::size_t count);

 private:
  std::vector<Triplet> cells_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t count_ = 0;
};

/// sqrt(mean over test cells of (aggregate mean - truth)^2). Throws
/// std::invalid_argument on an empty test set or empty aggregate.
double rmse(const PredictionAggregate& agg, const TestSet& test);

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  bool burnin = true;
  double rmse_avg = 0.0;     // aggregate RMSE; NaN during burn-in or without test set
  double rmse_sample = 0.0;  // this iteration's sample alone; NaN without test set
  std::vector<double> alpha;
};

/// Gibbs session over one or more views sharing the row mode.
class Session {
 public:
  Session(SessionConfig cfg, Problem problem);
  ~Session();

  /// Draws the initial state (latents N(0,1)/sqrt(K), hyperparameters from
  /// their priors). Called by the constructor.
  void initialize();

  /// One full Gibbs iteration.
  IterationRecord step();

  /// Runs until burnin + nsamples iterations are done.
  std::vector<IterationRecord> run(
      const std::function<void(const IterationRecord&, const Session&)>& on_iteration = {});

  std::size_t iterations_done() const { return done_; }
  std::size_t total_iterations() const { return cfg_.burnin + cfg_.nsamples; }
  std::size_t mode_count() const { return model_.modes.size(); }

  const SessionConfig& config() const { return cfg_; }
  const Problem& problem() const { return problem_; }
  const LatentModel& model() const { return model_; }
  const PredictionAggregate& aggregate() const { return agg_; }
  std::size_t test_overlap_warnings() const { return overlap_warnings_; }

  /// Replaces the chain state, e.g. from a snapshot.
  void restore(std::size_t iterations_done, LatentModel model, PredictionAggregate agg);

  /// Resamples every entity (after the hyperparameters) of one mode using
  /// streams of iteration `iteration`.
  void update_mode(std::size_t mode, std::size_t iteration);

  /// Likelihood terms (alpha-weighted sums over all views touching the mode)
  /// for one entity given the current other-mode factors.
  Precision likelihood(std::size_t mode, std::size_t entity) const;

  /// Sum of squared residuals of view v over its likelihood cells.
  double sum_squared_residuals(std::size_t view) const;

  /// Current single-sample predictions for the test cells.
  std::vector<double> predict_test() const;

  /// Per-view other-mode id and orientation of the views touching `mode`.
  struct Link {
    std::size_t view;
    std::size_t other_mode;
    bool by_col;
  };
  const std::vector<Link>& links(std::size_t mode) const { return links_[mode]; }

 private:
  struct HeavyTask {
    std::size_t entity;
    std::size_t link;
    std::size_t chunk;
  };
  struct HeavyPlan {
    std::vector<HeavyTask> tasks;
    // (entity, link) -> offset of its first chunk in the partial buffer
    std::unordered_map<std::uint64_t, std::size_t> offset;
  };

  void validate() const;
  void plan_heavy_rows();
  void sample_mode_hyper(std::size_t mode, std::size_t iteration);
  void check_finite(std::size_t mode, std::size_t iteration) const;
  Precision entity_likelihood(std::size_t mode, std::size_t entity,
                              const std::vector<Matrix>& shared_gram,
                              const std::vector<PrecisionPartial>* partials) const;
  const PriorSpec& prior(std::size_t mode) const;

  SessionConfig cfg_;
  Problem problem_;
  LatentModel model_;
  PredictionAggregate agg_;
  std::size_t done_ = 0;
  std::size_t overlap_warnings_ = 0;

  std::vector<std::vector<Link>> links_;
  std::vector<DenseMatrix> dense_t_;  // transposed dense views, for column access
  std::vector<NormalWishartHyper> nw_;
  std::vector<Matrix> w0_inverse_;
  std::vector<std::unique_ptr<FeatureMatrix>> features_;
  std::vector<std::unique_ptr<LinkSolver>> link_solvers_;
  std::vector<Matrix> prior_means_;  // Macau modes only
  std::vector<HeavyPlan> heavy_;
  std::unique_ptr<ThreadPool> pool_;
};

}  // namespace gibbsmf
