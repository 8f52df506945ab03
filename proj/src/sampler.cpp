#include "gibbsmf/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

const char* to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Normal: return "normal";
    case PriorKind::Macau: return "macau";
    case PriorKind::SpikeAndSlab: return "spikeandslab";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "normal") return PriorKind::Normal;
  if (name == "macau") return PriorKind::Macau;
  if (name == "spikeandslab") return PriorKind::SpikeAndSlab;
  throw UsageError("unknown prior '" + name + "': use normal, macau or spikeandslab");
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t cell_key(std::size_t i, std::size_t j) {
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

}  // namespace

PredictionAggregate::PredictionAggregate(const TestSet& test)
    : cells_(test.cells), mean_(test.size(), 0.0), m2_(test.size(), 0.0) {
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    lookup_.emplace(cell_key(cells_[n].row, cells_[n].col), n);
  }
}

void PredictionAggregate::add(std::span<const double> predictions) {
  if (predictions.size() != mean_.size()) {
    throw std::invalid_argument("prediction count does not match test set size");
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double delta = predictions[k] - mean_[k];
    mean_[k] += delta / n;
    m2_[k] += delta * (predictions[k] - mean_[k]);
  }
}

std::pair<double, double> PredictionAggregate::predict_index(std::size_t n) const {
  if (count_ == 0) throw std::out_of_range("no samples collected yet");
  const double sd = count_ > 1 ? std::sqrt(m2_[n] / static_cast<double>(count_ - 1)) : 0.0;
  return {mean_[n], sd};
}

std::pair<double, double> PredictionAggregate::predict(std::size_t i, std::size_t j) const {
  const auto it = lookup_.find(cell_key(i, j));
  if (it == lookup_.end()) {
    throw std::out_of_range("cell (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is not in the test set");
  }
  return predict_index(it->second);
}

void PredictionAggregate::restore(std::vector<double> means, std::vector<double> m2,
                                  std::size_t count) {
  if (means.size() != cells_.size() || m2.size() != cells_.size()) {
    throw DataError("prediction aggregate size does not match the test set");
  }
  mean_ = std::move(means);
  m2_ = std::move(m2);
  count_ = count;
}

double rmse(const PredictionAggregate& agg, const TestSet& test) {
  if (test.empty()) throw std::invalid_argument("rmse: empty test set");
  if (agg.count() == 0) throw std::invalid_argument("rmse: no samples collected");
  if (agg.size() != test.size()) throw std::invalid_argument("rmse: test set mismatch");
  double sum = 0.0;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const double e = agg.means()[n] - test.cells[n].value;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(test.size()));
}

// ---------------------------------------------------------------------------

Session::Session(SessionConfig cfg, Problem problem)
    : cfg_(cfg), problem_(std::move(problem)) {
  validate();
  const std::size_t k = static_cast<std::size_t>(cfg_.num_latent);
  const std::size_t nviews = problem_.views.size();
  const std::size_t nmodes = nviews + 1;

  links_.assign(nmodes, {});
  dense_t_.assign(nviews, {});
  for (std::size_t v = 0; v < nviews; ++v) {
    links_[0].push_back({v, v + 1, false});
    links_[v + 1].push_back({v, 0, true});
    if (problem_.views[v].matrix.kind() == MatrixKind::Dense) {
      dense_t_[v] = problem_.views[v].matrix.as_dense().transposed();
    }
  }

  nw_.assign(nmodes, NormalWishartHyper::defaults(static_cast<Eigen::Index>(k)));
  w0_inverse_.assign(nmodes, nw_[0].w0_inverse());
  features_.resize(nmodes);
  link_solvers_.resize(nmodes);
  prior_means_.assign(nmodes, Matrix());
  for (std::size_t m = 0; m < nmodes; ++m) {
    const auto& p = prior(m);
    if (p.kind == PriorKind::Macau) {
      features_[m] = std::make_unique<FeatureMatrix>(*p.side);
      link_solvers_[m] = std::make_unique<LinkSolver>(*features_[m], p.beta_precision);
    }
  }

  overlap_warnings_ = problem_.test.overlap_count(problem_.views[0].matrix);
  plan_heavy_rows();
  pool_ = std::make_unique<ThreadPool>(cfg_.threads);
  initialize();
}

Session::~Session() = default;

const PriorSpec& Session::prior(std::size_t mode) const {
  return mode == 0 ? problem_.row_prior : problem_.views[mode - 1].col_prior;
}

void Session::validate() const {
  if (cfg_.num_latent < 1) throw UsageError("num_latent must be at least 1");
  if (cfg_.nsamples < 1) throw UsageError("nsamples must be at least 1");
  if (cfg_.split_threshold < 1) throw UsageError("split threshold must be at least 1");
  if (problem_.views.empty()) throw UsageError("at least one training matrix is required");
  const std::size_t rows = problem_.views[0].matrix.rows();
  for (std::size_t v = 0; v < problem_.views.size(); ++v) {
    if (problem_.views[v].matrix.rows() != rows) {
      throw DataError("view " + std::to_string(v) + " has " +
                      std::to_string(problem_.views[v].matrix.rows()) +
                      " rows; all views must share the " + std::to_string(rows) + " rows");
    }
  }
  problem_.test.validate(rows, problem_.views[0].matrix.cols());
  for (std::size_t m = 0; m <= problem_.views.size(); ++m) {
    const auto& p = prior(m);
    const std::size_t n = m == 0 ? rows : problem_.views[m - 1].matrix.cols();
    if (p.kind == PriorKind::Macau) {
      if (!p.side) {
        throw UsageError("macau prior on mode " + std::to_string(m) +
                         " requires side information (--side-rows/--side-cols)");
      }
      if (p.side->entities() != n) {
        throw DataError("side information has " + std::to_string(p.side->entities()) +
                        " rows but mode " + std::to_string(m) + " has " + std::to_string(n) +
                        " entities");
      }
    }
  }
}

void Session::plan_heavy_rows() {
  heavy_.assign(links_.size(), {});
  for (std::size_t m = 0; m < links_.size(); ++m) {
    const std::size_t n = m == 0 ? problem_.views[0].matrix.rows()
                                 : problem_.views[m - 1].matrix.cols();
    auto& plan = heavy_[m];
    for (std::size_t li = 0; li < links_[m].size(); ++li) {
      const auto& link = links_[m][li];
      const auto& mat = problem_.views[link.view].matrix;
      if (mat.kind() != MatrixKind::SparseObserved) continue;
      const auto& sp = mat.as_sparse();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t count = link.by_col ? sp.col_count(i) : sp.row_count(i);
        if (count <= cfg_.split_threshold) continue;
        plan.offset.emplace((static_cast<std::uint64_t>(i) << 16) | li, plan.tasks.size());
        for (std::size_t c = 0; c < chunk_count(count); ++c) plan.tasks.push_back({i, li, c});
      }
    }
  }
}

void Session::initialize() {
  const auto k = static_cast<Eigen::Index>(cfg_.num_latent);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  model_.modes.assign(links_.size(), {});
  for (std::size_t m = 0; m < links_.size(); ++m) {
    auto& st = model_.modes[m];
    const auto n = static_cast<Eigen::Index>(m == 0 ? problem_.views[0].matrix.rows()
                                                    : problem_.views[m - 1].matrix.cols());
    st.factors.resize(k, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto s = stream_for(cfg_.seed, kInitIteration, static_cast<std::uint32_t>(m),
                          static_cast<std::uint64_t>(i));
      for (Eigen::Index c = 0; c < k; ++c) st.factors(c, i) = sample_normal(s) * scale;
    }
    const auto& p = prior(m);
    if (p.kind == PriorKind::SpikeAndSlab) {
      st.hyper = {Vector::Zero(k), Matrix::Identity(k, k)};
      auto s = stream_for(cfg_.seed, kInitIteration, static_cast<std::uint32_t>(m),
                          kSnsHyperStream);
      st.sns = SnSState::from_prior(k, n, p.sns, s);
    } else {
      auto s = stream_for(cfg_.seed, kInitIteration, static_cast<std::uint32_t>(m), kHyperStream);
      st.hyper = sample_hyper_prior(nw_[m], w0_inverse_[m], s);
      if (p.kind == PriorKind::Macau) {
        st.link = LinkState{Matrix::Zero(features_[m]->features(), k), p.beta_precision};
        prior_means_[m] = link_prior_means(st.hyper, st.link->beta, *features_[m]);
      }
    }
  }
  model_.noise.clear();
  for (std::size_t v = 0; v < problem_.views.size(); ++v) {
    NoiseState ns(problem_.views[v].noise);
    auto s = stream_for(cfg_.seed, kInitIteration, kNoiseMode, v);
    ns.initialize(s);
    model_.noise.push_back(ns);
  }
  agg_ = PredictionAggregate(problem_.test);
  done_ = 0;
}

void Session::restore(std::size_t iterations_done, LatentModel model, PredictionAggregate agg) {
  if (model.modes.size() != links_.size() || model.noise.size() != problem_.views.size()) {
    throw DataError("restored model does not match the problem layout");
  }
  for (std::size_t m = 0; m < links_.size(); ++m) {
    const auto& cur = model_.modes[m];
    const auto& in = model.modes[m];
    if (in.factors.rows() != cur.factors.rows() || in.factors.cols() != cur.factors.cols()) {
      throw DataError("restored factors of mode " + std::to_string(m) + " have wrong shape");
    }
    if (cur.link.has_value() != in.link.has_value() || cur.sns.has_value() != in.sns.has_value()) {
      throw DataError("restored state of mode " + std::to_string(m) + " has the wrong prior");
    }
  }
  model_ = std::move(model);
  agg_ = std::move(agg);
  done_ = iterations_done;
  for (std::size_t m = 0; m < links_.size(); ++m) {
    if (model_.modes[m].link) {
      prior_means_[m] =
          link_prior_means(model_.modes[m].hyper, model_.modes[m].link->beta, *features_[m]);
    }
  }
}

void Session::sample_mode_hyper(std::size_t mode, std::size_t iteration) {
  auto& st = model_.modes[mode];
  const auto m32 = static_cast<std::uint32_t>(mode);
  switch (prior(mode).kind) {
    case PriorKind::Normal: {
      auto s = stream_for(cfg_.seed, iteration, m32, kHyperStream);
      st.hyper = sample_hyper_normal(st.factors, nw_[mode], w0_inverse_[mode], s);
      break;
    }
    case PriorKind::Macau: {
      const auto& f = *features_[mode];
      const Matrix residual = st.factors - f.times(st.link->beta).transpose();
      auto s = stream_for(cfg_.seed, iteration, m32, kHyperStream);
      st.hyper = sample_hyper_normal(residual, nw_[mode], w0_inverse_[mode], s);
      auto sl = stream_for(cfg_.seed, iteration, m32, kLinkStream);
      st.link->beta = sample_link_matrix(st.factors, st.hyper, f, *link_solvers_[mode], sl);
      prior_means_[mode] = link_prior_means(st.hyper, st.link->beta, f);
      break;
    }
    case PriorKind::SpikeAndSlab: {
      auto s = stream_for(cfg_.seed, iteration, m32, kSnsHyperStream);
      sample_sns_hyper(*st.sns, st.factors, s);
      break;
    }
  }
}

Precision Session::entity_likelihood(std::size_t mode, std::size_t entity,
                                     const std::vector<Matrix>& shared_gram,
                                     const std::vector<PrecisionPartial>* partials) const {
  const auto k = static_cast<Eigen::Index>(cfg_.num_latent);
  Precision lik{Matrix::Zero(k, k), Vector::Zero(k)};
  const auto& links = links_[mode];
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& link = links[li];
    const auto& mat = problem_.views[link.view].matrix;
    const double alpha = model_.noise[link.view].current_precision();
    const Matrix& other = model_.modes[link.other_mode].factors;
    switch (mat.kind()) {
      case MatrixKind::SparseObserved: {
        const auto& sp = mat.as_sparse();
        const SparseLine line = link.by_col ? sp.col(entity) : sp.row(entity);
        Precision p;
        const auto& plan = heavy_[mode];
        const auto it = partials ? plan.offset.find((static_cast<std::uint64_t>(entity) << 16) | li)
                                 : plan.offset.end();
        if (it != plan.offset.end()) {
          p = combine_partials(
              std::span<const PrecisionPartial>(partials->data() + it->second,
                                                chunk_count(line.size())),
              alpha, k);
        } else {
          p = accumulate_precision(other, line, alpha);
        }
        lik.a += p.a;
        lik.b += p.b;
        break;
      }
      case MatrixKind::SparseFullyKnown: {
        const auto& sp = mat.as_sparse();
        const SparseLine line = link.by_col ? sp.col(entity) : sp.row(entity);
        Vector rhs = Vector::Zero(k);
        for (std::size_t n = 0; n < line.size(); ++n) rhs += line.value[n] * other.col(line.index[n]);
        lik.a += shared_gram[li];
        lik.b += alpha * rhs;
        break;
      }
      case MatrixKind::Dense: {
        const auto row = link.by_col ? dense_t_[link.view].row(entity)
                                     : mat.as_dense().row(entity);
        Vector rhs = Vector::Zero(k);
        for (std::size_t j = 0; j < row.size(); ++j) {
          rhs += row[j] * other.col(static_cast<Eigen::Index>(j));
        }
        lik.a += shared_gram[li];
        lik.b += alpha * rhs;
        break;
      }
    }
  }
  return lik;
}

Precision Session::likelihood(std::size_t mode, std::size_t entity) const {
  const auto& links = links_[mode];
  std::vector<Matrix> shared(links.size());
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& mat = problem_.views[links[li].view].matrix;
    if (mat.kind() != MatrixKind::SparseObserved) {
      shared[li] = model_.noise[links[li].view].current_precision() *
                   gram(model_.modes[links[li].other_mode].factors);
    }
  }
  return entity_likelihood(mode, entity, shared, nullptr);
}

void Session::check_finite(std::size_t mode, std::size_t iteration) const {
  const Matrix& f = model_.modes[mode].factors;
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    if (!f.col(i).allFinite()) {
      throw NumericalError("non-finite latent at iteration " + std::to_string(iteration + 1) +
                           ", mode " + std::to_string(mode) + ", entity " + std::to_string(i));
    }
  }
}

void Session::update_mode(std::size_t mode, std::size_t iteration) {
  const std::string where =
      "iteration " + std::to_string(iteration + 1) + ", mode " + std::to_string(mode);
  try {
    sample_mode_hyper(mode, iteration);
  } catch (const NumericalError& e) {
    throw NumericalError(where + " hyperparameters: " + e.what());
  }

  const auto k = static_cast<Eigen::Index>(cfg_.num_latent);
  auto& st = model_.modes[mode];
  const auto& links = links_[mode];

  std::vector<Matrix> shared(links.size());
  bool all_shared = !links.empty();
  Matrix shared_sum = Matrix::Zero(k, k);
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& mat = problem_.views[links[li].view].matrix;
    if (mat.kind() == MatrixKind::SparseObserved) {
      all_shared = false;
    } else {
      shared[li] = model_.noise[links[li].view].current_precision() *
                   gram(model_.modes[links[li].other_mode].factors);
      shared_sum += shared[li];
    }
  }

  const auto& plan = heavy_[mode];
  std::vector<PrecisionPartial> partials(plan.tasks.size());
  pool_->parallel_for(plan.tasks.size(), [&](std::size_t n) {
    const auto& task = plan.tasks[n];
    const auto& link = links[task.link];
    const auto& sp = problem_.views[link.view].matrix.as_sparse();
    const SparseLine line = link.by_col ? sp.col(task.entity) : sp.row(task.entity);
    partials[n] = accumulate_chunk(model_.modes[link.other_mode].factors, line, task.chunk);
  });

  const PriorKind kind = prior(mode).kind;
  std::optional<CholFactor> shared_factor;
  Vector lambda_mu;
  if (kind != PriorKind::SpikeAndSlab) {
    lambda_mu = st.hyper.lambda * st.hyper.mu;
    if (all_shared) shared_factor = chol_spd(st.hyper.lambda + shared_sum);
  }

  const auto sample_entity = [&](std::size_t i) {
    const Precision lik = entity_likelihood(mode, i, shared, &partials);
    auto s = stream_for(cfg_.seed, iteration, static_cast<std::uint32_t>(mode), i);
    const auto col = static_cast<Eigen::Index>(i);
    if (kind == PriorKind::SpikeAndSlab) {
      auto& sns = *st.sns;
      std::span<std::uint8_t> z(sns.z.data() + i * static_cast<std::size_t>(k),
                                static_cast<std::size_t>(k));
      sample_latent_sns(st.factors.col(col), z, sns.pi, sns.alpha_slab, lik, s);
      return;
    }
    Vector h = kind == PriorKind::Macau
                   ? Vector(st.hyper.lambda * prior_means_[mode].col(col) + lik.b)
                   : Vector(lambda_mu + lik.b);
    if (shared_factor) {
      st.factors.col(col) = sample_mvn_canonical(s, *shared_factor, h);
    } else {
      st.factors.col(col) = sample_mvn_canonical(s, chol_spd(st.hyper.lambda + lik.a), h);
    }
  };

  const auto n = static_cast<std::size_t>(st.factors.cols());
  pool_->parallel_for(
      n,
      [&](std::size_t i) {
        try {
          sample_entity(i);
        } catch (const NumericalError& e) {
          throw NumericalError(where + ", entity " + std::to_string(i) + ": " + e.what());
        }
      },
      8);

  check_finite(mode, iteration);
}

double Session::sum_squared_residuals(std::size_t view) const {
  const auto& mat = problem_.views[view].matrix;
  const Matrix& u = model_.modes[0].factors;
  const Matrix& v = model_.modes[view + 1].factors;
  const std::size_t rows = mat.rows();
  std::vector<double> partial(rows, 0.0);
  Matrix g;
  if (mat.kind() == MatrixKind::SparseFullyKnown) g = gram(v);

  pool_->parallel_for(
      rows,
      [&](std::size_t i) {
        const auto ui = u.col(static_cast<Eigen::Index>(i));
        double sum = 0.0;
        switch (mat.kind()) {
          case MatrixKind::SparseObserved: {
            const auto line = mat.as_sparse().row(i);
            for (std::size_t n = 0; n < line.size(); ++n) {
              const double e = line.value[n] - ui.dot(v.col(line.index[n]));
              sum += e * e;
            }
            break;
          }
          case MatrixKind::SparseFullyKnown: {
            // stored cells exactly, absent cells as zeros via u^T G u
            const auto line = mat.as_sparse().row(i);
            for (std::size_t n = 0; n < line.size(); ++n) {
              const double p = ui.dot(v.col(line.index[n]));
              const double e = line.value[n] - p;
              sum += e * e - p * p;
            }
            sum += ui.dot(g * ui);
            if (sum < 0.0) sum = 0.0;
            break;
          }
          case MatrixKind::Dense: {
            const auto row = mat.as_dense().row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
              const double e = row[j] - ui.dot(v.col(static_cast<Eigen::Index>(j)));
              sum += e * e;
            }
            break;
          }
        }
        partial[i] = sum;
      },
      16);

  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

std::vector<double> Session::predict_test() const {
  const auto& cells = problem_.test.cells;
  std::vector<double> out(cells.size());
  const Matrix& u = model_.modes[0].factors;
  const Matrix& v = model_.modes[1].factors;
  pool_->parallel_for(
      cells.size(),
      [&](std::size_t n) {
        out[n] = u.col(static_cast<Eigen::Index>(cells[n].row))
                     .dot(v.col(static_cast<Eigen::Index>(cells[n].col)));
      },
      256);
  return out;
}

IterationRecord Session::step() {
  const std::size_t t = done_;
  if (t >= kInitIteration) throw UsageError("iteration count exceeds the stream key range");

  for (std::size_t m = 1; m < links_.size(); ++m) update_mode(m, t);
  update_mode(0, t);

  IterationRecord rec;
  rec.iteration = t + 1;
  rec.burnin = t < cfg_.burnin;
  for (std::size_t v = 0; v < problem_.views.size(); ++v) {
    auto& noise = model_.noise[v];
    if (noise.adaptive()) {
      auto s = stream_for(cfg_.seed, t, kNoiseMode, v);
      noise.update_precision(sum_squared_residuals(v), problem_.views[v].matrix.likelihood_cells(),
                             s);
    }
    rec.alpha.push_back(noise.current_precision());
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.rmse_avg = nan;
  rec.rmse_sample = nan;
  if (!problem_.test.empty()) {
    const auto preds = predict_test();
    double sum = 0.0;
    for (std::size_t n = 0; n < preds.size(); ++n) {
      const double e = preds[n] - problem_.test.cells[n].value;
      sum += e * e;
    }
    rec.rmse_sample = std::sqrt(sum / static_cast<double>(preds.size()));
    if (!rec.burnin) {
      agg_.add(preds);
      rec.rmse_avg = rmse(agg_, problem_.test);
    }
  }
  done_ = t + 1;
  return rec;
}

std::vector<IterationRecord> Session::run(
    const std::function<void(const IterationRecord&, const Session&)>& on_iteration) {
  std::vector<IterationRecord> trace;
  while (done_ < total_iterations()) {
    trace.push_back(step());
    if (on_iteration) on_iteration(trace.back(), *this);
  }
  return trace;
}

}  // namespace gibbsmf
