// gibbsmf command line: train, predict, bench.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "gibbsmf/bench.hpp"
#include "gibbsmf/config.hpp"
#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"
#include "gibbsmf/sampler.hpp"
#include "gibbsmf/snapshot.hpp"
#include "gibbsmf/trace.hpp"

namespace fs = std::filesystem;
using namespace gibbsmf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string key_of(const std::string& flag) {
  std::string k = flag;
  for (char& c : k) {
    if (c == '-') c = '_';
  }
  return k;
}

struct TrainCommand {
  TrainOptions opts;
  std::string config;
  std::vector<CLI::Option*> options;

  void add(CLI::App& app) {
    const auto reg = [&](CLI::Option* o) { options.push_back(o); };
    reg(app.add_option("--train", opts.train, "Training matrix (Matrix Market; fully-known: prefix "
                                              "for a sparse matrix without unknowns)"));
    reg(app.add_option("--test", opts.test, "Held-out cells of the first view (coordinate file)"));
    reg(app.add_option("--preset", opts.preset, "bmf | macau | gfa"));
    reg(app.add_option("--view", opts.view, "Additional view sharing the rows (repeatable)"));
    reg(app.add_option("--prior-rows", opts.prior_rows, "normal | macau | spikeandslab"));
    reg(app.add_option("--prior-cols", opts.prior_cols, "normal | macau | spikeandslab"));
    reg(app.add_option("--side-rows", opts.side_rows, "Row features (Matrix Market)"));
    reg(app.add_option("--side-cols", opts.side_cols, "Column features (Matrix Market)"));
    reg(app.add_option("--beta-precision", opts.beta_precision, "Link-matrix precision")
            ->capture_default_str());
    reg(app.add_option("--noise", opts.noise, "fixed:<alpha> | adaptive:<a0>:<b0>"));
    reg(app.add_option("--num-latent", opts.num_latent, "Latent dimension K")->capture_default_str());
    reg(app.add_option("--burnin", opts.burnin, "Burn-in iterations")->capture_default_str());
    reg(app.add_option("--nsamples", opts.nsamples, "Collected samples")->capture_default_str());
    reg(app.add_option("--seed", opts.seed, "Random seed")->capture_default_str());
    reg(app.add_option("--threads", opts.threads, "Worker threads (0 = all cores)")
            ->capture_default_str());
    reg(app.add_option("--split-threshold", opts.split_threshold,
                       "Observation count above which an entity is accumulated in parallel chunks")
            ->capture_default_str());
    reg(app.add_option("--save-prefix", opts.save_prefix,
                       "Directory for the final snapshot, samples and predictions.csv"));
    reg(app.add_option("--checkpoint-every", opts.checkpoint_every,
                       "Write a snapshot to --save-prefix every n iterations (0 = off)")
            ->capture_default_str());
    reg(app.add_option("--csv-trace", opts.csv_trace, "Per-iteration CSV trace"));
    reg(app.add_option("--resume", opts.resume, "Snapshot directory to continue from"));
    app.add_option("--config", config, "key = value file; keys mirror the flags (num_latent)");
  }

  int run() {
    if (!config.empty()) {
      std::set<std::string> set_by_flags;
      for (auto* o : options) {
        if (o->count() > 0) set_by_flags.insert(key_of(o->get_name().substr(2)));
      }
      apply_config(opts, parse_config_file(config), set_by_flags);
    }
    if (opts.checkpoint_every > 0 && opts.save_prefix.empty()) {
      throw UsageError("train: --checkpoint-every needs --save-prefix");
    }

    TrainSetup setup = build_train_setup(opts);
    Session session(setup.config, setup.problem);
    if (!opts.resume.empty()) read_snapshot(opts.resume, session);
    if (session.test_overlap_warnings() > 0) {
      std::cerr << "warning: " << session.test_overlap_warnings()
                << " test cells are also training cells\n";
    }

    std::ofstream trace;
    if (!opts.csv_trace.empty()) {
      const bool append = !opts.resume.empty() && fs::exists(opts.csv_trace) &&
                          fs::file_size(opts.csv_trace) > 0;
      trace.open(opts.csv_trace, append ? std::ios::app : std::ios::trunc);
      if (!trace) throw DataError(opts.csv_trace + ": cannot open for writing (check the path)");
      if (!append) trace << csv_trace_header(setup.problem.views.size()) << '\n';
    }

    const bool saving = !opts.save_prefix.empty();
    if (saving) fs::create_directories(opts.save_prefix);
    session.run([&](const IterationRecord& rec, const Session& s) {
      std::cout << format_progress(rec) << '\n';
      if (trace.is_open()) trace << csv_trace_line(rec) << '\n';
      if (!saving) return;
      if (!rec.burnin) {
        char name[32];
        std::snprintf(name, sizeof name, "sample-%06zu", rec.iteration);
        write_sample(s, (fs::path(opts.save_prefix) / "samples" / name).string());
      }
      if (opts.checkpoint_every > 0 && rec.iteration % opts.checkpoint_every == 0) {
        write_snapshot(s, opts.save_prefix);
      }
    });
    std::cout.flush();

    if (saving) {
      write_snapshot(session, opts.save_prefix);
      const auto& agg = session.aggregate();
      if (agg.count() > 0 && agg.size() > 0) {
        std::ofstream out(fs::path(opts.save_prefix) / "predictions.csv");
        out << "i,j,mean,std\n";
        for (std::size_t n = 0; n < agg.size(); ++n) {
          const auto [mean, sd] = agg.predict_index(n);
          out << agg.cells()[n].row << ',' << agg.cells()[n].col << ',' << format_real(mean) << ','
              << format_real(sd) << '\n';
        }
      }
    }
    return 0;
  }
};

struct PredictCommand {
  std::string model;
  std::string queries;

  void add(CLI::App& app) {
    app.add_option("--model", model, "Snapshot directory (--save-prefix of a train run)")
        ->required();
    app.add_option("--queries", queries, "CSV of 0-based i,j pairs")->required();
  }

  int run() const {
    const auto preds = predict_from_snapshot(model, read_queries(queries));
    std::cout << "i,j,mean,std\n";
    for (const auto& p : preds) {
      std::cout << p.row << ',' << p.col << ',' << format_real(p.mean) << ',' << format_real(p.sd)
                << '\n';
    }
    return 0;
  }
};

struct BenchCommand {
  BenchOptions opts;

  void add(CLI::App& app) {
    app.add_option("--kernel", opts.kernel, "accumulate | cholesky | full-iteration")->required();
    app.add_option("--num-latent", opts.num_latent, "K")->capture_default_str();
    app.add_option("--reps", opts.reps, "Timed repetitions")->capture_default_str();
    app.add_option("--entries", opts.entries, "accumulate: observations of the heavy entity")
        ->capture_default_str();
    app.add_option("--split-threshold", opts.split_thresholds, "accumulate: thresholds to sweep")
        ->delimiter(',');
    app.add_option("--rows", opts.rows, "full-iteration: rows")->capture_default_str();
    app.add_option("--cols", opts.cols, "full-iteration: columns")->capture_default_str();
    app.add_option("--nnz", opts.nnz, "full-iteration: observed cells")->capture_default_str();
    app.add_option("--threads", opts.threads, "Thread counts, e.g. 1,2,4,8")->delimiter(',');
    app.add_option("--seed", opts.seed, "Random seed")->capture_default_str();
  }

  int run() const {
    std::cout << bench_csv_header() << '\n';
    for (const auto& row : run_bench(opts)) std::cout << bench_csv_line(row) << '\n';
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian matrix factorization by Gibbs sampling"};
  app.require_subcommand(1);
  TrainCommand train;
  PredictCommand predict;
  BenchCommand bench;
  auto* train_app = app.add_subcommand("train", "Run the sampler on a training matrix");
  auto* predict_app = app.add_subcommand("predict", "Predict cells from a saved model");
  auto* bench_app = app.add_subcommand("bench", "Time a kernel");
  train.add(*train_app);
  predict.add(*predict_app);
  bench.add(*bench_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (train_app->parsed()) return train.run();
    if (predict_app->parsed()) return predict.run();
    return bench.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
