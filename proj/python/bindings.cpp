#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gibbsmf/bench.hpp"
#include "gibbsmf/config.hpp"
#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"
#include "gibbsmf/sampler.hpp"
#include "gibbsmf/snapshot.hpp"
#include "gibbsmf/synthetic.hpp"
#include "gibbsmf/trace.hpp"

namespace py = pybind11;
using namespace gibbsmf;

namespace {

using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Triplet> triplets_from(const IndexArray& rows, const IndexArray& cols,
                                   const RealArray& values) {
  if (rows.ndim() != 1 || cols.ndim() != 1 || values.ndim() != 1 || rows.size() != cols.size() ||
      rows.size() != values.size()) {
    throw std::invalid_argument("rows, cols and values must be 1-D arrays of equal length");
  }
  const auto r = rows.unchecked<1>();
  const auto c = cols.unchecked<1>();
  const auto v = values.unchecked<1>();
  std::vector<Triplet> out(static_cast<std::size_t>(rows.size()));
  for (py::ssize_t n = 0; n < rows.size(); ++n) {
    if (r(n) < 0 || c(n) < 0) throw std::invalid_argument("indices must be non-negative");
    out[static_cast<std::size_t>(n)] = {static_cast<std::size_t>(r(n)),
                                        static_cast<std::size_t>(c(n)), v(n)};
  }
  return out;
}

py::tuple split_triplets(const std::vector<Triplet>& t) {
  IndexArray rows(static_cast<py::ssize_t>(t.size()));
  IndexArray cols(static_cast<py::ssize_t>(t.size()));
  RealArray vals(static_cast<py::ssize_t>(t.size()));
  auto r = rows.mutable_unchecked<1>();
  auto c = cols.mutable_unchecked<1>();
  auto v = vals.mutable_unchecked<1>();
  for (std::size_t n = 0; n < t.size(); ++n) {
    const auto i = static_cast<py::ssize_t>(n);
    r(i) = static_cast<std::int64_t>(t[n].row);
    c(i) = static_cast<std::int64_t>(t[n].col);
    v(i) = t[n].value;
  }
  return py::make_tuple(rows, cols, vals);
}

py::dict record_dict(const IterationRecord& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["phase"] = r.burnin ? "burnin" : "sample";
  d["rmse_avg"] = r.rmse_avg;
  d["rmse_1sample"] = r.rmse_sample;
  d["alpha"] = r.alpha;
  return d;
}

SessionConfig make_config(int num_latent, std::size_t burnin, std::size_t nsamples,
                          std::uint64_t seed, std::size_t threads, std::size_t split_threshold) {
  SessionConfig c;
  c.num_latent = num_latent;
  c.burnin = burnin;
  c.nsamples = nsamples;
  c.seed = seed;
  c.threads = threads;
  c.split_threshold = split_threshold;
  return c;
}

std::optional<SideInfo> side_from(const std::optional<Matrix>& f) {
  if (!f) return std::nullopt;
  DenseMatrix d(static_cast<std::size_t>(f->rows()), static_cast<std::size_t>(f->cols()));
  for (Eigen::Index i = 0; i < f->rows(); ++i)
    for (Eigen::Index j = 0; j < f->cols(); ++j)
      d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = (*f)(i, j);
  return SideInfo(std::move(d));
}

std::unique_ptr<Session> session_from_arrays(
    std::size_t n_rows, std::size_t n_cols, const IndexArray& rows, const IndexArray& cols,
    const RealArray& values, std::optional<IndexArray> test_rows,
    std::optional<IndexArray> test_cols, std::optional<RealArray> test_values,
    const std::string& preset, const std::string& prior_rows, const std::string& prior_cols,
    const std::optional<Matrix>& side_rows, const std::optional<Matrix>& side_cols,
    double beta_precision, const std::string& noise, int num_latent, std::size_t burnin,
    std::size_t nsamples, std::uint64_t seed, std::size_t threads, std::size_t split_threshold) {
  Problem p;
  p.views.push_back({DataMatrix::observed(
      SparseMatrix::from_triplets(n_rows, n_cols, triplets_from(rows, cols, values)))});
  if (test_rows || test_cols || test_values) {
    if (!(test_rows && test_cols && test_values)) {
      throw std::invalid_argument("test_rows, test_cols and test_values go together");
    }
    p.test.cells = triplets_from(*test_rows, *test_cols, *test_values);
  }
  TrainOptions o;
  o.preset = preset;
  o.prior_rows = prior_rows;
  o.prior_cols = prior_cols;
  o.beta_precision = beta_precision;
  o.noise = noise;
  resolve_priors(o, p, side_from(side_rows), side_from(side_cols));
  return std::make_unique<Session>(
      make_config(num_latent, burnin, nsamples, seed, threads, split_threshold), std::move(p));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian matrix factorization by Gibbs sampling";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Session>(m, "Session")
      .def(py::init(&session_from_arrays), py::arg("n_rows"), py::arg("n_cols"), py::arg("rows"),
           py::arg("cols"), py::arg("values"), py::arg("test_rows") = py::none(),
           py::arg("test_cols") = py::none(), py::arg("test_values") = py::none(),
           py::arg("preset") = "bmf", py::arg("prior_rows") = "", py::arg("prior_cols") = "",
           py::arg("side_rows") = py::none(), py::arg("side_cols") = py::none(),
           py::arg("beta_precision") = 1.0, py::arg("noise") = "", py::arg("num_latent") = 16,
           py::arg("burnin") = 200, py::arg("nsamples") = 800, py::arg("seed") = 0,
           py::arg("threads") = 1, py::arg("split_threshold") = 4096,
           "Session over one sparse matrix given as 0-based (rows, cols, values) arrays.")
      .def_static(
          "from_files",
          [](const std::string& train, const std::string& test, const std::string& preset,
             const std::string& noise, int num_latent, std::size_t burnin, std::size_t nsamples,
             std::uint64_t seed, std::size_t threads) {
            TrainOptions o;
            o.train = train;
            o.test = test;
            o.preset = preset;
            o.noise = noise;
            o.num_latent = num_latent;
            o.burnin = burnin;
            o.nsamples = nsamples;
            o.seed = seed;
            o.threads = threads;
            TrainSetup s = build_train_setup(o);
            return std::make_unique<Session>(s.config, std::move(s.problem));
          },
          py::arg("train"), py::arg("test") = "", py::arg("preset") = "bmf",
          py::arg("noise") = "", py::arg("num_latent") = 16, py::arg("burnin") = 200,
          py::arg("nsamples") = 800, py::arg("seed") = 0, py::arg("threads") = 1)
      .def("step",
           [](Session& s) {
             IterationRecord r;
             {
               py::gil_scoped_release release;
               r = s.step();
             }
             return record_dict(r);
           })
      .def(
          "run",
          [](Session& s) {
            std::vector<IterationRecord> trace;
            {
              py::gil_scoped_release release;
              trace = s.run();
            }
            py::list out;
            for (const auto& r : trace) out.append(record_dict(r));
            return out;
          },
          "Runs the remaining iterations; returns one dict per iteration.")
      .def_property_readonly("iterations_done", &Session::iterations_done)
      .def_property_readonly("total_iterations", &Session::total_iterations)
      .def(
          "factors", [](const Session& s, std::size_t mode) -> Matrix {
            if (mode >= s.mode_count()) throw py::index_error("mode out of range");
            return s.model().modes[mode].factors;
          },
          py::arg("mode"), "K x entities factor matrix (mode 0 rows, mode 1 columns).")
      .def("noise_precision",
           [](const Session& s, std::size_t view) {
             if (view >= s.model().noise.size()) throw py::index_error("view out of range");
             return s.model().noise[view].current_precision();
           },
           py::arg("view") = 0)
      .def("predict", [](const Session& s, std::size_t i, std::size_t j) {
        return s.aggregate().predict(i, j);
      })
      .def("rmse", [](const Session& s) { return rmse(s.aggregate(), s.problem().test); })
      .def("save", [](const Session& s, const std::string& dir) { write_snapshot(s, dir); })
      .def("load", [](Session& s, const std::string& dir) { read_snapshot(dir, s); });

  m.def(
      "predict",
      [](const std::string& model, const std::vector<std::pair<std::size_t, std::size_t>>& q) {
        const auto preds = predict_from_snapshot(model, q);
        Matrix out(static_cast<Eigen::Index>(preds.size()), 2);
        for (std::size_t n = 0; n < preds.size(); ++n) {
          out(static_cast<Eigen::Index>(n), 0) = preds[n].mean;
          out(static_cast<Eigen::Index>(n), 1) = preds[n].sd;
        }
        return out;
      },
      py::arg("model"), py::arg("queries"),
      "Mean and std per (i, j) query from a saved model directory.");

  m.def(
      "read_matrix_market",
      [](const std::string& path) -> py::object {
        if (peek_matrix_market(path) == MarketLayout::Array) return py::cast(read_array(path));
        const auto mat = read_matrix_market(path, MatrixKind::SparseObserved).as_sparse();
        return py::make_tuple(py::make_tuple(mat.rows(), mat.cols()),
                              split_triplets(mat.triplets()));
      },
      py::arg("path"),
      "Array files give a 2-D array; coordinate files give ((rows, cols), (i, j, v)).");
  m.def(
      "write_coordinate",
      [](const std::string& path, std::size_t n_rows, std::size_t n_cols, const IndexArray& rows,
         const IndexArray& cols, const RealArray& values) {
        write_coordinate(path,
                         SparseMatrix::from_triplets(n_rows, n_cols, triplets_from(rows, cols, values)));
      },
      py::arg("path"), py::arg("n_rows"), py::arg("n_cols"), py::arg("rows"), py::arg("cols"),
      py::arg("values"));
  m.def("write_array", py::overload_cast<const std::string&, const Matrix&>(&write_array),
        py::arg("path"), py::arg("matrix"));

  m.def(
      "synthetic",
      [](std::size_t n_rows, std::size_t n_cols, int k, std::size_t train_cells,
         std::size_t test_cells, double noise_sd, std::uint64_t seed) {
        const auto truth = random_low_rank(n_rows, n_cols, k, seed);
        SyntheticOptions so;
        so.train_cells = train_cells;
        so.test_cells = test_cells;
        so.noise_sd = noise_sd;
        so.seed = seed;
        const auto split = sample_cells(truth, so);
        py::dict d;
        d["train"] = split_triplets(split.train.triplets());
        d["test"] = split_triplets(split.test.cells);
        d["u"] = truth.u;
        d["v"] = truth.v;
        return d;
      },
      py::arg("n_rows"), py::arg("n_cols"), py::arg("k"), py::arg("train_cells"),
      py::arg("test_cells"), py::arg("noise_sd") = 0.0, py::arg("seed") = 0,
      "Known low-rank matrix with a random train/test split of its cells.");

  m.def(
      "bench",
      [](const std::string& kernel, int num_latent, std::size_t reps, std::size_t entries,
         std::vector<std::size_t> split_thresholds, std::size_t rows, std::size_t cols,
         std::size_t nnz, std::vector<std::size_t> threads, std::uint64_t seed) {
        BenchOptions o;
        o.kernel = kernel;
        o.num_latent = num_latent;
        o.reps = reps;
        o.entries = entries;
        o.split_thresholds = std::move(split_thresholds);
        o.rows = rows;
        o.cols = cols;
        o.nnz = nnz;
        o.threads = std::move(threads);
        o.seed = seed;
        std::vector<BenchRow> result;
        {
          py::gil_scoped_release release;
          result = run_bench(o);
        }
        py::list out;
        for (const auto& r : result) {
          py::dict d;
          d["kernel"] = r.kernel;
          d["num_latent"] = r.num_latent;
          d["param"] = r.param;
          d["reps"] = r.reps;
          d["min_s"] = r.min_s;
          d["median_s"] = r.median_s;
          d["throughput_per_s"] = r.throughput;
          d["speedup"] = r.speedup;
          d["checksum"] = r.checksum;
          out.append(d);
        }
        return out;
      },
      py::arg("kernel"), py::arg("num_latent") = 32, py::arg("reps") = 100,
      py::arg("entries") = 100000, py::arg("split_thresholds") = std::vector<std::size_t>{4096},
      py::arg("rows") = 20000, py::arg("cols") = 20000, py::arg("nnz") = 2000000,
      py::arg("threads") = std::vector<std::size_t>{1}, py::arg("seed") = 1);
}
