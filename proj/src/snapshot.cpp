#include "gibbsmf/snapshot.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/io.hpp"

namespace fs = std::filesystem;

namespace gibbsmf {

namespace {

class Fnv1a {
 public:
  void add(const std::string& s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001b3ull;
    }
    h_ ^= 0xff;  // field separator
    h_ *= 0x100000001b3ull;
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

std::string mode_file(std::size_t m, const std::string& what) {
  return "mode" + std::to_string(m) + "-" + what + ".mtx";
}

Matrix read_component(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  if (!fs::exists(p)) {
    throw DataError(p.string() + ": missing snapshot component (snapshot is incomplete; "
                    "re-run training or point --resume at a complete snapshot)");
  }
  return read_array(p.string());
}

Matrix column(const Vector& v) { return Matrix(v); }

}  // namespace

std::uint64_t config_digest(const SessionConfig& cfg, const Problem& problem) {
  Fnv1a h;
  h.add("version=" + std::to_string(kSnapshotVersion));
  h.add("num_latent=" + std::to_string(cfg.num_latent));
  h.add("seed=" + std::to_string(cfg.seed));
  h.add("burnin=" + std::to_string(cfg.burnin));
  const auto add_prior = [&](const PriorSpec& p) {
    h.add(std::string("prior=") + to_string(p.kind));
    if (p.kind == PriorKind::Macau) {
      h.add("beta_precision=" + format_real(p.beta_precision));
      h.add("side=" + std::to_string(p.side->entities()) + "x" +
            std::to_string(p.side->features()));
    }
    if (p.kind == PriorKind::SpikeAndSlab) {
      h.add("sns=" + format_real(p.sns.a) + "," + format_real(p.sns.b) + "," +
            format_real(p.sns.c) + "," + format_real(p.sns.d));
    }
  };
  add_prior(problem.row_prior);
  for (const auto& v : problem.views) {
    h.add(std::string("kind=") + to_string(v.matrix.kind()));
    h.add("shape=" + std::to_string(v.matrix.rows()) + "x" + std::to_string(v.matrix.cols()) +
          ":" + std::to_string(v.matrix.likelihood_cells()));
    h.add("noise=" + format_noise_spec(v.noise));
    add_prior(v.col_prior);
  }
  h.add("test=" + std::to_string(problem.test.size()));
  return h.value();
}

const std::string& Manifest::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) {
    throw DataError("snapshot manifest lacks '" + key + "' (snapshot is incomplete or corrupt)");
  }
  return it->second;
}

Manifest Manifest::read(const std::string& dir) {
  const fs::path p = fs::path(dir) / "manifest.txt";
  std::ifstream in(p);
  if (!in) {
    throw DataError(p.string() + ": missing snapshot manifest (point at a directory written by "
                    "--save-prefix or --checkpoint-every)");
  }
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(p.string() + ":" + std::to_string(lineno) +
                      ": expected key=value (manifest is corrupt)");
    }
    m.values[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void write_snapshot(const Session& session, const std::string& dir_name) {
  const fs::path dir(dir_name);
  fs::create_directories(dir);
  const auto& model = session.model();
  const auto& agg = session.aggregate();

  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    const auto& st = model.modes[m];
    write_array((dir / mode_file(m, "latents")).string(), st.factors);
    write_array((dir / mode_file(m, "hyper-mu")).string(), column(st.hyper.mu));
    write_array((dir / mode_file(m, "hyper-lambda")).string(), st.hyper.lambda);
    if (st.link) write_array((dir / mode_file(m, "link-beta")).string(), st.link->beta);
    if (st.sns) {
      write_array((dir / mode_file(m, "sns-pi")).string(), column(st.sns->pi));
      write_array((dir / mode_file(m, "sns-alpha")).string(), column(st.sns->alpha_slab));
      write_array((dir / mode_file(m, "sns-z")).string(), Matrix(st.sns->z.cast<double>()));
    }
  }
  for (std::size_t v = 0; v < model.noise.size(); ++v) {
    Matrix a(1, 1);
    a(0, 0) = model.noise[v].current_precision();
    write_array((dir / ("view" + std::to_string(v) + "-noise.mtx")).string(), a);
  }
  if (agg.size() > 0) {
    const auto n = static_cast<Eigen::Index>(agg.size());
    write_array((dir / "predictions-mean.mtx").string(),
                Matrix(Eigen::Map<const Vector>(agg.means().data(), n)));
    write_array((dir / "predictions-m2.mtx").string(),
                Matrix(Eigen::Map<const Vector>(agg.squared_deviations().data(), n)));
  }

  double current_rmse = std::numeric_limits<double>::quiet_NaN();
  if (agg.count() > 0 && agg.size() > 0) current_rmse = rmse(agg, session.problem().test);

  // manifest last, so a complete manifest implies complete components
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw DataError((dir / "manifest.txt").string() + ": cannot write snapshot manifest");
  out << "version=" << kSnapshotVersion << '\n'
      << "iteration=" << session.iterations_done() << '\n'
      << "seed=" << session.config().seed << '\n'
      << "num_latent=" << session.config().num_latent << '\n'
      << "rmse=" << format_real(current_rmse) << '\n'
      << "config_digest=" << hex(config_digest(session.config(), session.problem())) << '\n'
      << "modes=" << model.modes.size() << '\n'
      << "views=" << model.noise.size() << '\n'
      << "aggregate_count=" << agg.count() << '\n';
}

void read_snapshot(const std::string& dir_name, Session& session) {
  const fs::path dir(dir_name);
  const Manifest man = Manifest::read(dir_name);
  if (man.at("version") != std::to_string(kSnapshotVersion)) {
    throw DataError(dir_name + ": snapshot version " + man.at("version") + " is not supported (" +
                    "expected " + std::to_string(kSnapshotVersion) + ")");
  }
  const std::string expected = hex(config_digest(session.config(), session.problem()));
  if (man.at("config_digest") != expected) {
    throw DataError(dir_name + ": config digest " + man.at("config_digest") +
                    " does not match the current configuration " + expected +
                    " (resume with the same data, priors, noise, K, seed and burn-in)");
  }

  LatentModel model = session.model();
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    auto& st = model.modes[m];
    st.factors = read_component(dir, mode_file(m, "latents"));
    st.hyper.mu = read_component(dir, mode_file(m, "hyper-mu")).col(0);
    st.hyper.lambda = read_component(dir, mode_file(m, "hyper-lambda"));
    if (st.link) st.link->beta = read_component(dir, mode_file(m, "link-beta"));
    if (st.sns) {
      st.sns->pi = read_component(dir, mode_file(m, "sns-pi")).col(0);
      st.sns->alpha_slab = read_component(dir, mode_file(m, "sns-alpha")).col(0);
      st.sns->z = read_component(dir, mode_file(m, "sns-z")).cast<std::uint8_t>();
    }
  }
  for (std::size_t v = 0; v < model.noise.size(); ++v) {
    model.noise[v].set_precision(
        read_component(dir, "view" + std::to_string(v) + "-noise.mtx")(0, 0));
  }

  PredictionAggregate agg(session.problem().test);
  if (agg.size() > 0) {
    const Matrix mean = read_component(dir, "predictions-mean.mtx");
    const Matrix m2 = read_component(dir, "predictions-m2.mtx");
    agg.restore(std::vector<double>(mean.data(), mean.data() + mean.size()),
                std::vector<double>(m2.data(), m2.data() + m2.size()),
                std::stoull(man.at("aggregate_count")));
  }
  session.restore(std::stoull(man.at("iteration")), std::move(model), std::move(agg));
}

void write_sample(const Session& session, const std::string& dir_name) {
  const fs::path dir(dir_name);
  fs::create_directories(dir);
  write_array((dir / mode_file(0, "latents")).string(), session.model().modes[0].factors);
  write_array((dir / mode_file(1, "latents")).string(), session.model().modes[1].factors);
}

}  // namespace gibbsmf
