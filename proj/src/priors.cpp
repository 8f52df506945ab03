#include "gibbsmf/priors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

NormalWishartHyper NormalWishartHyper::defaults(Eigen::Index k) {
  NormalWishartHyper hp;
  hp.mu0 = Vector::Zero(k);
  hp.beta0 = 2.0;
  hp.w0 = Matrix::Identity(k, k);
  hp.nu0 = static_cast<double>(k);
  return hp;
}

Matrix NormalWishartHyper::w0_inverse() const {
  return chol_spd(w0).solve(Matrix(Matrix::Identity(w0.rows(), w0.cols())));
}

NormalWishartPosterior normal_wishart_posterior(const Matrix& u, const NormalWishartHyper& hp,
                                                const Matrix& w0_inverse) {
  const Eigen::Index k = u.rows();
  const Eigen::Index n = u.cols();
  const double nd = static_cast<double>(n);

  NormalWishartPosterior post;
  post.beta = hp.beta0 + nd;
  post.nu = hp.nu0 + nd;
  if (n == 0) {
    post.mu = hp.mu0;
    post.w_inverse = w0_inverse;
    return post;
  }

  Vector mean = Vector::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) mean += u.col(i);
  mean /= nd;

  Matrix scatter = Matrix::Zero(k, k);
  Vector centered(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered = u.col(i) - mean;
    for (Eigen::Index c = 0; c < k; ++c)
      for (Eigen::Index r = c; r < k; ++r) scatter(r, c) += centered[r] * centered[c];
  }
  mirror_lower(scatter);

  post.mu = (hp.beta0 * hp.mu0 + nd * mean) / post.beta;
  const Vector shift = mean - hp.mu0;
  post.w_inverse = w0_inverse + scatter + (hp.beta0 * nd / post.beta) * (shift * shift.transpose());
  mirror_lower(post.w_inverse);
  return post;
}

namespace {

ModeHyper draw_normal_wishart(const Vector& mu, double beta, const Matrix& w_inverse, double nu,
                              RngStream& s) {
  ModeHyper h;
  h.lambda = sample_wishart_from_inverse_scale(s, w_inverse, nu);
  const Matrix precision = beta * h.lambda;
  h.mu = sample_mvn_canonical(s, precision, Vector(precision * mu));
  return h;
}

}  // namespace

ModeHyper sample_hyper_normal(const Matrix& u, const NormalWishartHyper& hp,
                              const Matrix& w0_inverse, RngStream& s) {
  const auto post = normal_wishart_posterior(u, hp, w0_inverse);
  return draw_normal_wishart(post.mu, post.beta, post.w_inverse, post.nu, s);
}

ModeHyper sample_hyper_prior(const NormalWishartHyper& hp, const Matrix& w0_inverse,
                             RngStream& s) {
  return draw_normal_wishart(hp.mu0, hp.beta0, w0_inverse, hp.nu0, s);
}

Vector sample_latent_normal(const Vector& prior_mean, const Matrix& lambda, const Precision& lik,
                            RngStream& s, bool with_noise) {
  Matrix p = lambda + lik.a;
  const Vector h = lambda * prior_mean + lik.b;
  return sample_mvn_canonical(s, chol_spd(p), h, with_noise);
}

// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(const SideInfo& side)
    : n_(static_cast<Eigen::Index>(side.entities())),
      d_(static_cast<Eigen::Index>(side.features())) {
  if (side.is_sparse()) {
    const auto& m = side.sparse();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.nnz());
    for (const auto& t : m.triplets()) {
      trips.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> s(n_, d_);
    s.setFromTriplets(trips.begin(), trips.end());
    sparse_ = std::move(s);
  } else {
    const auto& m = side.dense();
    Matrix d(n_, d_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = 0; j < d_; ++j) d(i, j) = m(i, j);
    dense_ = std::move(d);
  }
}

Matrix FeatureMatrix::times(const Matrix& x) const {
  if (sparse_) return *sparse_ * x;
  return *dense_ * x;
}

Matrix FeatureMatrix::transpose_times(const Matrix& y) const {
  if (sparse_) return sparse_->transpose() * y;
  return dense_->transpose() * y;
}

Matrix FeatureMatrix::gram() const {
  Matrix g;
  if (sparse_) {
    g = Matrix(sparse_->transpose() * Matrix(*sparse_));
  } else {
    g = dense_->transpose() * *dense_;
  }
  mirror_lower(g);
  return g;
}

LinkSolver::LinkSolver(const FeatureMatrix& f, double lambda_beta)
    : f_(&f), lambda_beta_(lambda_beta) {
  if (!(lambda_beta > 0.0)) {
    throw UsageError("beta precision must be positive, got " + std::to_string(lambda_beta));
  }
  if (!f.is_sparse() || f.features() <= kDirectLimit) {
    Matrix g = f.gram();
    g.diagonal().array() += lambda_beta;
    factor_ = chol_spd(g);
  }
}

Matrix LinkSolver::solve(const Matrix& rhs) const {
  if (factor_) return factor_->solve(rhs);

  // Conjugate gradients on x -> F^T F x + lambda x, one column at a time.
  const auto apply = [&](const Vector& x) -> Vector {
    return f_->transpose_times(f_->times(x)).col(0) + lambda_beta_ * x;
  };
  Matrix out(rhs.rows(), rhs.cols());
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    const Vector b = rhs.col(c);
    const double bnorm = b.norm();
    Vector x = Vector::Zero(b.size());
    if (bnorm == 0.0) {
      out.col(c) = x;
      continue;
    }
    Vector r = b;
    Vector p = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < kCgMaxIterations && std::sqrt(rr) > kCgTolerance * bnorm; ++it) {
      const Vector ap = apply(p);
      const double step = rr / p.dot(ap);
      x += step * p;
      r -= step * ap;
      const double rr_next = r.squaredNorm();
      p = r + (rr_next / rr) * p;
      rr = rr_next;
    }
    out.col(c) = x;
  }
  return out;
}

Matrix sample_link_matrix(const Matrix& u, const ModeHyper& hyper, const FeatureMatrix& f,
                          const LinkSolver& solver, RngStream& s) {
  const Eigen::Index k = u.rows();
  const Eigen::Index n = u.cols();
  const Eigen::Index d = f.features();
  if (f.entities() != n) {
    throw DataError("side information has " + std::to_string(f.entities()) +
                    " rows but the mode has " + std::to_string(n) + " entities");
  }
  const CholFactor l = chol_spd(hyper.lambda);
  const auto lower = l.lower().triangularView<Eigen::Lower>();

  // Transposed layout (K x N): column i is u_i - mu + L^{-1} e_i.
  Matrix noise1(k, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) noise1(c, i) = sample_normal(s);
  Matrix target = lower.solve(noise1);
  target += u;
  target.colwise() -= hyper.mu;

  Matrix noise2(k, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index c = 0; c < k; ++c) noise2(c, j) = sample_normal(s);
  const Matrix prior_part = lower.solve(noise2);

  Matrix rhs = f.transpose_times(target.transpose());
  rhs += std::sqrt(solver.lambda_beta()) * prior_part.transpose();
  return solver.solve(rhs);
}

Matrix link_prior_means(const ModeHyper& hyper, const Matrix& beta, const FeatureMatrix& f) {
  Matrix m = f.times(beta).transpose();
  m.colwise() += hyper.mu;
  return m;
}

// ---------------------------------------------------------------------------

SnSState SnSState::from_prior(Eigen::Index k, Eigen::Index n, const SnSHyper& hp, RngStream& s) {
  SnSState st;
  st.hp = hp;
  st.pi.resize(k);
  st.alpha_slab.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    st.pi[c] = sample_beta(s, hp.a, hp.b);
    st.alpha_slab[c] = sample_gamma(s, hp.c, hp.d);
  }
  st.z.setOnes(k, n);
  return st;
}

double sns_inclusion_probability(double pi, double alpha_slab, double lambda_tilde,
                                 double mu_tilde) {
  if (pi <= 0.0) return 0.0;
  if (pi >= 1.0) return 1.0;
  double log_odds = std::log(pi) - std::log1p(-pi) +
                    0.5 * std::log(alpha_slab / lambda_tilde) +
                    0.5 * lambda_tilde * mu_tilde * mu_tilde;
  log_odds = std::clamp(log_odds, -kLogOddsClamp, kLogOddsClamp);
  return 1.0 / (1.0 + std::exp(-log_odds));
}

void sample_latent_sns(Eigen::Ref<Vector> u, std::span<std::uint8_t> z, const Vector& pi,
                       const Vector& alpha_slab, const Precision& lik, RngStream& s) {
  const Eigen::Index k = u.size();
  for (Eigen::Index c = 0; c < k; ++c) {
    const double lambda_tilde = alpha_slab[c] + lik.a(c, c);
    double cross = 0.0;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (l != c) cross += lik.a(c, l) * u[l];
    }
    const double mu_tilde = (lik.b[c] - cross) / lambda_tilde;
    const double p = sns_inclusion_probability(pi[c], alpha_slab[c], lambda_tilde, mu_tilde);
    const int on = sample_bernoulli(s, p);
    z[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(on);
    u[c] = on ? mu_tilde + sample_normal(s) / std::sqrt(lambda_tilde) : 0.0;
  }
}

void sample_sns_hyper(SnSState& state, const Matrix& u, RngStream& s) {
  const Eigen::Index k = u.rows();
  const Eigen::Index n = u.cols();
  for (Eigen::Index c = 0; c < k; ++c) {
    double on = 0.0;
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state.z(c, i)) {
        on += 1.0;
        sq += u(c, i) * u(c, i);
      }
    }
    state.pi[c] = sample_beta(s, state.hp.a + on, state.hp.b + static_cast<double>(n) - on);
    state.alpha_slab[c] = sample_gamma(s, state.hp.c + 0.5 * on, state.hp.d + 0.5 * sq);
  }
}

}  // namespace gibbsmf
