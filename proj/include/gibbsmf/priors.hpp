#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <span>

#include "gibbsmf/data.hpp"
#include "gibbsmf/linalg.hpp"
#include "gibbsmf/rng.hpp"

namespace gibbsmf {

/// Hyperprior of (mu, Lambda): mu | Lambda ~ N(mu0, (beta0 Lambda)^-1),
/// Lambda ~ Wishart(W0, nu0).
struct NormalWishartHyper {
  Vector mu0;
  double beta0 = 2.0;
  Matrix w0;
  double nu0 = 0.0;

  /// mu0 = 0, beta0 = 2, W0 = I, nu0 = K.
  static NormalWishartHyper defaults(Eigen::Index k);

  /// W0^{-1}, computed through a Cholesky solve.
  Matrix w0_inverse() const;
};

/// Current mean and precision of a mode's latent vectors.
struct ModeHyper {
  Vector mu;
  Matrix lambda;
};

/// Conjugate posterior parameters of (mu, Lambda) given a factor matrix.
struct NormalWishartPosterior {
  Vector mu;
  double beta = 0.0;
  Matrix w_inverse;
  double nu = 0.0;
};

/// Posterior parameters for the K x N factor matrix `u` (one entity per
/// column). Sums run in ascending column order.
NormalWishartPosterior normal_wishart_posterior(const Matrix& u, const NormalWishartHyper& hp,
                                                const Matrix& w0_inverse);

/// Lambda ~ Wishart(W*, nu*), then mu ~ N(mu*, (beta* Lambda)^-1).
ModeHyper sample_hyper_normal(const Matrix& u, const NormalWishartHyper& hp,
                              const Matrix& w0_inverse, RngStream& s);

/// Draw from the hyperprior itself (initialization).
ModeHyper sample_hyper_prior(const NormalWishartHyper& hp, const Matrix& w0_inverse,
                             RngStream& s);

/// Gaussian-prior latent conditional: N(P^{-1} h, P^{-1}) with
/// P = Lambda + lik.a and h = Lambda m + lik.b.
Vector sample_latent_normal(const Vector& prior_mean, const Matrix& lambda, const Precision& lik,
                            RngStream& s, bool with_noise = true);

// ---------------------------------------------------------------------------
// Side information (Macau)

/// Entities x D feature matrix in a form suited to the link-matrix products.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(const SideInfo& side);

  Eigen::Index entities() const { return n_; }
  Eigen::Index features() const { return d_; }
  bool is_sparse() const { return sparse_.has_value(); }

  /// F X for X of shape D x K.
  Matrix times(const Matrix& x) const;
  /// F^T Y for Y of shape N x K.
  Matrix transpose_times(const Matrix& y) const;
  /// F^T F.
  Matrix gram() const;

 private:
  Eigen::Index n_ = 0;
  Eigen::Index d_ = 0;
  std::optional<Matrix> dense_;
  std::optional<Eigen::SparseMatrix<double, Eigen::RowMajor>> sparse_;
};

/// Solves (F^T F + lambda I) X = B. Dense F, or sparse F with D <= 4096, is
/// factored once; larger sparse F uses conjugate gradients (tol 1e-8, at most
/// 1000 iterations per column).
class LinkSolver {
 public:
  static constexpr Eigen::Index kDirectLimit = 4096;
  static constexpr double kCgTolerance = 1e-8;
  static constexpr int kCgMaxIterations = 1000;

  LinkSolver(const FeatureMatrix& f, double lambda_beta);

  Matrix solve(const Matrix& rhs) const;
  bool direct() const { return factor_.has_value(); }
  double lambda_beta() const { return lambda_beta_; }

 private:
  const FeatureMatrix* f_;
  double lambda_beta_;
  std::optional<CholFactor> factor_;
};

/// Link matrix beta (D x K) with its fixed regularization precision.
struct LinkState {
  Matrix beta;
  double lambda_beta = 1.0;
};

/// One draw of beta from its matrix-normal conditional given the latents
/// `u` (K x N), the mode hyperparameters and the features.
Matrix sample_link_matrix(const Matrix& u, const ModeHyper& hyper, const FeatureMatrix& f,
                          const LinkSolver& solver, RngStream& s);

/// K x N matrix of prior means mu + beta^T f_i.
Matrix link_prior_means(const ModeHyper& hyper, const Matrix& beta, const FeatureMatrix& f);

// ---------------------------------------------------------------------------
// Spike-and-slab

struct SnSHyper {
  double a = 1.0;  // Beta prior on inclusion
  double b = 1.0;
  double c = 1.0;  // Gamma prior on slab precision (shape, rate)
  double d = 1.0;
};

struct SnSState {
  Vector pi;          // inclusion probability per component
  Vector alpha_slab;  // slab precision per component
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> z;  // K x N indicators
  SnSHyper hp;

  /// pi ~ Beta(a, b), alpha_slab ~ Gamma(c, d), all indicators on.
  static SnSState from_prior(Eigen::Index k, Eigen::Index n, const SnSHyper& hp, RngStream& s);
};

inline constexpr double kLogOddsClamp = 700.0;

/// Per-component Gibbs sweep (ascending k) for one entity. `u` and `z` are the
/// entity's current latent vector and indicators and are updated in place.
/// `lik` carries alpha * sum v v^T and alpha * sum r v from all observations.
void sample_latent_sns(Eigen::Ref<Vector> u, std::span<std::uint8_t> z, const Vector& pi,
                       const Vector& alpha_slab, const Precision& lik, RngStream& s);

/// Inclusion probability of component k given the other components, the
/// quantity sampled inside sample_latent_sns. Exposed for oracle tests.
double sns_inclusion_probability(double pi, double alpha_slab, double lambda_tilde,
                                 double mu_tilde);

/// Conjugate updates of pi and alpha_slab from the current u (K x N) and z.
void sample_sns_hyper(SnSState& state, const Matrix& u, RngStream& s);

}  // namespace gibbsmf
