#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/priors.hpp"

using namespace gibbsmf;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto s = stream_for(seed, 0, 8, 0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sample_normal(s);
  return m;
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Straightforward textbook form, written independently of the library code.
NormalWishartPosterior naive_posterior(const Matrix& u, const NormalWishartHyper& hp) {
  const double n = static_cast<double>(u.cols());
  NormalWishartPosterior p;
  p.beta = hp.beta0 + n;
  p.nu = hp.nu0 + n;
  const Vector ubar = u.rowwise().mean();
  const Matrix centered = u.colwise() - ubar;
  const Matrix s = centered * centered.transpose();
  p.mu = (hp.beta0 * hp.mu0 + n * ubar) / (hp.beta0 + n);
  p.w_inverse = hp.w0.inverse() + s +
                (hp.beta0 * n / (hp.beta0 + n)) * (ubar - hp.mu0) * (ubar - hp.mu0).transpose();
  return p;
}

Precision one_observation(double alpha, double v, double r) {
  Matrix a(1, 1);
  a << alpha * v * v;
  Vector b(1);
  b << alpha * r * v;
  return {a, b};
}

}  // namespace

TEST(NormalWishart, EmptyDataReturnsPrior) {
  auto hp = NormalWishartHyper::defaults(3);
  hp.mu0 << 1, 2, 3;
  const auto post = normal_wishart_posterior(Matrix(3, 0), hp, hp.w0_inverse());
  EXPECT_EQ(post.beta, hp.beta0);
  EXPECT_EQ(post.nu, hp.nu0);
  EXPECT_EQ(post.mu, hp.mu0);
  EXPECT_LE((post.w_inverse - hp.w0.inverse()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalWishart, SingleColumnAtPriorMean) {
  auto hp = NormalWishartHyper::defaults(2);
  hp.beta0 = 1.0;
  hp.mu0 << 0.5, -1.0;
  const Matrix u = hp.mu0;
  const auto post = normal_wishart_posterior(u, hp, hp.w0_inverse());
  EXPECT_LE((post.mu - hp.mu0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((post.w_inverse - hp.w0_inverse()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalWishart, MatchesNaiveReimplementation) {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(trial % 6);
    const Eigen::Index n = static_cast<Eigen::Index>(3 + 37 * trial);
    NormalWishartHyper hp;
    hp.mu0 = random_matrix(k, 1, 100 + trial).col(0);
    hp.beta0 = 0.5 + static_cast<double>(trial);
    const Matrix m = random_matrix(k, k, 200 + trial);
    hp.w0 = m * m.transpose() + Matrix::Identity(k, k);
    hp.nu0 = static_cast<double>(k + trial);
    const Matrix u = random_matrix(k, n, 300 + trial) * 2.0;
    const auto got = normal_wishart_posterior(u, hp, hp.w0_inverse());
    const auto want = naive_posterior(u, hp);
    EXPECT_EQ(got.beta, want.beta);
    EXPECT_EQ(got.nu, want.nu);
    EXPECT_LE(rel_diff(got.mu, want.mu), 1e-12) << "trial " << trial;
    EXPECT_LE(rel_diff(got.w_inverse, want.w_inverse), 1e-12) << "trial " << trial;
  }
}

TEST(NormalWishart, ConcentratesOnGeneratingTruth) {
  const Eigen::Index k = 3;
  Vector mu_true(3);
  mu_true << 2.0, -3.0, 1.5;
  Matrix cov(3, 3);
  cov << 1.0, 0.3, 0.1, 0.3, 0.8, -0.2, 0.1, -0.2, 0.6;
  const Matrix lambda_true = cov.inverse();
  const Matrix l = cov.llt().matrixL();
  const Eigen::Index n = 10000;
  Matrix u = l * random_matrix(k, n, 400);
  u.colwise() += mu_true;

  const auto hp = NormalWishartHyper::defaults(k);
  auto s = stream_for(5, 0, 0, 0);
  const ModeHyper h = sample_hyper_normal(u, hp, hp.w0_inverse(), s);
  for (Eigen::Index c = 0; c < k; ++c) {
    EXPECT_NEAR(h.mu[c], mu_true[c], 0.05 * std::abs(mu_true[c]));
  }
  EXPECT_LE((h.lambda - lambda_true).norm() / lambda_true.norm(), 0.05);
}

TEST(LatentNormal, NoObservationsIsPriorDraw) {
  Vector m(2);
  m << 1.0, -1.0;
  Matrix lambda(2, 2);
  lambda << 2.0, 0.5, 0.5, 1.0;
  const Precision none{Matrix::Zero(2, 2), Vector::Zero(2)};
  const Matrix cov_true = lambda.inverse();
  const int n = 100000;
  Vector sum = Vector::Zero(2);
  Matrix sq = Matrix::Zero(2, 2);
  auto s = stream_for(6, 0, 0, 0);
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_latent_normal(m, lambda, none, s);
    sum += x;
    sq += (x - m) * (x - m).transpose();
  }
  for (Eigen::Index a = 0; a < 2; ++a) {
    EXPECT_NEAR(sum[a] / n, m[a], 5.0 * std::sqrt(cov_true(a, a) / n));
    for (Eigen::Index b = 0; b < 2; ++b) {
      const double se =
          std::sqrt((cov_true(a, a) * cov_true(b, b) + cov_true(a, b) * cov_true(a, b)) / n);
      EXPECT_NEAR(sq(a, b) / n, cov_true(a, b), 5.0 * se);
    }
  }
}

// Scalar conjugacy: prior N(0, 1), one observation r = 2 of u * 1 with unit
// precision. Oracle: moments of the unnormalized posterior on a fine grid.
TEST(LatentNormal, ScalarConjugacyAgainstGrid) {
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  const double h = 1e-4;
  for (double u = -10.0; u <= 10.0; u += h) {
    const double w = std::exp(-0.5 * u * u - 0.5 * (2.0 - u) * (2.0 - u));
    z += w;
    m1 += w * u;
    m2 += w * u * u;
  }
  const double grid_mean = m1 / z;
  const double grid_var = m2 / z - grid_mean * grid_mean;
  EXPECT_NEAR(grid_mean, 1.0, 1e-9);
  EXPECT_NEAR(grid_var, 0.5, 1e-9);

  Vector prior_mean = Vector::Zero(1);
  const Matrix lambda = Matrix::Identity(1, 1);
  const Precision lik = one_observation(1.0, 1.0, 2.0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  auto s = stream_for(7, 0, 0, 0);
  for (int i = 0; i < n; ++i) {
    const double x = sample_latent_normal(prior_mean, lambda, lik, s)[0];
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, grid_mean, 3.0 * std::sqrt(grid_var / n));
  EXPECT_NEAR(var, grid_var, 3.0 * grid_var * std::sqrt(2.0 / n));
}

TEST(LatentNormal, NoiseSuppressedIsRidgeSolution) {
  const Eigen::Index k = 4;
  const Matrix v = random_matrix(k, 30, 500);
  const Vector r = random_matrix(30, 1, 501).col(0);
  const double alpha = 2.5;
  Matrix a = Matrix::Zero(k, k);
  Vector b = Vector::Zero(k);
  for (Eigen::Index j = 0; j < 30; ++j) {
    a += alpha * v.col(j) * v.col(j).transpose();
    b += alpha * r[j] * v.col(j);
  }
  Matrix lambda = random_matrix(k, k, 502);
  lambda = lambda * lambda.transpose() + Matrix::Identity(k, k);
  const Vector m = random_matrix(k, 1, 503).col(0);
  const Vector oracle = (lambda + a).fullPivLu().solve(lambda * m + b);
  auto s = stream_for(8, 0, 0, 0);
  const Vector x = sample_latent_normal(m, lambda, {a, b}, s, false);
  EXPECT_LE((x - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

// ---------------------------------------------------------------------------

namespace {

ModeHyper unit_hyper(Eigen::Index k, double precision) {
  return {Vector::Zero(k), Matrix::Identity(k, k) * precision};
}

}  // namespace

TEST(LinkMatrix, ZeroFeaturesGiveZeroMean) {
  const Eigen::Index k = 2, n = 20, d = 3;
  const FeatureMatrix f(SideInfo(DenseMatrix(n, d)));
  const LinkSolver solver(f, 1.0);
  const Matrix u = random_matrix(k, n, 600);
  const auto hyper = unit_hyper(k, 1.0);
  Matrix sum = Matrix::Zero(d, k);
  const int reps = 10000;
  for (int t = 0; t < reps; ++t) {
    auto s = stream_for(9, static_cast<std::uint64_t>(t), 0, 0);
    sum += sample_link_matrix(u, hyper, f, solver, s);
  }
  // each entry has variance 1 / lambda_beta under the prior
  EXPECT_LE((sum / reps).cwiseAbs().maxCoeff(), 5.0 / std::sqrt(reps));
}

TEST(LinkMatrix, StrongPrecisionShrinksToZero) {
  const Eigen::Index k = 3, n = 50, d = 4;
  const Matrix fm = random_matrix(n, d, 610);
  DenseMatrix dense(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) dense(i, j) = fm(i, j);
  const FeatureMatrix f{SideInfo(dense)};
  const LinkSolver solver(f, 1e8);
  const Matrix u = random_matrix(k, n, 611);
  auto s = stream_for(10, 0, 0, 0);
  const Matrix beta = sample_link_matrix(u, unit_hyper(k, 1.0), f, solver, s);
  EXPECT_LT(beta.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(LinkMatrix, RecoversLeastSquaresTruth) {
  const Eigen::Index k = 2, n = 2000, d = 3;
  const Matrix fm = random_matrix(n, d, 620);
  Matrix beta_true(d, k);
  beta_true << 1.0, -0.5, 2.0, 0.8, -1.5, 1.2;
  DenseMatrix dense(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) dense(i, j) = fm(i, j);
  const FeatureMatrix f{SideInfo(dense)};
  const LinkSolver solver(f, 1e-6);
  ModeHyper hyper = unit_hyper(k, 1e4);
  hyper.mu << 0.3, -0.2;
  Matrix u = (fm * beta_true).transpose();
  u.colwise() += hyper.mu;
  auto s = stream_for(11, 0, 0, 0);
  const Matrix beta = sample_link_matrix(u, hyper, f, solver, s);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index c = 0; c < k; ++c)
      EXPECT_NEAR(beta(j, c), beta_true(j, c), 0.05 * std::abs(beta_true(j, c)));
}

TEST(LinkMatrix, ConditionalMomentsMatchAnalytic) {
  // D = 1, K = 1: beta | u ~ N((f'f + l)^-1 f'(u - mu), (Lambda (f'f + l))^-1)
  const Eigen::Index n = 5;
  DenseMatrix dense(n, 1, {1.0, -0.5, 2.0, 0.3, 1.1});
  const FeatureMatrix f{SideInfo(dense)};
  const double lb = 0.7, lam = 2.0;
  const LinkSolver solver(f, lb);
  Matrix u(1, n);
  u << 0.4, -0.1, 1.3, 0.2, 0.5;
  ModeHyper hyper = unit_hyper(1, lam);
  hyper.mu << 0.1;
  double ff = 0.0, fu = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ff += dense(i, 0) * dense(i, 0);
    fu += dense(i, 0) * (u(0, i) - 0.1);
  }
  const double mean_true = fu / (ff + lb);
  const double var_true = 1.0 / (lam * (ff + lb));
  const int reps = 100000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < reps; ++t) {
    auto s = stream_for(12, static_cast<std::uint64_t>(t), 0, 0);
    const double b = sample_link_matrix(u, hyper, f, solver, s)(0, 0);
    sum += b;
    sq += b * b;
  }
  const double mean = sum / reps;
  EXPECT_NEAR(mean, mean_true, 5.0 * std::sqrt(var_true / reps));
  EXPECT_NEAR(sq / reps - mean * mean, var_true, 5.0 * var_true * std::sqrt(2.0 / reps));
}

TEST(LinkSolver, ConjugateGradientPathSolves) {
  // sparse features wider than the direct limit
  const std::size_t n = 300, d = 5000;
  std::vector<Triplet> trips;
  auto s = stream_for(13, 0, 0, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (int t = 0; t < 20; ++t) trips.push_back({i, static_cast<std::size_t>(s.next_u32() % d), 1.0});
  std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  trips.erase(std::unique(trips.begin(), trips.end(),
                          [](const Triplet& a, const Triplet& b) {
                            return a.row == b.row && a.col == b.col;
                          }),
              trips.end());
  const FeatureMatrix f{SideInfo(SparseMatrix::from_triplets(n, d, trips))};
  const LinkSolver solver(f, 0.5);
  EXPECT_FALSE(solver.direct());
  const Matrix rhs = random_matrix(static_cast<Eigen::Index>(d), 2, 630);
  const Matrix x = solver.solve(rhs);
  const Matrix applied = f.transpose_times(f.times(x)) + 0.5 * x;
  for (Eigen::Index c = 0; c < 2; ++c) {
    EXPECT_LE((applied.col(c) - rhs.col(c)).norm(), 1e-7 * rhs.col(c).norm());
  }
}

TEST(LinkSolver, RejectsNonPositivePrecision) {
  const FeatureMatrix f(SideInfo(DenseMatrix(3, 2)));
  EXPECT_THROW(LinkSolver(f, 0.0), UsageError);
}

// ---------------------------------------------------------------------------

TEST(SpikeAndSlab, ZeroInclusionGivesExactZeros) {
  const Eigen::Index k = 3;
  Vector u = Vector::Ones(k);
  std::vector<std::uint8_t> z(k, 1);
  const Vector pi = Vector::Zero(k);
  const Vector slab = Vector::Ones(k);
  const Precision lik{Matrix::Identity(k, k) * 10.0, Vector::Ones(k) * 30.0};
  auto s = stream_for(14, 0, 0, 0);
  sample_latent_sns(u, z, pi, slab, lik, s);
  for (Eigen::Index c = 0; c < k; ++c) {
    EXPECT_EQ(z[c], 0);
    EXPECT_EQ(std::signbit(u[c]), false);
    EXPECT_EQ(u[c], 0.0);
  }
}

TEST(SpikeAndSlab, NoObservationsFollowsPi) {
  EXPECT_DOUBLE_EQ(sns_inclusion_probability(0.3, 2.0, 2.0, 0.0), 0.3);
  const int n = 100000;
  int on = 0;
  const Vector pi = Vector::Constant(1, 0.3);
  const Vector slab = Vector::Constant(1, 2.0);
  const Precision none{Matrix::Zero(1, 1), Vector::Zero(1)};
  for (int t = 0; t < n; ++t) {
    auto s = stream_for(15, static_cast<std::uint64_t>(t), 0, 0);
    Vector u = Vector::Zero(1);
    std::uint8_t z = 0;
    sample_latent_sns(u, std::span<std::uint8_t>(&z, 1), pi, slab, none, s);
    on += z;
  }
  EXPECT_NEAR(static_cast<double>(on) / n, 0.3, 5.0 * std::sqrt(0.21 / n));
}

// K = 1, one observation y of u * v with noise precision alpha. Oracle: the two
// joint densities p(z, y) by brute-force quadrature over u.
TEST(SpikeAndSlab, InclusionMatchesEnumeration) {
  const double pi = 0.4, slab = 1.5, alpha = 3.0, v = 0.8, y = 1.1;
  const auto normal_pdf = [](double x, double mean, double precision) {
    return std::sqrt(precision / (2.0 * M_PI)) * std::exp(-0.5 * precision * (x - mean) * (x - mean));
  };
  double on = 0.0;
  const double h = 1e-4;
  for (double u = -20.0; u <= 20.0; u += h) {
    on += normal_pdf(u, 0.0, slab) * normal_pdf(y, u * v, alpha) * h;
  }
  const double joint_on = pi * on;
  const double joint_off = (1.0 - pi) * normal_pdf(y, 0.0, alpha);
  const double oracle = joint_on / (joint_on + joint_off);

  const double lambda_tilde = slab + alpha * v * v;
  const double mu_tilde = alpha * v * y / lambda_tilde;
  EXPECT_NEAR(sns_inclusion_probability(pi, slab, lambda_tilde, mu_tilde), oracle, 1e-8);

  const Precision lik = one_observation(alpha, v, y);
  const int n = 100000;
  int count = 0;
  double slab_sum = 0.0;
  for (int t = 0; t < n; ++t) {
    auto s = stream_for(16, static_cast<std::uint64_t>(t), 0, 0);
    Vector u = Vector::Zero(1);
    std::uint8_t z = 0;
    sample_latent_sns(u, std::span<std::uint8_t>(&z, 1), Vector::Constant(1, pi),
                      Vector::Constant(1, slab), lik, s);
    count += z;
    if (z) slab_sum += u[0];
  }
  EXPECT_NEAR(static_cast<double>(count) / n, oracle, 5.0 * std::sqrt(oracle * (1 - oracle) / n));
  EXPECT_NEAR(slab_sum / count, mu_tilde, 5.0 / std::sqrt(lambda_tilde * count));
}

TEST(SpikeAndSlab, LogOddsClampAvoidsOverflow) {
  const double p = sns_inclusion_probability(0.5, 1.0, 1e6, 1e3);
  EXPECT_TRUE(std::isfinite(p));
  EXPECT_EQ(p, 1.0);
  EXPECT_EQ(sns_inclusion_probability(1.0, 1.0, 1.0, 0.0), 1.0);
}

TEST(SpikeAndSlab, ZerosAreExactAcrossSweeps) {
  const Eigen::Index k = 6;
  const Matrix v = random_matrix(k, 40, 700);
  const Vector r = random_matrix(40, 1, 701).col(0);
  Matrix a = Matrix::Zero(k, k);
  Vector b = Vector::Zero(k);
  for (Eigen::Index j = 0; j < 40; ++j) {
    a += v.col(j) * v.col(j).transpose();
    b += r[j] * v.col(j);
  }
  const Precision lik{a, b};
  Vector u = Vector::Ones(k);
  std::vector<std::uint8_t> z(k, 1);
  const Vector pi = Vector::Constant(k, 0.5);
  const Vector slab = Vector::Constant(k, 1.0);
  int zeros = 0;
  for (int t = 0; t < 2000; ++t) {
    auto s = stream_for(17, static_cast<std::uint64_t>(t), 0, 0);
    sample_latent_sns(u, z, pi, slab, lik, s);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (u[c] != 0.0) ASSERT_EQ(z[c], 1);
      if (!z[c]) {
        ASSERT_EQ(std::signbit(u[c]), false);
        ++zeros;
      }
    }
  }
  EXPECT_GT(zeros, 0);
}

TEST(SpikeAndSlabHyper, EmptySlab) {
  SnSHyper hp{2.0, 3.0, 1.5, 2.0};
  const Eigen::Index n = 10;
  const int reps = 20000;
  double pi_sum = 0.0, alpha_sum = 0.0;
  for (int t = 0; t < reps; ++t) {
    auto s0 = stream_for(18, 0, 0, 0);
    SnSState st = SnSState::from_prior(1, n, hp, s0);
    st.z.setZero();
    auto s = stream_for(18, static_cast<std::uint64_t>(t) + 1, 0, 0);
    sample_sns_hyper(st, Matrix::Zero(1, n), s);
    pi_sum += st.pi[0];
    alpha_sum += st.alpha_slab[0];
  }
  const double pi_mean = 2.0 / (2.0 + 3.0 + n);
  const double pi_var = pi_mean * (1 - pi_mean) / (2.0 + 3.0 + n + 1.0);
  EXPECT_NEAR(pi_sum / reps, pi_mean, 5.0 * std::sqrt(pi_var / reps));
  EXPECT_NEAR(alpha_sum / reps, 1.5 / 2.0, 5.0 * std::sqrt(1.5 / 4.0 / reps));
}

TEST(SpikeAndSlabHyper, FullSlabZeroLatents) {
  SnSHyper hp{1.0, 1.0, 1.0, 1.0};
  const Eigen::Index n = 8;
  const int reps = 20000;
  double alpha_sum = 0.0;
  for (int t = 0; t < reps; ++t) {
    auto s0 = stream_for(19, 0, 0, 0);
    SnSState st = SnSState::from_prior(1, n, hp, s0);
    auto s = stream_for(19, static_cast<std::uint64_t>(t) + 1, 0, 0);
    sample_sns_hyper(st, Matrix::Zero(1, n), s);
    alpha_sum += st.alpha_slab[0];
  }
  const double shape = 1.0 + n / 2.0;
  EXPECT_NEAR(alpha_sum / reps, shape, 5.0 * std::sqrt(shape / reps));
}

TEST(SpikeAndSlabHyper, PiPosteriorMean) {
  SnSHyper hp{1.5, 2.5, 1.0, 1.0};
  const Eigen::Index n = 12;
  const int reps = 10000;
  double sum = 0.0;
  for (int t = 0; t < reps; ++t) {
    auto s0 = stream_for(20, 0, 0, 0);
    SnSState st = SnSState::from_prior(1, n, hp, s0);
    for (Eigen::Index i = 0; i < n; ++i) st.z(0, i) = i % 3 == 0 ? 1 : 0;  // 4 on
    auto s = stream_for(20, static_cast<std::uint64_t>(t) + 1, 0, 0);
    sample_sns_hyper(st, Matrix::Ones(1, n), s);
    sum += st.pi[0];
  }
  const double mean = (1.5 + 4.0) / (1.5 + 2.5 + n);
  const double var = mean * (1 - mean) / (1.5 + 2.5 + n + 1.0);
  EXPECT_NEAR(sum / reps, mean, 5.0 * std::sqrt(var / reps));
}
