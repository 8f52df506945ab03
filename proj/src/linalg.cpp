#include "gibbsmf/linalg.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

Vector CholFactor::solve(const Vector& b) const {
  Vector x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Matrix CholFactor::solve(const Matrix& b) const {
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

namespace {

bool try_factor(const Matrix& a, Matrix& lower) {
  Eigen::LLT<Matrix, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) return false;
  }
  return true;
}

}  // namespace

CholFactor chol_spd(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw NotPositiveDefinite("cholesky: matrix is not square");
  }
  Matrix lower;
  if (try_factor(a, lower)) return CholFactor(std::move(lower), 0.0);

  const double k = static_cast<double>(a.rows());
  const double base = 1e-10 * a.trace() / k;
  if (base > 0.0 && std::isfinite(base)) {
    double jitter = base;
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
      Matrix shifted = a;
      shifted.diagonal().array() += jitter;
      if (try_factor(shifted, lower)) return CholFactor(std::move(lower), jitter);
    }
  }
  throw NotPositiveDefinite("cholesky: matrix of size " + std::to_string(a.rows()) +
                            " is not positive definite (jitter exhausted)");
}

Vector sample_mvn_canonical(RngStream& s, const CholFactor& precision, const Vector& h,
                            bool with_noise) {
  const auto& l = precision.lower();
  Vector y = l.triangularView<Eigen::Lower>().solve(h);
  if (with_noise) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sample_normal(s);
  }
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

Vector sample_mvn_canonical(RngStream& s, const Matrix& precision, const Vector& h,
                            bool with_noise) {
  return sample_mvn_canonical(s, chol_spd(precision), h, with_noise);
}

namespace {

// Lower-triangular Bartlett factor A with A A^T ~ Wishart(I, nu).
Matrix bartlett_factor(RngStream& s, Eigen::Index k, double nu) {
  if (!(nu >= static_cast<double>(k))) {
    throw std::invalid_argument("wishart degrees of freedom " + std::to_string(nu) +
                                " below dimension " + std::to_string(k));
  }
  Matrix a = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i, i) = std::sqrt(sample_gamma(s, 0.5 * (nu - static_cast<double>(i)), 0.5));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = sample_normal(s);
  }
  return a;
}

Matrix symmetric_product(const Matrix& x) {
  Matrix out = x * x.transpose();
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = c + 1; r < out.rows(); ++r) out(c, r) = out(r, c);
  return out;
}

}  // namespace

Matrix sample_wishart(RngStream& s, const Matrix& scale, double nu) {
  const CholFactor l = chol_spd(scale);
  const Matrix a = bartlett_factor(s, scale.rows(), nu);
  return symmetric_product(l.lower() * a);
}

Matrix sample_wishart_from_inverse_scale(RngStream& s, const Matrix& inverse_scale, double nu) {
  // W^{-1} = C C^T  =>  W = C^{-T} C^{-1}, so C^{-T} A is a valid Bartlett factor.
  const CholFactor c = chol_spd(inverse_scale);
  Matrix x = bartlett_factor(s, inverse_scale.rows(), nu);
  c.lower().transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return symmetric_product(x);
}

void mirror_lower(Matrix& a) {
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = c + 1; r < a.rows(); ++r) a(c, r) = a(r, c);
}

PrecisionPartial accumulate_chunk(const Matrix& factors, const SparseLine& line, std::size_t c,
                                  std::size_t chunk) {
  PrecisionPartial p(factors.rows());
  const std::size_t begin = c * chunk;
  const std::size_t end = std::min(line.size(), begin + chunk);
  const double* base = factors.data();
  const std::size_t k = static_cast<std::size_t>(factors.rows());
  for (std::size_t n = begin; n < end; ++n) {
    add_entry(base + static_cast<std::size_t>(line.index[n]) * k, line.value[n], p);
  }
  return p;
}

Precision combine_partials(std::span<const PrecisionPartial> partials, double alpha,
                           Eigen::Index k) {
  Precision out{Matrix::Zero(k, k), Vector::Zero(k)};
  if (!partials.empty()) {
    out.a = partials[0].outer;
    out.b = partials[0].rhs;
    for (std::size_t c = 1; c < partials.size(); ++c) {
      out.a += partials[c].outer;
      out.b += partials[c].rhs;
    }
  }
  out.a *= alpha;
  out.b *= alpha;
  mirror_lower(out.a);
  return out;
}

Precision accumulate_precision(const Matrix& factors, const SparseLine& line, double alpha,
                               std::size_t chunk) {
  std::vector<PrecisionPartial> partials;
  const std::size_t n = chunk_count(line.size(), chunk);
  partials.reserve(n);
  for (std::size_t c = 0; c < n; ++c) partials.push_back(accumulate_chunk(factors, line, c, chunk));
  return combine_partials(partials, alpha, factors.rows());
}

Precision accumulate_precision(const Matrix& vs, std::span<const double> residuals, double alpha,
                               std::size_t chunk) {
  if (static_cast<std::size_t>(vs.cols()) != residuals.size()) {
    throw std::invalid_argument("accumulate_precision: vector and residual counts differ");
  }
  std::vector<PrecisionPartial> partials;
  const std::size_t k = static_cast<std::size_t>(vs.rows());
  for (std::size_t begin = 0; begin < residuals.size(); begin += chunk) {
    PrecisionPartial p(vs.rows());
    const std::size_t end = std::min(residuals.size(), begin + chunk);
    for (std::size_t n = begin; n < end; ++n) add_entry(vs.data() + n * k, residuals[n], p);
    partials.push_back(std::move(p));
  }
  return combine_partials(partials, alpha, vs.rows());
}

Matrix gram(const Matrix& factors, std::size_t chunk) {
  const Eigen::Index k = factors.rows();
  const std::size_t n = static_cast<std::size_t>(factors.cols());
  Matrix total = Matrix::Zero(k, k);
  bool first = true;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    PrecisionPartial p(k);
    const std::size_t end = std::min(n, begin + chunk);
    for (std::size_t j = begin; j < end; ++j) {
      add_entry(factors.data() + j * static_cast<std::size_t>(k), 0.0, p);
    }
    if (first) {
      total = p.outer;
      first = false;
    } else {
      total += p.outer;
    }
  }
  mirror_lower(total);
  return total;
}

}  // namespace gibbsmf
