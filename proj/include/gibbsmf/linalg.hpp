#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "gibbsmf/data.hpp"
#include "gibbsmf/rng.hpp"

namespace gibbsmf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Lower-triangular L with L * L^T equal to the (possibly jittered) input.
class CholFactor {
 public:
  CholFactor() = default;
  CholFactor(Matrix lower, double jitter) : lower_(std::move(lower)), jitter_(jitter) {}

  const Matrix& lower() const { return lower_; }
  Eigen::Index dim() const { return lower_.rows(); }
  /// Diagonal shift that was needed for the factorization to succeed; 0 if none.
  double jitter() const { return jitter_; }

  /// x = A^{-1} b via forward then backward substitution.
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

 private:
  Matrix lower_;
  double jitter_ = 0.0;
};

/// Cholesky factorization of a symmetric matrix (lower triangle is read).
///
/// On breakdown, retries with 1e-10 * trace(A)/K added to the diagonal,
/// escalating tenfold up to three times, then throws NotPositiveDefinite.
CholFactor chol_spd(const Matrix& a);

/// Draws x ~ N(P^{-1} h, P^{-1}) given the factor of the precision P:
/// x = L^{-T} (L^{-1} h + z), z standard normal. With `with_noise` false the
/// draw collapses to the solution of P x = h and no randomness is consumed.
Vector sample_mvn_canonical(RngStream& s, const CholFactor& precision, const Vector& h,
                            bool with_noise = true);
Vector sample_mvn_canonical(RngStream& s, const Matrix& precision, const Vector& h,
                            bool with_noise = true);

/// Wishart(W, nu) by Bartlett decomposition; E[X] = nu * W. Requires nu >= K.
Matrix sample_wishart(RngStream& s, const Matrix& scale, double nu);
/// Same distribution, parameterized by W^{-1}; avoids forming W.
Matrix sample_wishart_from_inverse_scale(RngStream& s, const Matrix& inverse_scale, double nu);

/// Entries per partial sum in the fixed-order reduction used by every
/// precision accumulation. Results depend on this constant, never on thread
/// count or the heavy-row split threshold.
inline constexpr std::size_t kAccumulateChunk = 512;

/// Unscaled partial sums: lower triangle of sum v v^T and sum r v.
struct PrecisionPartial {
  Matrix outer;  // lower triangle valid
  Vector rhs;

  explicit PrecisionPartial(Eigen::Index k = 0)
      : outer(Matrix::Zero(k, k)), rhs(Vector::Zero(k)) {}
};

/// A = alpha * sum v v^T (exactly symmetric), b = alpha * sum r v.
struct Precision {
  Matrix a;
  Vector b;
};

inline std::size_t chunk_count(std::size_t entries, std::size_t chunk = kAccumulateChunk) {
  return (entries + chunk - 1) / chunk;
}

/// Adds one entry to a partial: lower triangle rank-1 update plus r * v.
inline void add_entry(const double* v, double r, PrecisionPartial& p) {
  const Eigen::Index k = p.rhs.size();
  double* out = p.outer.data();
  for (Eigen::Index c = 0; c < k; ++c) {
    const double vc = v[c];
    double* col = out + c * k;
    for (Eigen::Index row = c; row < k; ++row) col[row] += v[row] * vc;
  }
  for (Eigen::Index c = 0; c < k; ++c) p.rhs[c] += r * v[c];
}

/// Partial for chunk `c` of a sparse line; `factors` holds one entity per column.
PrecisionPartial accumulate_chunk(const Matrix& factors, const SparseLine& line, std::size_t c,
                                  std::size_t chunk = kAccumulateChunk);

/// Combines partials in ascending order and scales by alpha.
Precision combine_partials(std::span<const PrecisionPartial> partials, double alpha,
                           Eigen::Index k);

/// Serial reference: chunked accumulation over a sparse line.
Precision accumulate_precision(const Matrix& factors, const SparseLine& line, double alpha,
                               std::size_t chunk = kAccumulateChunk);

/// Same over explicit entries: column n of `vs` paired with residuals[n].
Precision accumulate_precision(const Matrix& vs, std::span<const double> residuals, double alpha,
                               std::size_t chunk = kAccumulateChunk);

/// Unscaled Gram sum_j v_j v_j^T over all columns, chunked like the above.
Matrix gram(const Matrix& factors, std::size_t chunk = kAccumulateChunk);

/// Copies the lower triangle onto the upper one.
void mirror_lower(Matrix& a);

}  // namespace gibbsmf
