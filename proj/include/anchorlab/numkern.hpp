#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace anchorlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative rank tolerance for thin-QR and SVD rank decisions: a diagonal of
/// R (or singular value) below this fraction of the largest one is dropped.
inline constexpr double kRankTolerance = 1e-10;

/// Cholesky pivots below this fraction of trace/dim reject the matrix.
inline constexpr double kSpdPivotFloor = 1e-12;

/// Ridge callers add before retrying a rejected Gram matrix.
inline constexpr double kFallbackRidge = 1e-8;

/// Solves G S = rhs for symmetric positive definite G (only the lower
/// triangle is read). Throws NotPositiveDefinite when a pivot falls below
/// kSpdPivotFloor * trace(G) / dim. `ridge` is added to the diagonal first.
MatrixXd solve_spd(const MatrixXd& G, const MatrixXd& rhs, double ridge = 0.0);

/// Orthogonal projection onto the column space of an n x q matrix.
/// Rank-deficient inputs are truncated to their numerical rank, so a full set
/// of centred dummy columns works without dropping a reference level.
class Projector {
public:
    Projector() = default;
    explicit Projector(const MatrixXd& A);

    /// Pi_A * V; the n x n projector is never formed.
    MatrixXd apply(const MatrixXd& V) const;
    VectorXd apply(const VectorXd& v) const;
    /// (Id - Pi_A) * V.
    MatrixXd residual(const MatrixXd& V) const;

    Index rank() const { return rank_; }
    Index rows() const { return rows_; }

private:
    Eigen::ColPivHouseholderQR<MatrixXd> qr_;
    Index rank_ = 0;
    Index rows_ = 0;
};

MatrixXd project_columns(const MatrixXd& A, const MatrixXd& V);

/// Standard normal CDF via erfc (accurate in both tails).
double normal_cdf(double x);

/// Standard normal quantile: rational approximation polished by one Newton
/// step on normal_cdf. Throws DomainError outside (0, 1).
double normal_quantile(double p);

/// P(chi^2_1 <= x).
double chi2_1_cdf(double x);

/// alpha-quantile of the chi-square distribution with one degree of freedom,
/// i.e. (Phi^{-1}((1 + alpha) / 2))^2. Throws DomainError outside (0, 1).
double chi2_1_quantile(double alpha);

/// Number of singular values above max(rel_tol * s_max, abs_tol).
Index numerical_rank(const MatrixXd& M, double rel_tol = kRankTolerance, double abs_tol = 0.0);

/// Moore-Penrose inverse of a symmetric PSD matrix via eigendecomposition.
MatrixXd psd_pseudo_inverse(const MatrixXd& S, double rel_tol = kRankTolerance);

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped to 0).
MatrixXd psd_sqrt(const MatrixXd& S);

/// Runs fn(i) for i in [0, count) on up to ANCHORLAB_THREADS workers.
/// Tasks must write only to their own slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Worker cap read from ANCHORLAB_THREADS (default: hardware concurrency).
unsigned worker_count();

}  // namespace anchorlab
