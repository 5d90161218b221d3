#include "anchorlab/numkern.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace anchorlab {

MatrixXd solve_spd(const MatrixXd& G, const MatrixXd& rhs, double ridge) {
    const Index dim = G.rows();
    if (G.cols() != dim || rhs.rows() != dim) {
        throw DimensionMismatch("solve_spd expects a square matrix and matching right-hand side");
    }
    if (dim == 0) return MatrixXd(0, rhs.cols());

    MatrixXd L = G;
    L.diagonal().array() += ridge;
    const double trace = L.diagonal().sum();
    const double floor = kSpdPivotFloor * std::max(trace, 0.0) / static_cast<double>(dim);

    for (Index j = 0; j < dim; ++j) {
        double pivot = L(j, j);
        if (j > 0) pivot -= L.row(j).head(j).squaredNorm();
        if (!(pivot > floor) || !std::isfinite(pivot)) {
            throw NotPositiveDefinite("Cholesky pivot " + std::to_string(j) + " is " +
                                      std::to_string(pivot) + " (floor " + std::to_string(floor) +
                                      "); add a ridge or reduce the number of predictors");
        }
        const double root = std::sqrt(pivot);
        L(j, j) = root;
        for (Index i = j + 1; i < dim; ++i) {
            double s = L(i, j);
            if (j > 0) s -= L.row(i).head(j).dot(L.row(j).head(j));
            L(i, j) = s / root;
        }
    }
    auto lower = L.triangularView<Eigen::Lower>();
    MatrixXd sol = lower.solve(rhs);
    lower.transpose().solveInPlace(sol);
    return sol;
}

Projector::Projector(const MatrixXd& A) : rows_(A.rows()) {
    if (A.cols() == 0) return;
    qr_.setThreshold(kRankTolerance);
    qr_.compute(A);
    rank_ = qr_.rank();
}

MatrixXd Projector::apply(const MatrixXd& V) const {
    if (V.rows() != rows_) throw DimensionMismatch("projector row count differs from input");
    if (rank_ == 0) return MatrixXd::Zero(V.rows(), V.cols());
    MatrixXd W = qr_.householderQ().transpose() * V;
    W.bottomRows(rows_ - rank_).setZero();
    return qr_.householderQ() * W;
}

VectorXd Projector::apply(const VectorXd& v) const {
    return apply(MatrixXd(v)).col(0);
}

MatrixXd Projector::residual(const MatrixXd& V) const { return V - apply(V); }

MatrixXd project_columns(const MatrixXd& A, const MatrixXd& V) { return Projector(A).apply(V); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, relative error about 1.2e-9.
double normal_quantile_initial(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
    const double x = normal_quantile_initial(p);
    // Newton step; work in the tail that keeps the residual well conditioned
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (density == 0.0) return x;
    const double residual = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    return x - residual / density;
}

double chi2_1_cdf(double x) {
    if (x <= 0.0) return 0.0;
    return std::erf(std::sqrt(0.5 * x));
}

double chi2_1_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("chi-square quantile needs alpha in (0, 1)");
    // Phi^{-1}((1 + alpha)/2) = -Phi^{-1}((1 - alpha)/2); the lower tail is exact near alpha = 1
    const double z = normal_quantile(0.5 * (1.0 - alpha));
    return z * z;
}

Index numerical_rank(const MatrixXd& M, double rel_tol, double abs_tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = std::max(rel_tol * s(0), abs_tol);
    return static_cast<Index>((s.array() > cut).count());
}

MatrixXd psd_pseudo_inverse(const MatrixXd& S, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
    const VectorXd& vals = eig.eigenvalues();
    const double top = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
    VectorXd inv = VectorXd::Zero(vals.size());
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals(i) > rel_tol * top && vals(i) > 0.0) inv(i) = 1.0 / vals(i);
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

MatrixXd psd_sqrt(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
    const VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

unsigned worker_count() {
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ANCHORLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(cap));
    }
    return workers;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace anchorlab
