#include "anchorlab/estimators.hpp"

#include "anchorlab/error.hpp"

#include <cmath>

namespace anchorlab {

namespace detail {

void require_centered(const AnchorDataset& ds, const char* who) {
    if (!ds.centered) throw InvalidConfig(std::string(who) + " expects a centred dataset; call center() first");
    if (ds.n() == 0) throw EmptyInput(std::string(who) + " got an empty dataset");
}

void require_gamma(double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative, got " + std::to_string(gamma));
}

void attach_means(AnchorFit& fit, const AnchorDataset& ds) {
    fit.x_means = ds.centered ? ds.x_means : VectorXd::Zero(ds.d());
    fit.y_mean = ds.centered ? ds.y_mean : 0.0;
}

}  // namespace detail

GammaTransformed gamma_transform(const AnchorDataset& ds, const Projector& proj, double gamma) {
    detail::require_gamma(gamma);
    if (!std::isfinite(gamma)) throw DomainError("gamma_transform needs a finite gamma");
    GammaTransformed out{ds.X, ds.Y};
    if (gamma == 1.0 || proj.rank() == 0) return out;
    const double scale = std::sqrt(gamma) - 1.0;
    MatrixXd stacked(ds.n(), ds.d() + 1);
    stacked << ds.X, ds.Y;
    const MatrixXd projected = proj.apply(stacked);
    out.X += scale * projected.leftCols(ds.d());
    out.Y += scale * projected.col(ds.d());
    return out;
}

GammaTransformed gamma_transform(const AnchorDataset& ds, double gamma) {
    return gamma_transform(ds, Projector(ds.A), gamma);
}

double anchor_objective(const AnchorDataset& ds, const VectorXd& b, double gamma) {
    detail::require_gamma(gamma);
    const VectorXd r = ds.Y - ds.X * b;
    const VectorXd pr = Projector(ds.A).apply(r);
    return (r - pr).squaredNorm() + gamma * pr.squaredNorm();
}

AnchorFit fit_anchor(const AnchorDataset& ds, double gamma) {
    detail::require_centered(ds, "fit_anchor");
    detail::require_gamma(gamma);
    if (!std::isfinite(gamma)) throw DomainError("fit_anchor takes finite gamma; use fit_iv for the limit");
    if (ds.n() < ds.d()) {
        throw InvalidConfig("n = " + std::to_string(ds.n()) + " < d = " + std::to_string(ds.d()) +
                            "; use the l1-penalised estimator");
    }

    const GammaTransformed t = gamma_transform(ds, gamma);
    const MatrixXd gram = t.X.transpose() * t.X;
    const VectorXd rhs = t.X.transpose() * t.Y;

    AnchorFit fit;
    fit.gamma = gamma;
    try {
        fit.coefficients = solve_spd(gram, rhs);
    } catch (const NotPositiveDefinite& e) {
        throw SingularDesign(std::string("transformed Gram matrix is singular; add a ridge or reduce d (") +
                             e.what() + ")");
    }
    fit.objective = (t.Y - t.X * fit.coefficients).squaredNorm();
    fit.iterations = 1;
    fit.tolerance = (rhs - gram * fit.coefficients).lpNorm<Eigen::Infinity>();
    detail::attach_means(fit, ds);
    return fit;
}

AnchorFit fit_iv(const AnchorDataset& ds) {
    detail::require_centered(ds, "fit_iv");
    const Projector proj(ds.A);
    const MatrixXd px = proj.apply(ds.X);
    const VectorXd py = proj.apply(ds.Y);

    // rank of Pi_A X measured against the scale of X itself
    const double scale = ds.X.norm();
    const Index rank = numerical_rank(px, kRankTolerance, kRankTolerance * scale);
    if (rank < ds.d()) {
        throw Underidentified("rank(Pi_A X) = " + std::to_string(rank) + " < d = " + std::to_string(ds.d()) +
                              "; the IV coefficient is not unique");
    }

    AnchorFit fit;
    fit.gamma = kInfiniteGamma;
    const MatrixXd gram = px.transpose() * px;
    const VectorXd rhs = px.transpose() * py;
    try {
        fit.coefficients = solve_spd(gram, rhs);
    } catch (const NotPositiveDefinite& e) {
        throw Underidentified(std::string("projected Gram matrix is singular (") + e.what() + ")");
    }
    fit.objective = (py - px * fit.coefficients).squaredNorm();
    fit.iterations = 1;
    fit.tolerance = (rhs - gram * fit.coefficients).lpNorm<Eigen::Infinity>();
    detail::attach_means(fit, ds);
    return fit;
}

AnchorFit fit_anchor_or_iv(const AnchorDataset& ds, double gamma) {
    return gamma == kInfiniteGamma ? fit_iv(ds) : fit_anchor(ds, gamma);
}

VectorXd predict(const AnchorFit& fit, const MatrixXd& Xnew) {
    const Index d = fit.coefficients.size();
    if (Xnew.cols() != d) {
        throw DimensionMismatch("predict: Xnew has " + std::to_string(Xnew.cols()) + " columns, fit has " +
                                std::to_string(d));
    }
    VectorXd yhat = Xnew * fit.coefficients;
    if (fit.x_means.size() == d) yhat.array() -= fit.x_means.dot(fit.coefficients);
    yhat.array() += fit.y_mean;
    return yhat;
}

}  // namespace anchorlab
