#pragma once

#include "anchorlab/datamodel.hpp"

#include <limits>
#include <vector>

namespace anchorlab {

/// Marker for the gamma -> infinity endpoint (instrumental variables).
inline constexpr double kInfiniteGamma = std::numeric_limits<double>::infinity();

/// Coefficients with the (gamma, lambda) they were fitted at.
///
/// `objective` is the training criterion at the returned coefficients:
/// ||(Id - Pi_A)(Y - Xb)||^2 + gamma ||Pi_A (Y - Xb)||^2 (+ 2 lambda ||b||_1),
/// or ||Pi_A (Y - Xb)||^2 for the IV endpoint.
struct AnchorFit {
    double gamma = 1.0;
    double lambda = 0.0;
    VectorXd coefficients;
    double objective = 0.0;

    Index iterations = 0;
    double tolerance = 0.0;
    bool converged = true;
    /// Objective after every coordinate-descent sweep (empty for direct solves).
    std::vector<double> sweep_objectives;

    VectorXd x_means;
    double y_mean = 0.0;

    bool is_iv() const { return gamma == kInfiniteGamma; }
};

struct GammaTransformed {
    MatrixXd X;
    VectorXd Y;
};

/// X~ = (Id - Pi_A) X + sqrt(gamma) Pi_A X, likewise for Y.
GammaTransformed gamma_transform(const AnchorDataset& ds, double gamma);
GammaTransformed gamma_transform(const AnchorDataset& ds, const Projector& proj, double gamma);

/// ||(Id - Pi_A)(Y - Xb)||^2 + gamma ||Pi_A (Y - Xb)||^2.
double anchor_objective(const AnchorDataset& ds, const VectorXd& b, double gamma);

/// Plug-in anchor regression: least squares on the gamma-transformed data.
/// Requires a centred dataset, 0 <= gamma < inf and n >= d.
AnchorFit fit_anchor(const AnchorDataset& ds, double gamma);

/// Two-stage least squares, the gamma -> infinity limit. Throws
/// Underidentified when Pi_A X has rank below d.
AnchorFit fit_iv(const AnchorDataset& ds);

/// Dispatches to fit_iv for kInfiniteGamma.
AnchorFit fit_anchor_or_iv(const AnchorDataset& ds, double gamma);

/// (Xnew - training means) b + training Y mean.
VectorXd predict(const AnchorFit& fit, const MatrixXd& Xnew);

namespace detail {
void require_centered(const AnchorDataset& ds, const char* who);
void require_gamma(double gamma);
void attach_means(AnchorFit& fit, const AnchorDataset& ds);
}  // namespace detail

}  // namespace anchorlab
