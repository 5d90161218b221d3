#pragma once

#include "anchorlab/estimators.hpp"
#include "anchorlab/scm.hpp"

#include <optional>
#include <vector>

namespace anchorlab {

struct LassoOptions {
    /// Stop once every coordinate update moves fitted values by less than
    /// update_tol * sd(Y~) ...
    double update_tol = 1e-7;
    /// ... and the KKT violation is at most kkt_tol * lambda.
    double kkt_tol = 1e-7;
    Index max_sweeps = 100000;
    bool record_history = false;
};

/// Quadratic part of ||y - Xb||^2 = yy - 2 b^T c + b^T G b.
struct LassoGram {
    MatrixXd G;
    VectorXd c;
    double yy = 0.0;
    Index n = 0;
};

struct LassoSolution {
    VectorXd b;
    Index sweeps = 0;
    double kkt_violation = 0.0;
    bool converged = false;
    std::vector<double> history;
};

/// Cyclic coordinate descent with soft-thresholding for
/// min yy - 2 b^T c + b^T G b + 2 lambda ||b||_1.
LassoSolution solve_lasso_gram(const LassoGram& problem, double lambda, const VectorXd& start,
                               const LassoOptions& opt = {});

/// max_k |grad_k| off the subdifferential of 2 lambda ||b||_1, halved
/// (gradient of the quadratic taken as 2 (c - G b)).
double kkt_violation(const LassoGram& problem, const VectorXd& b, double lambda);

/// min ||Y~ - X~ b||^2 + 2 lambda ||b||_1. A fit that hits max_sweeps has
/// converged = false and carries the last iterate.
AnchorFit fit_anchor_lasso(const AnchorDataset& ds, double gamma, double lambda, const LassoOptions& opt = {},
                           const std::optional<VectorXd>& warm_start = std::nullopt);

/// ||X~^T Y~||_inf, the smallest lambda with an all-zero solution.
double lambda_max(const AnchorDataset& ds, double gamma);

struct LambdaPath {
    double gamma = 1.0;
    std::vector<double> lambdas;
    std::vector<AnchorFit> fits;
    std::vector<Index> active_sizes;
};

/// Log-spaced lambdas from lambda_max down to ratio * lambda_max, warm-started.
LambdaPath lambda_path(const AnchorDataset& ds, double gamma, Index n_lambdas, double ratio,
                       const LassoOptions& opt = {});

/// (1/|A|) sum_a (1/n_a) sum_{i in a} (r_i - rbar_a)^2 + (gamma/|A|) sum_a rbar_a^2,
/// r = Y - X b on the stored (normally centred) values.
double equal_weight_objective(const AnchorDataset& ds, const VectorXd& b, double gamma);

/// Gram form of n * equal_weight_objective: rows rescaled by
/// sqrt(n / (|A| n_a)) within levels and sqrt(n gamma / |A|) for level means.
LassoGram equal_weight_gram(const AnchorDataset& ds, double gamma);

/// min n * R(b) + 2 lambda ||b||_1, so lambda is on the scale of fit_anchor_lasso.
AnchorFit fit_equal_weight_lasso(const AnchorDataset& ds, double gamma, double lambda, const LassoOptions& opt = {});

struct CompatibilityOptions {
    Index restarts = 50;
    Index iterations = 500;
    std::uint64_t seed = 1;
};

/// min(gamma, 1) |S| min { b^T Sigma b : ||b_S||_1 = 1, ||b_{-S}||_1 <= L } with
/// Sigma the equal-weight pooled within-level Gram matrix (or X^T X / n
/// without levels). The minimum is searched by projected gradient from
/// random starts, so the value is a heuristic estimate of the constant.
double anchor_compatibility(const AnchorDataset& ds, double gamma, const std::vector<Index>& S, double L = 8.0,
                            const CompatibilityOptions& opt = {});

/// Pooled Gram matrix used by anchor_compatibility.
MatrixXd pooled_gram(const AnchorDataset& ds);

struct ExcessRiskOptions {
    std::uint64_t seed = 1;
    /// lambda = n * constant * sqrt((log d + log |A|) / n_min).
    double lambda_constant = 0.5;
};

struct ExcessRiskResult {
    std::vector<double> n_min;
    std::vector<double> mean_excess;
    double slope = 0.0;
};

/// Fits the equal-weight lasso on samples with n = |A| * n_min rows for each
/// n_min in the grid and regresses log mean excess risk on log n_min. The SCM
/// must have discrete anchors and b^gamma must be the target (no confounding).
ExcessRiskResult excess_risk_scaling(const LinearScm& scm, double gamma, const std::vector<Index>& n_min_grid,
                                     Index replicates, const ExcessRiskOptions& opt = {});

}  // namespace anchorlab
