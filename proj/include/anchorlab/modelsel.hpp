#pragma once

#include "anchorlab/estimators.hpp"
#include "anchorlab/scm.hpp"
#include "anchorlab/sparse.hpp"

#include <optional>
#include <string>
#include <vector>

namespace anchorlab {

/// chi^2_1 alpha-quantile: the gamma whose anchor objective equals the
/// alpha-quantile of the conditional MSE given A (Gaussian case).
double quantile_gamma(double alpha);

/// Type-1 (nearest-rank) empirical quantile: sorted[ceil(alpha m) - 1].
double nearest_rank_quantile(std::vector<double> values, double alpha);

struct ConditionalMseReport {
    std::vector<std::string> levels;
    std::vector<double> level_mse;
    std::vector<double> alphas;
    std::vector<double> quantiles;
};

/// Per-level mean of (Y - X b)^2 on the stored values, and nearest-rank
/// quantiles across levels. Throws EmptyLevel / InvalidConfig without levels.
ConditionalMseReport conditional_mse_quantiles(const AnchorDataset& ds, const VectorXd& b,
                                               const std::vector<double>& alphas);

/// Same, from residuals and the level of each row.
ConditionalMseReport conditional_mse_quantiles(const VectorXd& residuals, const std::vector<Index>& level_of_row,
                                               const std::vector<std::string>& level_labels,
                                               const std::vector<double>& alphas);

struct ConditionalQuantileCheck {
    double alpha = 0.0;
    double monte_carlo = 0.0;
    double standard_error = 0.0;
    double predicted = 0.0;
};

/// For a Gaussian-anchor SCM, E[(Y - X^T b)^2 | A = a] = c0 + (w_b^T M a)^2.
/// Draws `draws` anchors, takes the empirical alpha-quantile of that
/// conditional MSE and compares it with worst_case_risk at gamma = chi^2_1(alpha).
ConditionalQuantileCheck conditional_quantile_check(const LinearScm& scm, const VectorXd& b, double alpha,
                                                    Index draws, Rng& rng);

struct GammaCvResult {
    std::vector<double> gamma_grid;
    std::vector<double> alphas;
    /// scores[g][a]: fold-averaged alpha-quantile of held-out conditional MSE.
    std::vector<std::vector<double>> scores;
    std::vector<double> selected_gamma;
    std::vector<std::vector<std::string>> fold_levels;
};

/// Level-grouped cross-validation of gamma. Folds are contiguous blocks of
/// levels in label order; each fold is fitted on re-centred training rows and
/// scored on held-out rows with training means. `lambda` switches to the
/// l1 fit (scaled by n_train / n).
GammaCvResult cv_gamma(const AnchorDataset& ds, const std::vector<double>& alphas,
                       const std::vector<double>& gamma_grid, Index folds,
                       const std::optional<double>& lambda = std::nullopt);

struct LambdaCvResult {
    std::vector<double> lambdas;
    std::vector<double> mse;
    double selected = 0.0;
};

/// Held-out MSE of fit_anchor_lasso at fixed gamma over a lambda grid
/// (default: 20 log-spaced values down to 1e-2 * lambda_max). Folds follow
/// anchor levels when present and contiguous row blocks otherwise.
LambdaCvResult cv_lambda(const AnchorDataset& ds, double gamma, Index folds,
                         const std::vector<double>& lambdas = {});

struct StabilityReport {
    std::vector<double> gamma_grid;
    VectorXd b_zero;
    std::vector<VectorXd> path;
    std::optional<VectorXd> b_infinity;
    double max_gap = 0.0;
    double relative_gap = 0.0;
    double tolerance = 0.0;
    std::vector<bool> coordinate_stable;
    bool stable = false;
    ProjectabilityReport projectability;
    std::vector<std::string> warnings;
};

/// Fits b^0, b^gamma on the grid and b^inf (when identified and the sample
/// projectability check passes) and compares them with tolerance
/// rel_tol * ||b^0||_inf.
StabilityReport anchor_stability_test(const AnchorDataset& ds, const std::vector<double>& gamma_grid,
                                      double rel_tol = 0.05);

struct RankingTable {
    std::vector<std::string> names;
    std::vector<double> a_scores;
    std::vector<double> l_scores;
    std::vector<double> gamma_grid;
    double lambda = 0.0;
};

/// Log-spaced gamma grid on [lo, hi] with 0 and 1 included when in range.
std::vector<double> gamma_grid_in(double lo, double hi, Index size);

/// a_k = min over the gamma grid of |b_k^{gamma, lambda}|, l_k = |b_k^{0, lambda}|.
/// Without lambda, it is chosen by cv_lambda at gamma = 0 (folds capped at the
/// number of anchor levels).
RankingTable replicability_rank(const AnchorDataset& ds, const std::optional<double>& lambda, double gamma_lo,
                                double gamma_hi, Index grid_size = 21, Index cv_folds = 5);

}  // namespace anchorlab
