#include "anchorlab/modelsel.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace anchorlab {

namespace {

AnchorDataset centred(const AnchorDataset& ds) { return ds.centered ? ds : center(ds); }

struct Fold {
    std::vector<Index> train;
    std::vector<Index> test;
    std::vector<std::string> test_levels;
};

/// Contiguous blocks of levels (label order), or of rows without levels.
std::vector<Fold> make_folds(const AnchorDataset& ds, Index folds, bool require_levels) {
    if (folds < 2) throw InvalidConfig("cross-validation needs at least two folds");
    std::vector<Fold> out(static_cast<std::size_t>(folds));
    if (ds.has_levels()) {
        const std::vector<AnchorLevel> levels = ds.levels();
        const auto count = static_cast<Index>(levels.size());
        if (count < 2) throw InsufficientLevels("cross-validation needs at least two anchor levels");
        if (count < folds) {
            throw InsufficientLevels(std::to_string(count) + " anchor levels cannot fill " + std::to_string(folds) +
                                     " folds");
        }
        for (Index k = 0; k < count; ++k) {
            const auto f = static_cast<std::size_t>(k * folds / count);
            const auto& lvl = levels[static_cast<std::size_t>(k)];
            out[f].test_levels.push_back(lvl.label);
            for (std::size_t g = 0; g < out.size(); ++g) {
                auto& target = g == f ? out[g].test : out[g].train;
                target.insert(target.end(), lvl.rows.begin(), lvl.rows.end());
            }
        }
    } else {
        if (require_levels) throw InsufficientLevels("cross-validation over gamma needs discrete anchor levels");
        const Index n = ds.n();
        if (n < folds) throw InvalidConfig("fewer rows than folds");
        for (Index i = 0; i < n; ++i) {
            const auto f = static_cast<std::size_t>(i * folds / n);
            for (std::size_t g = 0; g < out.size(); ++g) (g == f ? out[g].test : out[g].train).push_back(i);
        }
    }
    for (auto& fold : out) {
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.test.begin(), fold.test.end());
    }
    return out;
}

void assert_fold_hygiene(const AnchorDataset& ds, const Fold& fold) {
    if (!ds.has_levels()) return;
    std::set<Index> train_levels;
    for (Index i : fold.train) train_levels.insert(ds.level_of_row[static_cast<std::size_t>(i)]);
    for (Index i : fold.test) {
        if (train_levels.count(ds.level_of_row[static_cast<std::size_t>(i)])) {
            throw std::logic_error("cross-validation fold shares an anchor level between train and test");
        }
    }
}

AnchorFit fit_for(const AnchorDataset& train, double gamma, const std::optional<double>& lambda, double n_full) {
    if (!lambda) return fit_anchor_or_iv(train, gamma);
    const double scaled = *lambda * static_cast<double>(train.n()) / n_full;
    return fit_anchor_lasso(train, gamma, scaled);
}

}  // namespace

double quantile_gamma(double alpha) { return chi2_1_quantile(alpha); }

double nearest_rank_quantile(std::vector<double> values, double alpha) {
    if (values.empty()) throw EmptyInput("quantile of an empty sample");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("quantile level must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const auto m = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(alpha * m - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

ConditionalMseReport conditional_mse_quantiles(const VectorXd& residuals, const std::vector<Index>& level_of_row,
                                               const std::vector<std::string>& level_labels,
                                               const std::vector<double>& alphas) {
    if (level_labels.empty()) throw InvalidConfig("conditional MSE needs discrete anchor levels");
    if (static_cast<Index>(level_of_row.size()) != residuals.size()) {
        throw DimensionMismatch("one level per residual is required");
    }
    std::vector<double> sum(level_labels.size(), 0.0);
    std::vector<Index> count(level_labels.size(), 0);
    for (Index i = 0; i < residuals.size(); ++i) {
        const auto lvl = static_cast<std::size_t>(level_of_row[static_cast<std::size_t>(i)]);
        sum[lvl] += residuals(i) * residuals(i);
        ++count[lvl];
    }
    ConditionalMseReport rep;
    rep.alphas = alphas;
    for (std::size_t k = 0; k < level_labels.size(); ++k) {
        if (count[k] == 0) throw EmptyLevel("anchor level '" + level_labels[k] + "' has no rows");
        rep.levels.push_back(level_labels[k]);
        rep.level_mse.push_back(sum[k] / static_cast<double>(count[k]));
    }
    for (double a : alphas) rep.quantiles.push_back(nearest_rank_quantile(rep.level_mse, a));
    return rep;
}

ConditionalMseReport conditional_mse_quantiles(const AnchorDataset& ds, const VectorXd& b,
                                               const std::vector<double>& alphas) {
    if (b.size() != ds.d()) throw DimensionMismatch("b must have d entries");
    return conditional_mse_quantiles(ds.Y - ds.X * b, ds.level_of_row, ds.level_labels, alphas);
}

ConditionalQuantileCheck conditional_quantile_check(const LinearScm& scm, const VectorXd& b, double alpha,
                                                    Index draws, Rng& rng) {
    if (scm.anchor.kind != AnchorDistribution::Gaussian) {
        throw InvalidConfig("the quantile identity is checked for Gaussian anchors");
    }
    if (draws < 2) throw DomainError("need at least two anchor draws");
    const VectorXd w = shift_weights(scm, b);
    const double base = w.dot(scm.noise_covariance() * w);
    const VectorXd loading = scm.M.transpose() * w;  // (w^T M a) = loading^T a
    const MatrixXd root = psd_sqrt(scm.gram());

    std::vector<double> values(static_cast<std::size_t>(draws));
    for (Index i = 0; i < draws; ++i) {
        VectorXd z(scm.q);
        for (Index k = 0; k < scm.q; ++k) z(k) = rng.normal();
        const double s = loading.dot(root * z);
        values[static_cast<std::size_t>(i)] = base + s * s;
    }

    ConditionalQuantileCheck out;
    out.alpha = alpha;
    out.monte_carlo = nearest_rank_quantile(values, alpha);
    out.predicted = worst_case_risk(scm, b, quantile_gamma(alpha));
    // asymptotic SE of a sample quantile: sqrt(alpha(1-alpha)/m) / density
    const double scale = loading.dot(scm.gram() * loading);
    const double u = (out.predicted - base) / scale;
    const double density = std::exp(-0.5 * u) / std::sqrt(2.0 * M_PI * u) / scale;
    out.standard_error = std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(draws)) / density;
    return out;
}

GammaCvResult cv_gamma(const AnchorDataset& ds, const std::vector<double>& alphas,
                       const std::vector<double>& gamma_grid, Index folds, const std::optional<double>& lambda) {
    if (gamma_grid.empty()) throw InvalidConfig("gamma grid is empty");
    if (alphas.empty()) throw InvalidConfig("quantile levels are empty");
    for (double g : gamma_grid) detail::require_gamma(g);
    for (double a : alphas) {
        if (!(a > 0.0 && a <= 1.0)) throw DomainError("quantile levels must lie in (0, 1]");
    }
    const std::vector<Fold> fold_rows = make_folds(ds, folds, true);
    for (const auto& fold : fold_rows) assert_fold_hygiene(ds, fold);

    const std::size_t ng = gamma_grid.size();
    const std::size_t na = alphas.size();
    std::vector<std::vector<double>> per_task(fold_rows.size() * ng);
    const double n_full = static_cast<double>(ds.n());

    parallel_for(per_task.size(), [&](std::size_t task) {
        const Fold& fold = fold_rows[task / ng];
        const double gamma = gamma_grid[task % ng];
        const AnchorDataset train = center(subset_rows(ds, fold.train));
        const AnchorDataset test = subset_rows(ds, fold.test);
        const AnchorFit fit = fit_for(train, gamma, lambda, n_full);
        const VectorXd resid = test.Y - predict(fit, test.X);
        per_task[task] = conditional_mse_quantiles(resid, test.level_of_row, test.level_labels, alphas).quantiles;
    });

    GammaCvResult res;
    res.gamma_grid = gamma_grid;
    res.alphas = alphas;
    res.scores.assign(ng, std::vector<double>(na, 0.0));
    for (std::size_t task = 0; task < per_task.size(); ++task) {
        for (std::size_t a = 0; a < na; ++a) res.scores[task % ng][a] += per_task[task][a];
    }
    for (auto& row : res.scores) {
        for (double& v : row) v /= static_cast<double>(fold_rows.size());
    }
    for (std::size_t a = 0; a < na; ++a) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < ng; ++g) {
            if (res.scores[g][a] < res.scores[best][a]) best = g;
        }
        res.selected_gamma.push_back(gamma_grid[best]);
    }
    for (const auto& fold : fold_rows) res.fold_levels.push_back(fold.test_levels);
    return res;
}

LambdaCvResult cv_lambda(const AnchorDataset& ds, double gamma, Index folds, const std::vector<double>& lambdas) {
    LambdaCvResult res;
    res.lambdas = lambdas;
    if (res.lambdas.empty()) {
        const double top = lambda_max(centred(ds), gamma);
        for (Index i = 0; i < 20; ++i) res.lambdas.push_back(top * std::pow(1e-2, static_cast<double>(i) / 19.0));
    }
    const std::vector<Fold> fold_rows = make_folds(ds, folds, false);
    const std::size_t nl = res.lambdas.size();
    std::vector<double> sse(fold_rows.size() * nl, 0.0);
    const double n_full = static_cast<double>(ds.n());

    parallel_for(fold_rows.size(), [&](std::size_t f) {
        const AnchorDataset train = center(subset_rows(ds, fold_rows[f].train));
        const AnchorDataset test = subset_rows(ds, fold_rows[f].test);
        const double scale = static_cast<double>(train.n()) / n_full;
        const GammaTransformed t = gamma_transform(train, gamma);
        LassoGram problem;
        problem.G = t.X.transpose() * t.X;
        problem.c = t.X.transpose() * t.Y;
        problem.yy = t.Y.squaredNorm();
        problem.n = train.n();
        VectorXd warm = VectorXd::Zero(ds.d());
        for (std::size_t l = 0; l < nl; ++l) {
            warm = solve_lasso_gram(problem, res.lambdas[l] * scale, warm).b;
            AnchorFit fit;
            fit.coefficients = warm;
            fit.x_means = train.x_means;
            fit.y_mean = train.y_mean;
            sse[f * nl + l] = (test.Y - predict(fit, test.X)).squaredNorm();
        }
    });

    res.mse.assign(nl, 0.0);
    for (std::size_t f = 0; f < fold_rows.size(); ++f) {
        for (std::size_t l = 0; l < nl; ++l) res.mse[l] += sse[f * nl + l] / n_full;
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < nl; ++l) {
        if (res.mse[l] < res.mse[best]) best = l;
    }
    res.selected = res.lambdas[best];
    return res;
}

StabilityReport anchor_stability_test(const AnchorDataset& raw, const std::vector<double>& gamma_grid,
                                      double rel_tol) {
    if (gamma_grid.empty()) throw InvalidConfig("gamma grid is empty");
    const AnchorDataset ds = centred(raw);
    StabilityReport rep;
    rep.gamma_grid = gamma_grid;
    rep.b_zero = fit_anchor(ds, 0.0).coefficients;
    for (double g : gamma_grid) rep.path.push_back(fit_anchor_or_iv(ds, g).coefficients);
    rep.projectability = projectability_check(ds);

    const bool degenerate = gamma_grid.size() < 2;
    if (degenerate) {
        rep.warnings.push_back("gamma grid has a single value; only b^0 and that fit are compared");
    } else if (!rep.projectability.holds) {
        rep.warnings.push_back("sample projectability check fails; the IV endpoint is skipped");
    } else {
        try {
            rep.b_infinity = fit_iv(ds).coefficients;
        } catch (const Underidentified& e) {
            rep.warnings.push_back(std::string("IV endpoint not identified: ") + e.what());
        }
    }

    std::vector<VectorXd> all = rep.path;
    all.push_back(rep.b_zero);
    if (rep.b_infinity) all.push_back(*rep.b_infinity);
    VectorXd coord_gap = VectorXd::Zero(ds.d());
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            coord_gap = coord_gap.cwiseMax((all[i] - all[j]).cwiseAbs());
        }
    }
    rep.max_gap = coord_gap.size() ? coord_gap.maxCoeff() : 0.0;
    const double scale = rep.b_zero.lpNorm<Eigen::Infinity>();
    rep.relative_gap = scale > 0.0 ? rep.max_gap / scale : rep.max_gap;
    rep.tolerance = rel_tol * scale;
    for (Index k = 0; k < coord_gap.size(); ++k) rep.coordinate_stable.push_back(coord_gap(k) <= rep.tolerance);
    rep.stable = rep.max_gap <= rep.tolerance;
    return rep;
}

std::vector<double> gamma_grid_in(double lo, double hi, Index size) {
    if (!(lo >= 0.0 && hi > lo) || std::isinf(hi)) throw DomainError("gamma range must satisfy 0 <= lo < hi < inf");
    if (size < 2) throw DomainError("gamma grid needs at least two points");
    const double start = lo > 0.0 ? lo : hi * 1e-3;
    std::vector<double> grid;
    if (lo == 0.0) grid.push_back(0.0);
    const double step = (std::log(hi) - std::log(start)) / static_cast<double>(size - 1);
    for (Index i = 0; i < size; ++i) grid.push_back(std::exp(std::log(start) + step * static_cast<double>(i)));
    grid.back() = hi;
    if (lo <= 1.0 && 1.0 <= hi) grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }),
               grid.end());
    return grid;
}

RankingTable replicability_rank(const AnchorDataset& raw, const std::optional<double>& lambda, double gamma_lo,
                                double gamma_hi, Index grid_size, Index cv_folds) {
    const AnchorDataset ds = centred(raw);
    RankingTable table;
    table.names = ds.predictor_names;
    table.gamma_grid = gamma_grid_in(gamma_lo, gamma_hi, grid_size);
    if (lambda) {
        if (!(*lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
        table.lambda = *lambda;
    } else {
        Index folds = cv_folds;
        if (ds.has_levels()) folds = std::min<Index>(folds, static_cast<Index>(ds.level_labels.size()));
        table.lambda = cv_lambda(ds, 0.0, folds).selected;
    }

    std::vector<VectorXd> coefs(table.gamma_grid.size());
    parallel_for(coefs.size(), [&](std::size_t g) {
        coefs[g] = fit_anchor_lasso(ds, table.gamma_grid[g], table.lambda).coefficients;
    });
    const VectorXd lasso = fit_anchor_lasso(ds, 0.0, table.lambda).coefficients;
    for (Index k = 0; k < ds.d(); ++k) {
        double a = std::abs(coefs.front()(k));
        for (const auto& c : coefs) a = std::min(a, std::abs(c(k)));
        table.a_scores.push_back(a);
        table.l_scores.push_back(std::abs(lasso(k)));
    }
    return table;
}

}  // namespace anchorlab
