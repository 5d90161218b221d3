#include "anchorlab/sparse.hpp"

#include "anchorlab/error.hpp"

#include <cmath>

namespace anchorlab {

namespace {

LassoGram gram_of(const GammaTransformed& t) {
    LassoGram g;
    g.G = t.X.transpose() * t.X;
    g.c = t.X.transpose() * t.Y;
    g.yy = t.Y.squaredNorm();
    g.n = t.X.rows();
    return g;
}

void require_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and nonnegative");
}

AnchorFit finish_fit(const LassoSolution& sol, const GammaTransformed& t, const AnchorDataset& ds, double gamma,
                     double lambda) {
    AnchorFit fit;
    fit.gamma = gamma;
    fit.lambda = lambda;
    fit.coefficients = sol.b;
    fit.objective = (t.Y - t.X * sol.b).squaredNorm() + 2.0 * lambda * sol.b.lpNorm<1>();
    fit.iterations = sol.sweeps;
    fit.tolerance = sol.kkt_violation;
    fit.converged = sol.converged;
    fit.sweep_objectives = sol.history;
    detail::attach_means(fit, ds);
    return fit;
}

GammaTransformed checked_transform(const AnchorDataset& ds, double gamma, const char* who) {
    detail::require_centered(ds, who);
    detail::require_gamma(gamma);
    if (std::isinf(gamma)) throw DomainError(std::string(who) + " needs a finite gamma");
    return gamma_transform(ds, gamma);
}

std::vector<AnchorLevel> nonempty_levels(const AnchorDataset& ds) {
    if (!ds.has_levels()) throw InvalidConfig("equal-weight objective needs discrete anchor levels");
    std::vector<AnchorLevel> levels = ds.levels();
    for (const auto& lvl : levels) {
        if (lvl.rows.empty()) throw EmptyLevel("anchor level '" + lvl.label + "' has no rows");
    }
    return levels;
}

}  // namespace

AnchorFit fit_anchor_lasso(const AnchorDataset& ds, double gamma, double lambda, const LassoOptions& opt,
                           const std::optional<VectorXd>& warm_start) {
    require_lambda(lambda);
    const GammaTransformed t = checked_transform(ds, gamma, "fit_anchor_lasso");
    const LassoSolution sol = solve_lasso_gram(gram_of(t), lambda, warm_start.value_or(VectorXd()), opt);
    return finish_fit(sol, t, ds, gamma, lambda);
}

double lambda_max(const AnchorDataset& ds, double gamma) {
    const GammaTransformed t = checked_transform(ds, gamma, "lambda_max");
    return (t.X.transpose() * t.Y).lpNorm<Eigen::Infinity>();
}

LambdaPath lambda_path(const AnchorDataset& ds, double gamma, Index n_lambdas, double ratio,
                       const LassoOptions& opt) {
    if (n_lambdas < 2) throw DomainError("a lambda path needs at least two values");
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("lambda ratio must lie in (0, 1)");
    const GammaTransformed t = checked_transform(ds, gamma, "lambda_path");
    const LassoGram problem = gram_of(t);
    const double top = problem.c.lpNorm<Eigen::Infinity>();

    LambdaPath path;
    path.gamma = gamma;
    VectorXd warm = VectorXd::Zero(ds.d());
    for (Index i = 0; i < n_lambdas; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_lambdas - 1);
        const double lambda = top * std::pow(ratio, frac);
        const LassoSolution sol = solve_lasso_gram(problem, lambda, warm, opt);
        warm = sol.b;
        path.lambdas.push_back(lambda);
        path.fits.push_back(finish_fit(sol, t, ds, gamma, lambda));
        path.active_sizes.push_back(static_cast<Index>((sol.b.array() != 0.0).count()));
    }
    return path;
}

double equal_weight_objective(const AnchorDataset& ds, const VectorXd& b, double gamma) {
    detail::require_gamma(gamma);
    if (b.size() != ds.d()) throw DimensionMismatch("b must have d entries");
    const std::vector<AnchorLevel> levels = nonempty_levels(ds);
    const VectorXd r = ds.Y - ds.X * b;
    double within = 0.0;
    double between = 0.0;
    for (const auto& lvl : levels) {
        double mean = 0.0;
        for (Index i : lvl.rows) mean += r(i);
        mean /= static_cast<double>(lvl.rows.size());
        double ss = 0.0;
        for (Index i : lvl.rows) ss += (r(i) - mean) * (r(i) - mean);
        within += ss / static_cast<double>(lvl.rows.size());
        between += mean * mean;
    }
    const double k = static_cast<double>(levels.size());
    return within / k + gamma * between / k;
}

LassoGram equal_weight_gram(const AnchorDataset& ds, double gamma) {
    detail::require_gamma(gamma);
    if (std::isinf(gamma)) throw DomainError("equal-weight objective needs a finite gamma");
    const std::vector<AnchorLevel> levels = nonempty_levels(ds);
    const double n = static_cast<double>(ds.n());
    const double k = static_cast<double>(levels.size());

    LassoGram g;
    g.G = MatrixXd::Zero(ds.d(), ds.d());
    g.c = VectorXd::Zero(ds.d());
    g.n = ds.n();
    for (const auto& lvl : levels) {
        const Index na = static_cast<Index>(lvl.rows.size());
        MatrixXd Xa(na, ds.d());
        VectorXd Ya(na);
        for (Index i = 0; i < na; ++i) {
            Xa.row(i) = ds.X.row(lvl.rows[static_cast<std::size_t>(i)]);
            Ya(i) = ds.Y(lvl.rows[static_cast<std::size_t>(i)]);
        }
        const VectorXd xbar = Xa.colwise().mean();
        const double ybar = Ya.mean();
        Xa.rowwise() -= xbar.transpose();
        Ya.array() -= ybar;

        const double w_within = n / (k * static_cast<double>(na));
        const double w_mean = n * gamma / k;
        g.G.noalias() += w_within * (Xa.transpose() * Xa) + w_mean * xbar * xbar.transpose();
        g.c.noalias() += w_within * (Xa.transpose() * Ya) + w_mean * ybar * xbar;
        g.yy += w_within * Ya.squaredNorm() + w_mean * ybar * ybar;
    }
    return g;
}

AnchorFit fit_equal_weight_lasso(const AnchorDataset& ds, double gamma, double lambda, const LassoOptions& opt) {
    require_lambda(lambda);
    const LassoGram problem = equal_weight_gram(ds, gamma);
    const LassoSolution sol = solve_lasso_gram(problem, lambda, VectorXd(), opt);

    AnchorFit fit;
    fit.gamma = gamma;
    fit.lambda = lambda;
    fit.coefficients = sol.b;
    fit.objective = static_cast<double>(ds.n()) * equal_weight_objective(ds, sol.b, gamma) +
                    2.0 * lambda * sol.b.lpNorm<1>();
    fit.iterations = sol.sweeps;
    fit.tolerance = sol.kkt_violation;
    fit.converged = sol.converged;
    fit.sweep_objectives = sol.history;
    detail::attach_means(fit, ds);
    return fit;
}

ExcessRiskResult excess_risk_scaling(const LinearScm& scm, double gamma, const std::vector<Index>& n_min_grid,
                                     Index replicates, const ExcessRiskOptions& opt) {
    if (replicates < 1) throw InvalidConfig("excess_risk_scaling needs at least one replicate");
    if (n_min_grid.size() < 2) throw InvalidConfig("excess_risk_scaling needs at least two sample sizes");
    if (scm.anchor.kind != AnchorDistribution::Discrete) {
        throw InvalidConfig("excess_risk_scaling needs an SCM with discrete anchors");
    }
    const Index levels = scm.anchor.support.rows();
    const VectorXd target = population_anchor(scm, gamma);
    const double best = worst_case_risk(scm, target, gamma);
    const double log_terms = std::log(static_cast<double>(scm.d)) + std::log(static_cast<double>(levels));

    const std::size_t tasks = n_min_grid.size() * static_cast<std::size_t>(replicates);
    std::vector<double> excess(tasks, 0.0);
    const Rng root(opt.seed);
    parallel_for(tasks, [&](std::size_t task) {
        const Index n_min = n_min_grid[task / static_cast<std::size_t>(replicates)];
        Rng rng = root.derive(task);
        const AnchorDataset ds = center(sample(scm, levels * n_min, rng).data);
        Index realized = ds.n();
        for (const auto& lvl : ds.levels()) realized = std::min<Index>(realized, static_cast<Index>(lvl.rows.size()));
        const double n = static_cast<double>(ds.n());
        const double lambda = n * opt.lambda_constant * std::sqrt(log_terms / static_cast<double>(realized));
        const AnchorFit fit = fit_equal_weight_lasso(ds, gamma, lambda);
        excess[task] = worst_case_risk(scm, fit.coefficients, gamma) - best;
    });

    ExcessRiskResult res;
    for (std::size_t g = 0; g < n_min_grid.size(); ++g) {
        double sum = 0.0;
        for (Index rep = 0; rep < replicates; ++rep) sum += excess[g * static_cast<std::size_t>(replicates) + rep];
        res.n_min.push_back(static_cast<double>(n_min_grid[g]));
        res.mean_excess.push_back(sum / static_cast<double>(replicates));
    }
    // least-squares slope of log excess on log n_min
    const Index m = static_cast<Index>(res.n_min.size());
    VectorXd lx(m), ly(m);
    for (Index i = 0; i < m; ++i) {
        lx(i) = std::log(res.n_min[static_cast<std::size_t>(i)]);
        ly(i) = std::log(std::max(res.mean_excess[static_cast<std::size_t>(i)], 1e-300));
    }
    lx.array() -= lx.mean();
    ly.array() -= ly.mean();
    res.slope = lx.dot(ly) / lx.squaredNorm();
    return res;
}

}  // namespace anchorlab
