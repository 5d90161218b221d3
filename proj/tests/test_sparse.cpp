#include "anchorlab/battery.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/sparse.hpp"

#include <doctest.h>

#include <cmath>

using namespace anchorlab;

namespace {

AnchorDataset level_data(Rng& rng, Index n, Index d, Index levels, double shift = 1.0) {
    MatrixXd X(n, d);
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    std::vector<std::string> labels;
    VectorXd offsets(levels);
    for (Index k = 0; k < levels; ++k) offsets(k) = shift * rng.normal();
    for (Index i = 0; i < n; ++i) {
        const Index k = i % levels;
        labels.push_back("L" + std::to_string(k));
        X.row(i).array() += offsets(k);
    }
    VectorXd beta = VectorXd::Zero(d);
    beta.head(std::min<Index>(d, 3)).setConstant(1.5);
    VectorXd Y = X * beta;
    for (Index i = 0; i < n; ++i) Y(i) += rng.normal() + offsets(i % levels);
    auto [A, enc] = encode_anchors(labels);
    AnchorDataset ds = make_dataset(X, Y, A);
    set_levels(ds, labels);
    return center(ds);
}

// ISTA on ||Y - X b||^2 + 2 lambda ||b||_1 run to a tight fixed point.
VectorXd ista(const MatrixXd& X, const VectorXd& Y, double lambda) {
    const MatrixXd G = X.transpose() * X;
    const VectorXd c = X.transpose() * Y;
    const double L = 2.0 * Eigen::SelfAdjointEigenSolver<MatrixXd>(G).eigenvalues().maxCoeff();
    VectorXd b = VectorXd::Zero(X.cols());
    for (int it = 0; it < 500000; ++it) {
        VectorXd z = b - 2.0 * (G * b - c) / L;
        const double t = 2.0 * lambda / L;
        z = z.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
        const double step = (z - b).lpNorm<Eigen::Infinity>();
        b = z;
        if (step < 1e-15) break;
    }
    return b;
}

}  // namespace

TEST_CASE("lasso matches a proximal-gradient oracle and satisfies KKT") {
    Rng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        const AnchorDataset ds = level_data(rng, 80, 12, 4);
        const double gamma = rep % 2 ? 1.0 : 5.0;
        const double lambda = 0.1 * lambda_max(ds, gamma);
        const AnchorFit fit = fit_anchor_lasso(ds, gamma, lambda);
        REQUIRE(fit.converged);
        const GammaTransformed t = gamma_transform(ds, gamma);
        const VectorXd oracle = ista(t.X, t.Y, lambda);
        auto f = [&](const VectorXd& b) { return (t.Y - t.X * b).squaredNorm() + 2 * lambda * b.lpNorm<1>(); };
        CHECK(f(fit.coefficients) == doctest::Approx(f(oracle)).epsilon(1e-9));
        CHECK(fit.objective == doctest::Approx(f(fit.coefficients)).epsilon(1e-12));
        const VectorXd grad = t.X.transpose() * (t.Y - t.X * fit.coefficients);
        for (Index k = 0; k < ds.d(); ++k) {
            const double bk = fit.coefficients(k);
            if (bk != 0.0) {
                CHECK(std::abs(grad(k) - std::copysign(lambda, bk)) <= 1e-6 * lambda);
            } else {
                CHECK(std::abs(grad(k)) <= lambda * (1 + 1e-6));
            }
        }
    }
}

TEST_CASE("lasso endpoints") {
    Rng rng(22);
    const AnchorDataset ds = level_data(rng, 100, 6, 5);
    const double top = lambda_max(ds, 2.0);
    CHECK(fit_anchor_lasso(ds, 2.0, top).coefficients.isZero());
    CHECK_FALSE(fit_anchor_lasso(ds, 2.0, 0.99 * top).coefficients.isZero());
    // lambda = 0 is the plain anchor fit
    CHECK((fit_anchor_lasso(ds, 2.0, 0.0).coefficients - fit_anchor(ds, 2.0).coefficients).norm() < 1e-6);
    CHECK_THROWS_AS(fit_anchor_lasso(ds, 2.0, -1.0), DomainError);
    CHECK_THROWS_AS(fit_anchor_lasso(ds, kInfiniteGamma, 1.0), DomainError);
}

TEST_CASE("coordinate descent objective never increases") {
    Rng rng(23);
    const AnchorDataset ds = level_data(rng, 60, 20, 3);
    LassoOptions opt;
    opt.record_history = true;
    const AnchorFit fit = fit_anchor_lasso(ds, 1.0, 0.05 * lambda_max(ds, 1.0), opt);
    REQUIRE(fit.sweep_objectives.size() >= 2);
    for (std::size_t i = 1; i < fit.sweep_objectives.size(); ++i) {
        CHECK(fit.sweep_objectives[i] <= fit.sweep_objectives[i - 1] * (1 + 1e-12));
    }
    CHECK(fit.sweep_objectives.back() == doctest::Approx(fit.objective).epsilon(1e-9));
}

TEST_CASE("an exhausted sweep budget is reported, not thrown") {
    Rng rng(24);
    const AnchorDataset ds = level_data(rng, 60, 20, 3);
    LassoOptions opt;
    opt.max_sweeps = 1;
    const AnchorFit fit = fit_anchor_lasso(ds, 1.0, 0.01 * lambda_max(ds, 1.0), opt);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 1);
    CHECK(fit.tolerance > 0.0);
}

TEST_CASE("lambda path with warm starts") {
    Rng rng(25);
    const AnchorDataset ds = level_data(rng, 90, 10, 3);
    const LambdaPath path = lambda_path(ds, 1.5, 15, 1e-3);
    REQUIRE(path.fits.size() == 15);
    CHECK(path.active_sizes.front() == 0);
    CHECK(path.active_sizes.back() > 0);
    for (std::size_t i = 1; i < path.lambdas.size(); ++i) CHECK(path.lambdas[i] < path.lambdas[i - 1]);
    for (std::size_t i = 0; i < path.fits.size(); ++i) {
        const AnchorFit cold = fit_anchor_lasso(ds, 1.5, path.lambdas[i]);
        CHECK((cold.coefficients - path.fits[i].coefficients).norm() < 1e-6);
    }
    CHECK_THROWS_AS(lambda_path(ds, 1.5, 1, 0.1), DomainError);
}

TEST_CASE("equal-weight objective and its Gram form") {
    Rng rng(26);
    const AnchorDataset ds = level_data(rng, 97, 4, 5, 2.0);
    const VectorXd b = VectorXd::LinSpaced(4, -1.0, 1.0);
    const double gamma = 3.0;

    // direct definition: average over levels of within variance + gamma * mean^2
    const VectorXd r = ds.Y - ds.X * b;
    double total = 0.0;
    for (const auto& lvl : ds.levels()) {
        double mean = 0.0;
        for (Index i : lvl.rows) mean += r(i);
        mean /= static_cast<double>(lvl.rows.size());
        double var = 0.0;
        for (Index i : lvl.rows) var += (r(i) - mean) * (r(i) - mean);
        total += var / static_cast<double>(lvl.rows.size()) + gamma * mean * mean;
    }
    total /= static_cast<double>(ds.level_labels.size());
    CHECK(equal_weight_objective(ds, b, gamma) == doctest::Approx(total).epsilon(1e-12));

    const LassoGram g = equal_weight_gram(ds, gamma);
    const double quad = g.yy - 2 * b.dot(g.c) + b.dot(g.G * b);
    CHECK(quad == doctest::Approx(static_cast<double>(ds.n()) * total).epsilon(1e-10));

    const AnchorFit fit = fit_equal_weight_lasso(ds, gamma, 0.05 * g.c.lpNorm<Eigen::Infinity>());
    CHECK(fit.converged);
    CHECK(fit.objective ==
          doctest::Approx(static_cast<double>(ds.n()) * equal_weight_objective(ds, fit.coefficients, gamma) +
                          2 * fit.lambda * fit.coefficients.lpNorm<1>()));

    AnchorDataset no_levels = make_dataset(ds.X, ds.Y, ds.A);
    CHECK_THROWS_AS(equal_weight_objective(no_levels, b, gamma), InvalidConfig);
}

TEST_CASE("compatibility constant") {
    // columns orthogonal with unit norm / n: pooled Gram = Id, and the
    // minimum of ||b||^2 over ||b_S||_1 = 1, b_{-S} = 0 is 1 / |S|
    const Index n = 8, d = 4;
    MatrixXd X = MatrixXd::Zero(n, d);
    const double s = std::sqrt(static_cast<double>(n));
    for (Index i = 0; i < n; ++i) X(i, i % d) = (i < d ? 1.0 : -1.0) * s / std::sqrt(2.0);
    AnchorDataset ds = make_dataset(X, VectorXd::Zero(n), MatrixXd::Zero(n, 1));
    ds.centered = true;
    ds.x_means = VectorXd::Zero(d);
    ds.a_means = VectorXd::Zero(1);
    CHECK((pooled_gram(ds) - MatrixXd::Identity(d, d)).norm() < 1e-12);
    CHECK(anchor_compatibility(ds, 2.0, {0, 1}, 8.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(anchor_compatibility(ds, 0.5, {0, 1, 2}, 8.0) == doctest::Approx(0.5).epsilon(1e-6));

    // random design: the constant never exceeds the value at a feasible point
    Rng rng(27);
    const AnchorDataset rd = level_data(rng, 60, 6, 3);
    const std::vector<Index> S{0, 2};
    const double phi = anchor_compatibility(rd, 1.0, S, 3.0);
    const MatrixXd sigma = pooled_gram(rd);
    for (int k = 0; k < 200; ++k) {
        VectorXd b(6);
        for (Index j = 0; j < 6; ++j) b(j) = rng.normal();
        b /= (std::abs(b(0)) + std::abs(b(2)));
        const double rest = b.lpNorm<1>() - 1.0;
        if (rest > 3.0) continue;
        CHECK(phi <= 2.0 * b.dot(sigma * b) + 1e-9);
    }
    CHECK(phi > 0.0);
    CHECK_THROWS_AS(anchor_compatibility(rd, 1.0, {}, 3.0), DomainError);
}

TEST_CASE("excess risk decreases with the sample size") {
    Rng rng(28);
    const LinearScm scm = sparse_discrete_scm(rng, 20, 3, 4, 2);
    ExcessRiskOptions opt;
    opt.seed = 5;
    const ExcessRiskResult res = excess_risk_scaling(scm, 2.0, {100, 400, 1600}, 4, opt);
    CHECK(res.mean_excess[0] > res.mean_excess[2]);
    CHECK(res.slope < -0.5);
    CHECK_THROWS_AS(excess_risk_scaling(example2_scm(), 2.0, {100, 200}, 2, opt), InvalidConfig);
}
