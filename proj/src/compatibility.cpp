#include "anchorlab/error.hpp"
#include "anchorlab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace anchorlab {

namespace {

// Euclidean projection onto {x : ||x||_1 <= radius} (sort-and-threshold).
VectorXd project_l1_ball(const VectorXd& z, double radius) {
    if (z.lpNorm<1>() <= radius) return z;
    VectorXd u = z.cwiseAbs();
    std::sort(u.data(), u.data() + u.size(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Index j = 0; j < u.size(); ++j) {
        cumsum += u(j);
        const double t = (cumsum - radius) / static_cast<double>(j + 1);
        if (u(j) - t > 0.0) theta = t;
    }
    VectorXd x(z.size());
    for (Index j = 0; j < z.size(); ++j) {
        const double mag = std::max(std::abs(z(j)) - theta, 0.0);
        x(j) = z(j) >= 0.0 ? mag : -mag;
    }
    return x;
}

// A nearest-point map onto the l1 sphere {||x||_1 = 1}: points outside go to
// the ball boundary, points inside are pushed outward along their sign pattern.
VectorXd project_l1_sphere(const VectorXd& z) {
    const double norm = z.lpNorm<1>();
    if (norm >= 1.0) return project_l1_ball(z, 1.0);
    const double add = (1.0 - norm) / static_cast<double>(z.size());
    VectorXd x(z.size());
    for (Index j = 0; j < z.size(); ++j) x(j) = (z(j) >= 0.0 ? 1.0 : -1.0) * (std::abs(z(j)) + add);
    return x;
}

}  // namespace

MatrixXd pooled_gram(const AnchorDataset& ds) {
    if (!ds.has_levels()) return ds.X.transpose() * ds.X / static_cast<double>(std::max<Index>(ds.n(), 1));
    const std::vector<AnchorLevel> levels = ds.levels();
    MatrixXd sigma = MatrixXd::Zero(ds.d(), ds.d());
    for (const auto& lvl : levels) {
        if (lvl.rows.empty()) throw EmptyLevel("anchor level '" + lvl.label + "' has no rows");
        MatrixXd Xa(static_cast<Index>(lvl.rows.size()), ds.d());
        for (std::size_t i = 0; i < lvl.rows.size(); ++i) Xa.row(static_cast<Index>(i)) = ds.X.row(lvl.rows[i]);
        sigma.noalias() += Xa.transpose() * Xa / static_cast<double>(lvl.rows.size());
    }
    return sigma / static_cast<double>(levels.size());
}

double anchor_compatibility(const AnchorDataset& ds, double gamma, const std::vector<Index>& S, double L,
                            const CompatibilityOptions& opt) {
    detail::require_gamma(gamma);
    if (S.empty()) throw DomainError("compatibility needs a nonempty index set S");
    if (!(L >= 0.0)) throw DomainError("stretch factor L must be nonnegative");
    const Index d = ds.d();
    std::vector<bool> in_s(static_cast<std::size_t>(d), false);
    for (Index k : S) {
        if (k < 0 || k >= d) throw DomainError("index in S out of range");
        in_s[static_cast<std::size_t>(k)] = true;
    }
    std::vector<Index> rest;
    for (Index k = 0; k < d; ++k) {
        if (!in_s[static_cast<std::size_t>(k)]) rest.push_back(k);
    }
    const auto s_size = static_cast<Index>(S.size());
    const auto rest_size = static_cast<Index>(rest.size());

    const MatrixXd sigma = pooled_gram(ds);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    const double top = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    const double step = 0.5 / top;

    auto assemble = [&](const VectorXd& bs, const VectorXd& br) {
        VectorXd b = VectorXd::Zero(d);
        for (Index j = 0; j < s_size; ++j) b(S[static_cast<std::size_t>(j)]) = bs(j);
        for (Index j = 0; j < rest_size; ++j) b(rest[static_cast<std::size_t>(j)]) = br(j);
        return b;
    };

    Rng rng(opt.seed);
    double best = std::numeric_limits<double>::infinity();
    for (Index start = 0; start < opt.restarts; ++start) {
        VectorXd bs(s_size), br(rest_size);
        for (Index j = 0; j < s_size; ++j) bs(j) = rng.normal();
        for (Index j = 0; j < rest_size; ++j) br(j) = rng.normal();
        bs = project_l1_sphere(bs);
        br = project_l1_ball(br * (L * rng.uniform()), L);

        for (Index it = 0; it < opt.iterations; ++it) {
            const VectorXd grad = 2.0 * sigma * assemble(bs, br);
            VectorXd gs(s_size), gr(rest_size);
            for (Index j = 0; j < s_size; ++j) gs(j) = grad(S[static_cast<std::size_t>(j)]);
            for (Index j = 0; j < rest_size; ++j) gr(j) = grad(rest[static_cast<std::size_t>(j)]);
            bs = project_l1_sphere(bs - step * gs);
            if (rest_size > 0) br = project_l1_ball(br - step * gr, L);
        }
        const VectorXd b = assemble(bs, br);
        best = std::min(best, b.dot(sigma * b));
    }
    return std::min(gamma, 1.0) * static_cast<double>(s_size) * std::max(best, 0.0);
}

}  // namespace anchorlab
