#include "anchorlab/causal.hpp"

#include "anchorlab/error.hpp"
#include "anchorlab/graph.hpp"

#include <algorithm>
#include <cmath>

namespace anchorlab {

namespace {

MatrixXd cut_and_solve(const LinearScm& scm, const std::vector<Index>& rows) {
    if (!scm.acyclic()) throw CyclicGraph("interventional effects need an acyclic SCM");
    MatrixXd Bcut = scm.B;
    for (Index k : rows) Bcut.row(k).setZero();
    return (MatrixXd::Identity(scm.p(), scm.p()) - Bcut).fullPivLu().inverse();
}

}  // namespace

VectorXd total_causal_effect(const LinearScm& scm) {
    std::vector<Index> rows(static_cast<std::size_t>(scm.d));
    for (Index k = 0; k < scm.d; ++k) rows[static_cast<std::size_t>(k)] = k;
    const MatrixXd S = cut_and_solve(scm, rows);
    return S.row(scm.y_index()).head(scm.d).transpose();
}

double total_causal_effect_single(const LinearScm& scm, Index k) {
    if (k < 0 || k >= scm.d) throw DomainError("predictor index out of range");
    return cut_and_solve(scm, {k})(scm.y_index(), k);
}

CausalStabilityReport anchor_stability_causal_check(const LinearScm& scm, const std::vector<double>& gamma_grid,
                                                    double rel_tol) {
    if (!scm.acyclic()) throw CyclicGraph("stability-causality check needs an acyclic SCM");
    for (Index k = 0; k < scm.d; ++k) {
        if (scm.M.row(k).cwiseAbs().maxCoeff() == 0.0) {
            throw AssumptionViolated("X" + std::to_string(k + 1) + " has no anchor parent");
        }
    }
    const PopulationMoments mom = population_covariance(scm);
    if (!projectability_check(mom).holds) throw AssumptionViolated("projectability condition fails");

    CausalStabilityReport rep;
    rep.gamma_grid = gamma_grid;
    rep.b_zero = population_anchor(mom, 0.0);
    rep.b_infinity = population_iv(mom);
    for (double g : gamma_grid) rep.path.push_back(population_anchor(mom, g));

    std::vector<VectorXd> all = rep.path;
    all.push_back(rep.b_zero);
    all.push_back(rep.b_infinity);
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            rep.max_gap = std::max(rep.max_gap, (all[i] - all[j]).lpNorm<Eigen::Infinity>());
        }
    }
    rep.tolerance = rel_tol * (1.0 + rep.b_zero.lpNorm<Eigen::Infinity>());
    rep.stable = rep.max_gap <= rep.tolerance;

    const CausalGraph graph = CausalGraph::from_scm(scm);
    const ScmNodes ids(scm);
    const std::vector<bool> y_anc = graph.ancestors({ids.y()});
    std::vector<Index> xs;
    for (Index k = 0; k < scm.d; ++k) xs.push_back(ids.x(k));
    rep.unconfounded = true;
    for (Index j = 0; j < scm.r; ++j) {
        const Index h = ids.h(j);
        if (!y_anc[static_cast<std::size_t>(h)]) continue;
        for (Index x : xs) {
            if (graph.has_directed_path(h, x)) {
                rep.unconfounded = false;
                rep.notes.push_back(graph.names[static_cast<std::size_t>(h)] + " is a common ancestor of Y and " +
                                    graph.names[static_cast<std::size_t>(x)]);
            }
        }
    }

    rep.causal_effect = total_causal_effect(scm);
    rep.causal_gap = (rep.b_zero - rep.causal_effect).lpNorm<Eigen::Infinity>();
    rep.matches_causal_effect = rep.causal_gap <= rep.tolerance;
    if (rep.stable && !rep.matches_causal_effect) {
        rep.notes.push_back("stable path differs from the causal effect; faithfulness may fail");
    }
    if (!rep.stable) rep.notes.push_back("anchor regression path is not stable");
    return rep;
}

std::vector<double> default_gamma_grid(double lo, double hi, Index size) {
    if (!(lo > 0.0 && hi > lo) || size < 2) throw DomainError("gamma grid needs 0 < lo < hi and at least two points");
    std::vector<double> grid{0.0};
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(size - 1);
    for (Index i = 0; i < size; ++i) grid.push_back(std::exp(std::log(lo) + step * static_cast<double>(i)));
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-12 * (1 + b); }),
               grid.end());
    return grid;
}

}  // namespace anchorlab
