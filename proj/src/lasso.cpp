#include "anchorlab/error.hpp"
#include "anchorlab/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace anchorlab {

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double violation_from_gradient(const VectorXd& r, const VectorXd& b, double lambda) {
    double worst = 0.0;
    for (Index k = 0; k < b.size(); ++k) {
        double v;
        if (b(k) > 0.0) {
            v = std::abs(r(k) - lambda);
        } else if (b(k) < 0.0) {
            v = std::abs(r(k) + lambda);
        } else {
            v = std::max(0.0, std::abs(r(k)) - lambda);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace

double kkt_violation(const LassoGram& problem, const VectorXd& b, double lambda) {
    return violation_from_gradient(problem.c - problem.G * b, b, lambda);
}

LassoSolution solve_lasso_gram(const LassoGram& problem, double lambda, const VectorXd& start,
                               const LassoOptions& opt) {
    const Index d = problem.G.rows();
    if (problem.G.cols() != d || problem.c.size() != d) throw DimensionMismatch("lasso Gram problem is not square");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and nonnegative");

    LassoSolution sol;
    sol.b = start.size() == d ? start : VectorXd::Zero(d);
    VectorXd r = problem.c - problem.G * sol.b;

    const double n = static_cast<double>(std::max<Index>(problem.n, 1));
    const double update_threshold = opt.update_tol * std::sqrt(std::max(problem.yy, 0.0) / n);
    const double c_scale = problem.c.size() ? problem.c.cwiseAbs().maxCoeff() : 0.0;
    const double kkt_threshold = std::max(opt.kkt_tol * lambda, 1e-12 * c_scale);

    auto objective = [&] {
        return problem.yy - sol.b.dot(problem.c) - sol.b.dot(r) + 2.0 * lambda * sol.b.lpNorm<1>();
    };

    for (Index sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index k = 0; k < d; ++k) {
            const double gkk = problem.G(k, k);
            const double old = sol.b(k);
            const double next = gkk > 0.0 ? soft_threshold(r(k) + gkk * old, lambda) / gkk : 0.0;
            const double delta = next - old;
            if (delta == 0.0) continue;
            r.noalias() -= problem.G.col(k) * delta;
            sol.b(k) = next;
            max_change = std::max(max_change, std::abs(delta) * std::sqrt(std::max(gkk, 0.0) / n));
        }
        sol.sweeps = sweep;
        if (opt.record_history) sol.history.push_back(objective());

        if (max_change <= update_threshold) {
            r = problem.c - problem.G * sol.b;
            sol.kkt_violation = violation_from_gradient(r, sol.b, lambda);
            if (sol.kkt_violation <= kkt_threshold) {
                sol.converged = true;
                return sol;
            }
        }
    }
    sol.kkt_violation = kkt_violation(problem, sol.b, lambda);
    return sol;
}

}  // namespace anchorlab
