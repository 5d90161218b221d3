#pragma once

#include "anchorlab/scm.hpp"

#include <string>
#include <vector>

namespace anchorlab {

/// d/dx E[Y | do(X = x)] for a joint intervention on all of X: the X rows of B
/// are cut and entry (Y, X_k) of the modified (Id - B)^{-1} is read off.
/// Throws CyclicGraph.
VectorXd total_causal_effect(const LinearScm& scm);

/// d/dx_k E[Y | do(X_k = x)] with only X_k intervened on, so effects routed
/// through the other predictors are included.
double total_causal_effect_single(const LinearScm& scm, Index k);

struct CausalStabilityReport {
    std::vector<double> gamma_grid;
    std::vector<VectorXd> path;
    VectorXd b_zero;
    VectorXd b_infinity;
    VectorXd causal_effect;
    /// Largest coordinate gap between any two of b^0, the grid, b^inf.
    double max_gap = 0.0;
    double tolerance = 0.0;
    bool stable = false;
    double causal_gap = 0.0;
    bool matches_causal_effect = false;
    /// No hidden variable is an ancestor of both Y and some X_k.
    bool unconfounded = false;
    std::vector<std::string> notes;
};

/// Checks the stability => causality chain at population level. Requires an
/// acyclic SCM, projectability and an anchor edge into every X_k; throws
/// AssumptionViolated (or CyclicGraph) naming the failed precondition.
/// `rel_tol` is relative to 1 + ||b^0||_inf.
CausalStabilityReport anchor_stability_causal_check(const LinearScm& scm, const std::vector<double>& gamma_grid,
                                                    double rel_tol = 1e-6);

/// Log-spaced grid of `size` points on [lo, hi] (lo > 0) with 0 and 1 added.
std::vector<double> default_gamma_grid(double lo = 1e-3, double hi = 1e3, Index size = 21);

}  // namespace anchorlab
