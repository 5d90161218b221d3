#pragma once

#include "anchorlab/scm.hpp"

namespace anchorlab {

/// X <- A + H + eps_X, Y <- X + 2H + eps_Y, H <- eps_H, A Rademacher.
LinearScm example2_scm();

/// Anchor acts on H: H <- A + eps_H, X <- H + eps_X, Y <- X + 2H + eps_Y.
LinearScm hidden_shift_scm();

/// Variables (X1, X2, Y, H): X1 <- H + A, X2 <- 2 X1, Y <- X1 + 2H, H <- 2A,
/// one standard Gaussian anchor, so M = (1, 0, 0, 2)^T.
LinearScm shared_direction_scm();

/// Same graph with a second anchor A2 -> X1: M = [[1, 1], [0, 0], [0, 0], [2, 0]].
LinearScm two_anchor_scm();

struct RandomScmOptions {
    Index d = 1;
    Index r = 1;
    Index q = 1;
    double edge_probability = 0.6;
    bool rademacher = false;
    /// Zero the Y row of M (anchor not a direct cause of Y).
    bool anchor_spares_y = false;
};

/// Acyclic SCM with weights of magnitude in [0.3, 1.5], dense random M,
/// noise scales in [0.5, 1.5] and a random Gaussian (or Rademacher) anchor law.
LinearScm random_scm(Rng& rng, const RandomScmOptions& opt);

/// A -> X -> Y with every X_k anchored (q = d) and no hidden confounding of
/// X and Y; a hidden variable may act on Y alone.
LinearScm random_stable_scm(Rng& rng, Index d);

/// Mixes projectable and non-projectable draws (q up to d + 2, random
/// direct anchor effects on Y).
LinearScm random_projectability_scm(Rng& rng);

/// Training / test pair with q <= d. With `proportional_noise` false the test
/// noise scales are redrawn, violating the covariance condition.
ReplicabilityScenario random_replicability_scenario(Rng& rng, bool proportional_noise);

/// Discrete-anchor SCM without confounding: X = M_X A + eps_X,
/// Y = beta^T X + eps_Y with beta supported on the first `sparsity`
/// coordinates, so b^gamma = beta for every gamma. `levels` support points
/// in R^q (one level gives the anchor-free design).
LinearScm sparse_discrete_scm(Rng& rng, Index d, Index sparsity, Index levels, Index q);

}  // namespace anchorlab
