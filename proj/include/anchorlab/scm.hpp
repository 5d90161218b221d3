#pragma once

#include "anchorlab/datamodel.hpp"
#include "anchorlab/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace anchorlab {

enum class AnchorDistribution { Rademacher, Gaussian, Discrete };

/// Distribution of A. Rademacher anchors have independent +-1 coordinates
/// (gram = Id); Gaussian anchors are N(0, gram); discrete anchors are uniform
/// over the rows of `support`, which must have column means zero.
struct AnchorSpec {
    AnchorDistribution kind = AnchorDistribution::Gaussian;
    MatrixXd gram;
    MatrixXd support;
};

/// Linear SCM (X, Y, H) = B (X, Y, H) + eps + M A with independent noise.
/// Variables are ordered X (d), Y (1), H (r); B is p x p with p = d + 1 + r.
struct LinearScm {
    Index d = 0;
    Index r = 0;
    Index q = 0;
    MatrixXd B;
    MatrixXd M;
    VectorXd noise_scales;
    AnchorSpec anchor;

    Index p() const { return d + 1 + r; }
    Index y_index() const { return d; }

    /// Sizes, finiteness, invertibility of Id - B and the anchor law.
    void validate() const;
    /// E[A A^T].
    MatrixXd gram() const;
    /// (Id - B)^{-1}.
    MatrixXd solve_matrix() const;
    MatrixXd noise_covariance() const;
    double spectral_radius() const;
    /// True when the off-diagonal sparsity of B has no directed cycle.
    bool acyclic() const;
    /// Non-empty when B has spectral radius >= 1 (equilibrium reading does not apply).
    std::string warning() const;
};

/// Builds and validates; the Gram matrix of discrete/Rademacher anchors is derived.
LinearScm make_scm(MatrixXd B, MatrixXd M, VectorXd noise_scales, AnchorSpec anchor, Index d, Index r);

AnchorSpec rademacher_anchor(Index q);
AnchorSpec gaussian_anchor(const MatrixXd& gram);
AnchorSpec discrete_anchor(const MatrixXd& support);

/// Deterministic shift v, or a random mean-zero Gaussian shift with covariance Sigma_v.
struct Shift {
    VectorXd v;
    MatrixXd covariance;
    bool random = false;

    static Shift fixed(VectorXd v);
    static Shift gaussian(MatrixXd covariance);
};

struct ScmSample {
    AnchorDataset data;
    MatrixXd H;
};

/// Draws n rows of (Id - B)^{-1}(eps + M A), or (Id - B)^{-1}(eps + v) under a
/// shift (A is still drawn and stored). Discrete and Rademacher anchors get level labels.
ScmSample sample(const LinearScm& scm, Index n, Rng& rng, const std::optional<Shift>& shift = std::nullopt);

/// Second moments of V = (X, Y, H) and A.
struct PopulationMoments {
    Index d = 0;
    MatrixXd cov_vv;
    MatrixXd cov_va;
    MatrixXd gram;

    MatrixXd sxx() const { return cov_vv.topLeftCorner(d, d); }
    VectorXd sxy() const { return cov_vv.col(d).head(d); }
    double syy() const { return cov_vv(d, d); }
    MatrixXd sax() const { return cov_va.topRows(d).transpose(); }
    VectorXd say() const { return cov_va.row(d).transpose(); }
};

PopulationMoments population_covariance(const LinearScm& scm);

/// Moments when the shift is M delta with delta having covariance `delta_cov`
/// and cross-covariance `delta_anchor_cov` = Cov(delta, A).
PopulationMoments population_covariance(const LinearScm& scm, const MatrixXd& noise_cov,
                                        const MatrixXd& delta_cov, const MatrixXd& delta_anchor_cov,
                                        const MatrixXd& gram);

/// Solves [Sxx - (1-gamma) Sxa G^+ Sax] b = Sxy - (1-gamma) Sxa G^+ Say;
/// kInfiniteGamma gives the IV limit. Throws Singular.
VectorXd population_anchor(const LinearScm& scm, double gamma);
VectorXd population_anchor(const PopulationMoments& mom, double gamma);

/// lim gamma->inf b^gamma: the MSE-minimal element of the set that minimises
/// E[(P_A(Y - X^T b))^2] (the invariance set I when projectability holds).
VectorXd population_iv(const PopulationMoments& mom);

/// w_b = (row Y of (Id-B)^{-1}) - b^T (rows X of (Id-B)^{-1}).
VectorXd shift_weights(const LinearScm& scm, const VectorXd& b);

/// E_v[(Y - X^T b)^2] for a deterministic or random shift.
double shift_risk(const LinearScm& scm, const VectorXd& b, const Shift& shift);

/// E[((Id-P_A)(Y - X^T b))^2] + gamma E[(P_A(Y - X^T b))^2] from population moments.
double worst_case_risk(const LinearScm& scm, const VectorXd& b, double gamma);

/// C^gamma = {v : v v^T <= Q}, Q = gamma M G M^T.
struct PerturbationSet {
    double gamma = 0.0;
    MatrixXd Q;

    bool contains(const VectorXd& v, double tol = 1e-9) const;
    /// v = Q^{1/2} u for u on a grid of the unit sphere of range(Q): +-1 in
    /// rank one, `points` angles in rank two, a Fibonacci sphere above.
    MatrixXd boundary_grid(Index points) const;
};

PerturbationSet perturbation_set(const LinearScm& scm, double gamma);

/// E[A (Y - X^T b)]; zero exactly on the invariance set I.
VectorXd invariance_set_residual(const LinearScm& scm, const VectorXd& b);

struct ProjectabilityReport {
    bool holds = false;
    double penalty_min = 0.0;
    Index rank_ax = 0;
    Index rank_augmented = 0;
};

ProjectabilityReport projectability_check(const LinearScm& scm, double rank_tol = 1e-9);
ProjectabilityReport projectability_check(const PopulationMoments& mom, double rank_tol = 1e-9);
/// Sample version on a centred dataset with sample second moments.
ProjectabilityReport projectability_check(const AnchorDataset& ds, double rank_tol = 1e-9);

/// Training shift delta = kappa A + xi, test shift delta' = kappa' A' + xi'.
/// The test noise covariance is noise_factor * Cov_train(eps) unless
/// `test_noise_scales` is given, which breaks that proportionality.
struct ReplicabilityScenario {
    LinearScm base;
    double kappa = 1.0;
    MatrixXd xi_cov;
    double kappa_test = 1.0;
    MatrixXd xi_cov_test;
    MatrixXd anchor_gram_test;
    double noise_factor = 1.0;
    std::optional<VectorXd> test_noise_scales;

    void validate() const;
};

struct ReplicabilityResult {
    VectorXd b_train;
    VectorXd b_test;
    double discrepancy = 0.0;
};

/// Population IV-limit coefficients under both models. Throws
/// ProjectabilityViolated when the training model is not projectable.
ReplicabilityResult replicability_experiment(const ReplicabilityScenario& scen);

PopulationMoments scenario_moments(const ReplicabilityScenario& scen, bool test);

/// SCM file (JSON): {"d", "r", "q", "B", "M", "noise_scales",
/// "anchor": {"kind": "rademacher" | "gaussian" | "discrete", "gram", "support"}}.
/// B and M are nested row lists or {"entries": [[i, j, value], ...]}.
LinearScm parse_scm(const std::string& json_text);
LinearScm load_scm(const std::string& path);
std::string scm_to_json(const LinearScm& scm);
void save_scm(const std::string& path, const LinearScm& scm);

}  // namespace anchorlab
