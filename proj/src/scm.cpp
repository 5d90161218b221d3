#include "anchorlab/scm.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

namespace anchorlab {

namespace {

void require_shape(const MatrixXd& m, Index rows, Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionMismatch(what + " must be " + std::to_string(rows) + " x " + std::to_string(cols) +
                                ", got " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
    }
}

bool is_psd(const MatrixXd& S) {
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + S.cwiseAbs().maxCoeff())) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
    return eig.eigenvalues().minCoeff() >= -1e-10 * (1.0 + S.cwiseAbs().maxCoeff());
}

std::string level_label(Index k, Index count) {
    const int width = static_cast<int>(std::to_string(count).size());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "L%0*ld", width, static_cast<long>(k + 1));
    return buf;
}

/// G^{+1/2} S_AX and G^{+1/2} S_AY.
std::pair<MatrixXd, VectorXd> whitened_anchor_moments(const PopulationMoments& mom) {
    const MatrixXd root = psd_sqrt(psd_pseudo_inverse(mom.gram));
    return {root * mom.sax(), root * mom.say()};
}

}  // namespace

void LinearScm::validate() const {
    if (d < 1) throw InvalidConfig("SCM needs at least one predictor");
    if (r < 0 || q < 1) throw InvalidConfig("SCM needs r >= 0 and q >= 1");
    require_shape(B, p(), p(), "B");
    require_shape(M, p(), q, "M");
    if (noise_scales.size() != p()) throw DimensionMismatch("noise_scales must have d + 1 + r entries");
    if (!B.allFinite() || !M.allFinite() || !noise_scales.allFinite()) throw DomainError("SCM has non-finite entries");
    if ((noise_scales.array() < 0.0).any()) throw DomainError("noise scales must be nonnegative");

    const MatrixXd IB = MatrixXd::Identity(p(), p()) - B;
    Eigen::JacobiSVD<MatrixXd> svd(IB);
    if (svd.singularValues().minCoeff() <= 1e-10) throw Singular("Id - B is not invertible");

    switch (anchor.kind) {
        case AnchorDistribution::Rademacher:
            require_shape(anchor.gram, q, q, "anchor gram");
            if (!anchor.gram.isIdentity(1e-12)) throw InvalidConfig("Rademacher anchors have identity Gram matrix");
            break;
        case AnchorDistribution::Gaussian:
            require_shape(anchor.gram, q, q, "anchor gram");
            if (!is_psd(anchor.gram)) throw InvalidConfig("anchor Gram matrix must be symmetric PSD");
            break;
        case AnchorDistribution::Discrete: {
            if (anchor.support.rows() < 1 || anchor.support.cols() != q) {
                throw DimensionMismatch("discrete anchor support must have q columns");
            }
            const double scale = 1.0 + anchor.support.cwiseAbs().maxCoeff();
            if (anchor.support.colwise().mean().cwiseAbs().maxCoeff() > 1e-10 * scale) {
                throw InvalidConfig("discrete anchor support must have column means zero");
            }
            break;
        }
    }
}

MatrixXd LinearScm::gram() const {
    if (anchor.kind == AnchorDistribution::Discrete) {
        return anchor.support.transpose() * anchor.support / static_cast<double>(anchor.support.rows());
    }
    return anchor.gram;
}

MatrixXd LinearScm::solve_matrix() const {
    return (MatrixXd::Identity(p(), p()) - B).fullPivLu().inverse();
}

MatrixXd LinearScm::noise_covariance() const { return noise_scales.array().square().matrix().asDiagonal(); }

double LinearScm::spectral_radius() const {
    Eigen::EigenSolver<MatrixXd> eig(B, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

bool LinearScm::acyclic() const {
    std::vector<int> indegree(static_cast<std::size_t>(p()), 0);
    for (Index i = 0; i < p(); ++i) {
        for (Index j = 0; j < p(); ++j) {
            if (i != j && B(i, j) != 0.0) ++indegree[static_cast<std::size_t>(i)];
        }
    }
    std::deque<Index> ready;
    for (Index i = 0; i < p(); ++i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    Index seen = 0;
    while (!ready.empty()) {
        const Index j = ready.front();
        ready.pop_front();
        ++seen;
        for (Index i = 0; i < p(); ++i) {
            if (i != j && B(i, j) != 0.0 && --indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
        }
    }
    return seen == p();
}

std::string LinearScm::warning() const {
    const double rho = spectral_radius();
    if (rho < 1.0) return {};
    return "spectral radius of B is " + std::to_string(rho) +
           " >= 1; (Id - B)^{-1} is used but it is not the limit of the iterated system";
}

AnchorSpec rademacher_anchor(Index q) {
    return {AnchorDistribution::Rademacher, MatrixXd::Identity(q, q), MatrixXd()};
}

AnchorSpec gaussian_anchor(const MatrixXd& gram) { return {AnchorDistribution::Gaussian, gram, MatrixXd()}; }

AnchorSpec discrete_anchor(const MatrixXd& support) {
    AnchorSpec spec{AnchorDistribution::Discrete, MatrixXd(), support};
    spec.gram = support.transpose() * support / static_cast<double>(std::max<Index>(support.rows(), 1));
    return spec;
}

LinearScm make_scm(MatrixXd B, MatrixXd M, VectorXd noise_scales, AnchorSpec anchor, Index d, Index r) {
    LinearScm scm;
    scm.d = d;
    scm.r = r;
    scm.q = M.cols();
    scm.B = std::move(B);
    scm.M = std::move(M);
    scm.noise_scales = std::move(noise_scales);
    scm.anchor = std::move(anchor);
    if (scm.anchor.kind == AnchorDistribution::Discrete) scm.anchor.gram = scm.gram();
    scm.validate();
    return scm;
}

Shift Shift::fixed(VectorXd v) {
    Shift s;
    s.v = std::move(v);
    return s;
}

Shift Shift::gaussian(MatrixXd covariance) {
    Shift s;
    s.covariance = std::move(covariance);
    s.random = true;
    return s;
}

ScmSample sample(const LinearScm& scm, Index n, Rng& rng, const std::optional<Shift>& shift) {
    scm.validate();
    if (n < 1) throw DomainError("sample size must be at least 1");
    const Index p = scm.p();
    const Index q = scm.q;

    MatrixXd A(n, q);
    std::vector<std::string> labels;
    switch (scm.anchor.kind) {
        case AnchorDistribution::Rademacher:
            labels.resize(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) {
                std::string& label = labels[static_cast<std::size_t>(i)];
                for (Index k = 0; k < q; ++k) {
                    A(i, k) = rng.rademacher();
                    label += A(i, k) > 0 ? '+' : '-';
                }
            }
            break;
        case AnchorDistribution::Gaussian: {
            const MatrixXd root = psd_sqrt(scm.anchor.gram);
            for (Index i = 0; i < n; ++i) {
                VectorXd z(q);
                for (Index k = 0; k < q; ++k) z(k) = rng.normal();
                A.row(i) = (root * z).transpose();
            }
            break;
        }
        case AnchorDistribution::Discrete: {
            const Index K = scm.anchor.support.rows();
            labels.resize(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) {
                const Index k = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(K)));
                A.row(i) = scm.anchor.support.row(k);
                labels[static_cast<std::size_t>(i)] = level_label(k, K);
            }
            break;
        }
    }

    MatrixXd E(p, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) E(j, i) = scm.noise_scales(j) * rng.normal();
    }
    if (!shift) {
        E.noalias() += scm.M * A.transpose();
    } else if (!shift->random) {
        if (shift->v.size() != p) throw DimensionMismatch("shift must have d + 1 + r entries");
        E.colwise() += shift->v;
    } else {
        require_shape(shift->covariance, p, p, "shift covariance");
        const MatrixXd root = psd_sqrt(shift->covariance);
        MatrixXd Z(p, n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < p; ++j) Z(j, i) = rng.normal();
        }
        E.noalias() += root * Z;
    }
    const MatrixXd V = scm.solve_matrix() * E;

    ScmSample out;
    out.data = make_dataset(V.topRows(scm.d).transpose(), V.row(scm.d).transpose(), std::move(A));
    out.H = V.bottomRows(scm.r).transpose();
    if (!labels.empty()) set_levels(out.data, labels);
    return out;
}

PopulationMoments population_covariance(const LinearScm& scm, const MatrixXd& noise_cov,
                                        const MatrixXd& delta_cov, const MatrixXd& delta_anchor_cov,
                                        const MatrixXd& gram) {
    const MatrixXd S = scm.solve_matrix();
    PopulationMoments mom;
    mom.d = scm.d;
    mom.cov_vv = S * (noise_cov + scm.M * delta_cov * scm.M.transpose()) * S.transpose();
    mom.cov_vv = 0.5 * (mom.cov_vv + mom.cov_vv.transpose()).eval();
    mom.cov_va = S * scm.M * delta_anchor_cov;
    mom.gram = gram;
    return mom;
}

PopulationMoments population_covariance(const LinearScm& scm) {
    scm.validate();
    const MatrixXd G = scm.gram();
    return population_covariance(scm, scm.noise_covariance(), G, G, G);
}

VectorXd population_anchor(const PopulationMoments& mom, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
    if (std::isinf(gamma)) return population_iv(mom);
    const MatrixXd Gp = psd_pseudo_inverse(mom.gram);
    const MatrixXd sxa = mom.sax().transpose();
    const MatrixXd lhs = mom.sxx() - (1.0 - gamma) * sxa * Gp * mom.sax();
    const VectorXd rhs = mom.sxy() - (1.0 - gamma) * sxa * Gp * mom.say();
    try {
        return solve_spd(lhs, rhs);
    } catch (const NotPositiveDefinite& e) {
        throw Singular(std::string("population anchor normal equations: ") + e.what());
    }
}

VectorXd population_anchor(const LinearScm& scm, double gamma) {
    return population_anchor(population_covariance(scm), gamma);
}

VectorXd population_iv(const PopulationMoments& mom) {
    const Index d = mom.d;
    const auto [W, w] = whitened_anchor_moments(mom);
    Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& s = svd.singularValues();
    Index k = 0;
    if (s.size() > 0 && s(0) > 0.0) k = static_cast<Index>((s.array() > kRankTolerance * s(0)).count());

    // minimise E[(Y - X^T b)^2] subject to V_k^T b = S_k^{-1} U_k^T w
    const MatrixXd C = svd.matrixV().leftCols(k).transpose();
    const VectorXd e = (svd.matrixU().leftCols(k).transpose() * w).cwiseQuotient(s.head(k));
    MatrixXd kkt = MatrixXd::Zero(d + k, d + k);
    kkt.topLeftCorner(d, d) = mom.sxx();
    kkt.topRightCorner(d, k) = C.transpose();
    kkt.bottomLeftCorner(k, d) = C;
    VectorXd rhs(d + k);
    rhs << mom.sxy(), e;
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    lu.setThreshold(kRankTolerance);
    if (lu.rank() < d + k) throw Singular("IV-limit KKT system is singular");
    return lu.solve(rhs).head(d);
}

VectorXd shift_weights(const LinearScm& scm, const VectorXd& b) {
    if (b.size() != scm.d) throw DimensionMismatch("b must have d entries");
    const MatrixXd S = scm.solve_matrix();
    return S.row(scm.d).transpose() - S.topRows(scm.d).transpose() * b;
}

double shift_risk(const LinearScm& scm, const VectorXd& b, const Shift& shift) {
    const VectorXd w = shift_weights(scm, b);
    const double base = w.dot(scm.noise_covariance() * w);
    if (shift.random) {
        require_shape(shift.covariance, scm.p(), scm.p(), "shift covariance");
        return base + w.dot(shift.covariance * w);
    }
    if (shift.v.size() != scm.p()) throw DimensionMismatch("shift must have d + 1 + r entries");
    const double proj = w.dot(shift.v);
    return base + proj * proj;
}

double worst_case_risk(const LinearScm& scm, const VectorXd& b, double gamma) {
    if (!(gamma >= 0.0) || std::isinf(gamma)) throw DomainError("worst_case_risk needs finite gamma >= 0");
    if (b.size() != scm.d) throw DimensionMismatch("b must have d entries");
    const PopulationMoments mom = population_covariance(scm);
    const double total = mom.syy() - 2.0 * b.dot(mom.sxy()) + b.dot(mom.sxx() * b);
    const VectorXd c = mom.say() - mom.sax() * b;
    const double anchored = c.dot(psd_pseudo_inverse(mom.gram) * c);
    return total + (gamma - 1.0) * anchored;
}

bool PerturbationSet::contains(const VectorXd& v, double tol) const {
    if (v.size() != Q.rows()) throw DimensionMismatch("shift dimension differs from C^gamma");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Q);
    const VectorXd& vals = eig.eigenvalues();
    const double top = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
    const VectorXd coords = eig.eigenvectors().transpose() * v;
    double quad = 0.0;
    double outside = 0.0;
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals(i) > kRankTolerance * top && vals(i) > 0.0) {
            quad += coords(i) * coords(i) / vals(i);
        } else {
            outside += coords(i) * coords(i);
        }
    }
    return std::sqrt(outside) <= tol * (1.0 + v.norm()) && quad <= 1.0 + tol;
}

MatrixXd PerturbationSet::boundary_grid(Index points) const {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Q);
    const VectorXd& vals = eig.eigenvalues();
    const double top = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Index> range;
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals(i) > kRankTolerance * top && vals(i) > 0.0) range.push_back(i);
    }
    const Index k = static_cast<Index>(range.size());
    MatrixXd basis(Q.rows(), k);
    for (Index j = 0; j < k; ++j) {
        const Index i = range[static_cast<std::size_t>(j)];
        basis.col(j) = std::sqrt(vals(i)) * eig.eigenvectors().col(i);
    }
    if (k == 0) return MatrixXd::Zero(Q.rows(), 1);

    MatrixXd U;
    if (k == 1) {
        U.resize(1, 2);
        U << 1.0, -1.0;
    } else if (k == 2) {
        U.resize(2, points);
        for (Index j = 0; j < points; ++j) {
            const double theta = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(points);
            U(0, j) = std::cos(theta);
            U(1, j) = std::sin(theta);
        }
    } else if (k == 3) {
        U.resize(3, points);
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (Index j = 0; j < points; ++j) {
            const double z = 1.0 - 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(points);
            const double rad = std::sqrt(1.0 - z * z);
            U(0, j) = rad * std::cos(golden * static_cast<double>(j));
            U(1, j) = rad * std::sin(golden * static_cast<double>(j));
            U(2, j) = z;
        }
    } else {
        Rng rng(0x5eed);
        U.resize(k, points);
        for (Index j = 0; j < points; ++j) {
            for (Index i = 0; i < k; ++i) U(i, j) = rng.normal();
            U.col(j).normalize();
        }
    }
    return basis * U;
}

PerturbationSet perturbation_set(const LinearScm& scm, double gamma) {
    if (!(gamma >= 0.0) || std::isinf(gamma)) throw DomainError("perturbation set needs finite gamma >= 0");
    PerturbationSet set;
    set.gamma = gamma;
    set.Q = gamma * scm.M * scm.gram() * scm.M.transpose();
    set.Q = 0.5 * (set.Q + set.Q.transpose()).eval();
    return set;
}

VectorXd invariance_set_residual(const LinearScm& scm, const VectorXd& b) {
    if (b.size() != scm.d) throw DimensionMismatch("b must have d entries");
    const PopulationMoments mom = population_covariance(scm);
    return mom.say() - mom.sax() * b;
}

ProjectabilityReport projectability_check(const PopulationMoments& mom, double rank_tol) {
    const auto [W, w] = whitened_anchor_moments(mom);
    MatrixXd augmented(W.rows(), W.cols() + 1);
    augmented << W, w;

    ProjectabilityReport rep;
    Eigen::JacobiSVD<MatrixXd> aug_svd(augmented);
    const double top = aug_svd.singularValues().size() ? aug_svd.singularValues()(0) : 0.0;
    rep.rank_augmented = numerical_rank(augmented, rank_tol);
    rep.rank_ax = numerical_rank(W, 0.0, rank_tol * top);

    Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeThinU);
    const VectorXd& s = svd.singularValues();
    Index k = 0;
    if (s.size() > 0 && s(0) > 0.0) k = static_cast<Index>((s.array() > kRankTolerance * s(0)).count());
    const MatrixXd Uk = svd.matrixU().leftCols(k);
    rep.penalty_min = (w - Uk * (Uk.transpose() * w)).squaredNorm();
    rep.holds = rep.rank_ax == rep.rank_augmented;
    return rep;
}

ProjectabilityReport projectability_check(const LinearScm& scm, double rank_tol) {
    return projectability_check(population_covariance(scm), rank_tol);
}

ProjectabilityReport projectability_check(const AnchorDataset& ds, double rank_tol) {
    if (!ds.centered) throw InvalidConfig("projectability_check expects a centred dataset");
    const double n = static_cast<double>(ds.n());
    MatrixXd V(ds.n(), ds.d() + 1);
    V << ds.X, ds.Y;
    PopulationMoments mom;
    mom.d = ds.d();
    mom.cov_vv = V.transpose() * V / n;
    mom.cov_va = V.transpose() * ds.A / n;
    mom.gram = ds.A.transpose() * ds.A / n;
    return projectability_check(mom, rank_tol);
}

void ReplicabilityScenario::validate() const {
    base.validate();
    if (kappa == 0.0 || kappa_test == 0.0) throw DomainError("kappa and kappa' must be nonzero");
    if (!(noise_factor > 0.0)) throw DomainError("noise factor L must be positive");
    require_shape(xi_cov, base.q, base.q, "Cov(xi)");
    require_shape(xi_cov_test, base.q, base.q, "Cov(xi')");
    if (anchor_gram_test.size() > 0) require_shape(anchor_gram_test, base.q, base.q, "test anchor gram");
    if (!is_psd(xi_cov) || !is_psd(xi_cov_test)) throw InvalidConfig("Cov(xi) must be symmetric PSD");
    if (test_noise_scales && test_noise_scales->size() != base.p()) {
        throw DimensionMismatch("test noise scales must have d + 1 + r entries");
    }
}

PopulationMoments scenario_moments(const ReplicabilityScenario& scen, bool test) {
    scen.validate();
    const MatrixXd G = test && scen.anchor_gram_test.size() > 0 ? scen.anchor_gram_test : scen.base.gram();
    const double kappa = test ? scen.kappa_test : scen.kappa;
    const MatrixXd& xi = test ? scen.xi_cov_test : scen.xi_cov;
    MatrixXd noise = scen.base.noise_covariance();
    if (test) {
        if (scen.test_noise_scales) {
            noise = scen.test_noise_scales->array().square().matrix().asDiagonal();
        } else {
            noise *= scen.noise_factor;
        }
    }
    return population_covariance(scen.base, noise, kappa * kappa * G + xi, kappa * G, G);
}

ReplicabilityResult replicability_experiment(const ReplicabilityScenario& scen) {
    const PopulationMoments train = scenario_moments(scen, false);
    const PopulationMoments test = scenario_moments(scen, true);
    if (!projectability_check(train).holds) {
        throw ProjectabilityViolated("training model is not projectable; the IV limit is not replicable");
    }
    ReplicabilityResult res;
    res.b_train = population_iv(train);
    res.b_test = population_iv(test);
    res.discrepancy = (res.b_train - res.b_test).lpNorm<Eigen::Infinity>();
    return res;
}

}  // namespace anchorlab
