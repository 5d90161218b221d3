#include "anchorlab/battery.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <numeric>

namespace anchorlab {

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

double signed_weight(Rng& rng, double lo, double hi) { return rng.rademacher() * uniform(rng, lo, hi); }

MatrixXd random_gram(Rng& rng, Index q) {
    MatrixXd W(q, q);
    for (Index i = 0; i < q; ++i) {
        for (Index j = 0; j < q; ++j) W(i, j) = rng.normal();
    }
    MatrixXd G = W * W.transpose() / static_cast<double>(q);
    G.diagonal().array() += 0.5;
    return G;
}

VectorXd random_scales(Rng& rng, Index p) {
    VectorXd s(p);
    for (Index i = 0; i < p; ++i) s(i) = uniform(rng, 0.5, 1.5);
    return s;
}

}  // namespace

LinearScm example2_scm() {
    MatrixXd B = MatrixXd::Zero(3, 3);
    B(0, 2) = 1.0;  // X <- H
    B(1, 0) = 1.0;  // Y <- X
    B(1, 2) = 2.0;  // Y <- 2H
    MatrixXd M = MatrixXd::Zero(3, 1);
    M(0, 0) = 1.0;
    return make_scm(B, M, VectorXd::Ones(3), rademacher_anchor(1), 1, 1);
}

LinearScm hidden_shift_scm() {
    MatrixXd B = MatrixXd::Zero(3, 3);
    B(0, 2) = 1.0;
    B(1, 0) = 1.0;
    B(1, 2) = 2.0;
    MatrixXd M = MatrixXd::Zero(3, 1);
    M(2, 0) = 1.0;  // H <- A
    return make_scm(B, M, VectorXd::Ones(3), rademacher_anchor(1), 1, 1);
}

LinearScm shared_direction_scm() {
    // order X1, X2, Y, H
    MatrixXd B = MatrixXd::Zero(4, 4);
    B(0, 3) = 1.0;
    B(1, 0) = 2.0;
    B(2, 0) = 1.0;
    B(2, 3) = 2.0;
    MatrixXd M = MatrixXd::Zero(4, 1);
    M(0, 0) = 1.0;
    M(3, 0) = 2.0;
    return make_scm(B, M, VectorXd::Ones(4), gaussian_anchor(MatrixXd::Identity(1, 1)), 2, 1);
}

LinearScm two_anchor_scm() {
    LinearScm base = shared_direction_scm();
    MatrixXd M = MatrixXd::Zero(4, 2);
    M.col(0) = base.M.col(0);
    M(0, 1) = 1.0;
    return make_scm(base.B, M, base.noise_scales, gaussian_anchor(MatrixXd::Identity(2, 2)), 2, 1);
}

LinearScm random_scm(Rng& rng, const RandomScmOptions& opt) {
    const Index p = opt.d + 1 + opt.r;
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    for (Index i = p - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    MatrixXd B = MatrixXd::Zero(p, p);
    for (Index a = 0; a < p; ++a) {
        for (Index b = a + 1; b < p; ++b) {
            if (rng.uniform() < opt.edge_probability) {
                B(order[static_cast<std::size_t>(b)], order[static_cast<std::size_t>(a)]) = signed_weight(rng, 0.3, 1.5);
            }
        }
    }
    MatrixXd M(p, opt.q);
    for (Index i = 0; i < p; ++i) {
        for (Index k = 0; k < opt.q; ++k) M(i, k) = rng.normal();
    }
    if (opt.anchor_spares_y) M.row(opt.d).setZero();
    AnchorSpec anchor = opt.rademacher ? rademacher_anchor(opt.q) : gaussian_anchor(random_gram(rng, opt.q));
    return make_scm(B, M, random_scales(rng, p), anchor, opt.d, opt.r);
}

LinearScm random_stable_scm(Rng& rng, Index d) {
    const Index p = d + 2;  // X, Y, one hidden cause of Y only
    MatrixXd B = MatrixXd::Zero(p, p);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < i; ++j) {
            if (rng.uniform() < 0.5) B(i, j) = signed_weight(rng, 0.3, 1.0);
        }
        B(d, i) = signed_weight(rng, 0.3, 1.5);
    }
    B(d, d + 1) = signed_weight(rng, 0.3, 1.5);

    MatrixXd M = MatrixXd::Zero(p, d);
    for (Index i = 0; i < d; ++i) {
        M(i, i) = signed_weight(rng, 0.5, 1.5);
        for (Index k = 0; k < d; ++k) {
            if (k != i && rng.uniform() < 0.3) M(i, k) = signed_weight(rng, 0.2, 1.0);
        }
    }
    return make_scm(B, M, random_scales(rng, p), gaussian_anchor(random_gram(rng, d)), d, 1);
}

LinearScm random_projectability_scm(Rng& rng) {
    RandomScmOptions opt;
    opt.d = 1 + static_cast<Index>(rng.uniform_index(2));
    opt.r = static_cast<Index>(rng.uniform_index(2));
    opt.q = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(opt.d + 2)));
    LinearScm scm = random_scm(rng, opt);
    if (rng.uniform() < 0.5) scm.M.row(opt.d).setZero();
    for (Index j = 0; j < opt.r; ++j) {
        if (rng.uniform() < 0.5) scm.M.row(opt.d + 1 + j).setZero();
    }
    scm.validate();
    return scm;
}

ReplicabilityScenario random_replicability_scenario(Rng& rng, bool proportional_noise) {
    RandomScmOptions opt;
    opt.d = 2 + static_cast<Index>(rng.uniform_index(2));
    opt.r = 1;
    const Index max_q = proportional_noise ? opt.d : opt.d - 1;
    opt.q = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(max_q)));
    opt.anchor_spares_y = rng.uniform() < 0.5;

    ReplicabilityScenario scen;
    scen.base = random_scm(rng, opt);
    scen.kappa = signed_weight(rng, 0.5, 2.0);
    scen.kappa_test = signed_weight(rng, 0.5, 2.0);
    scen.xi_cov = 0.5 * random_gram(rng, opt.q);
    scen.xi_cov_test = 2.0 * random_gram(rng, opt.q);
    scen.anchor_gram_test = random_gram(rng, opt.q);
    scen.noise_factor = uniform(rng, 0.5, 3.0);
    if (!proportional_noise) {
        VectorXd scales(scen.base.p());
        for (Index i = 0; i < scales.size(); ++i) scales(i) = uniform(rng, 0.2, 2.0);
        scen.test_noise_scales = scales;
    }
    scen.validate();
    return scen;
}

LinearScm sparse_discrete_scm(Rng& rng, Index d, Index sparsity, Index levels, Index q) {
    if (sparsity > d || levels < 1 || q < 1) throw DomainError("invalid sparse discrete SCM dimensions");
    const Index p = d + 1;
    MatrixXd B = MatrixXd::Zero(p, p);
    for (Index k = 0; k < sparsity; ++k) B(d, k) = signed_weight(rng, 1.0, 2.0);
    MatrixXd M = MatrixXd::Zero(p, q);
    for (Index i = 0; i < d; ++i) {
        for (Index k = 0; k < q; ++k) M(i, k) = rng.normal();
    }
    MatrixXd support = MatrixXd::Zero(levels, q);
    if (levels > 1) {
        for (Index i = 0; i < levels; ++i) {
            for (Index k = 0; k < q; ++k) support(i, k) = rng.normal();
        }
        support.rowwise() -= support.colwise().mean();
    }
    return make_scm(B, M, VectorXd::Ones(p), discrete_anchor(support), d, 0);
}

}  // namespace anchorlab
