#include "anchorlab/battery.hpp"
#include "anchorlab/causal.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/graph.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace anchorlab;

namespace {

bool has_edge(const std::vector<std::vector<int>>& adj, int a, int b) { return adj[a][b] != 0; }

// All simple undirected paths from x to y; d-connected when one is open.
bool brute_force_connected(const std::vector<std::vector<int>>& adj, int x, int y, const std::vector<bool>& given) {
    const int n = static_cast<int>(adj.size());
    std::vector<std::vector<bool>> desc(n, std::vector<bool>(n, false));
    for (int s = 0; s < n; ++s) {
        std::vector<int> stack{s};
        desc[s][s] = true;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                if (has_edge(adj, u, v) && !desc[s][v]) {
                    desc[s][v] = true;
                    stack.push_back(v);
                }
            }
        }
    }
    auto activated = [&](int node) {
        for (int z = 0; z < n; ++z) {
            if (given[z] && desc[node][z]) return true;
        }
        return false;
    };
    std::vector<int> path{x};
    std::vector<bool> on_path(n, false);
    on_path[x] = true;
    std::function<bool(int)> extend = [&](int u) -> bool {
        if (u == y) {
            for (std::size_t i = 1; i + 1 < path.size(); ++i) {
                const int a = path[i - 1], m = path[i], b = path[i + 1];
                const bool collider = has_edge(adj, a, m) && has_edge(adj, b, m);
                if (collider ? !activated(m) : given[m]) return false;
            }
            return true;
        }
        for (int v = 0; v < n; ++v) {
            if (on_path[v] || !(has_edge(adj, u, v) || has_edge(adj, v, u))) continue;
            on_path[v] = true;
            path.push_back(v);
            const bool open = extend(v);
            path.pop_back();
            on_path[v] = false;
            if (open) return true;
        }
        return false;
    };
    return extend(x);
}

}  // namespace

TEST_CASE("d-separation basics") {
    // A -> X -> Y
    CausalGraph chain(3);
    chain.add_edge(0, 1);
    chain.add_edge(1, 2);
    CHECK(d_separated(chain, {0}, {2}, {1}));
    CHECK_FALSE(d_separated(chain, {0}, {2}, {}));

    // X -> C <- Y
    CausalGraph collider(3);
    collider.add_edge(0, 2);
    collider.add_edge(1, 2);
    CHECK(d_separated(collider, {0}, {1}, {}));
    CHECK_FALSE(d_separated(collider, {0}, {1}, {2}));

    CausalGraph cyclic(2);
    cyclic.add_edge(0, 1);
    cyclic.add_edge(1, 0);
    CHECK_FALSE(cyclic.acyclic());
    CHECK_THROWS_AS(d_separated(cyclic, {0}, {1}, {}), CyclicGraph);
}

TEST_CASE("d-separation agrees with path enumeration on random DAGs") {
    Rng rng(41);
    int cases = 0;
    for (int g = 0; g < 200; ++g) {
        const int n = 6;
        std::vector<int> order{0, 1, 2, 3, 4, 5};
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
        std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
        CausalGraph graph(n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (rng.uniform() < 0.4) {
                    adj[order[i]][order[j]] = 1;
                    graph.add_edge(order[i], order[j]);
                }
            }
        }
        const int x = static_cast<int>(rng.uniform_index(n));
        int y = static_cast<int>(rng.uniform_index(n - 1));
        if (y >= x) ++y;
        std::vector<bool> given(n, false);
        std::vector<Index> z;
        for (int v = 0; v < n; ++v) {
            if (v != x && v != y && rng.uniform() < 0.35) {
                given[v] = true;
                z.push_back(v);
            }
        }
        CHECK(d_separated(graph, {x}, {y}, z) == !brute_force_connected(adj, x, y, given));
        ++cases;
    }
    CHECK(cases == 200);
}

TEST_CASE("graph of an SCM") {
    const LinearScm scm = example2_scm();
    const CausalGraph g = CausalGraph::from_scm(scm);
    const ScmNodes nodes(scm);
    CHECK(g.has_edge(nodes.a(0), nodes.x(0)));
    CHECK(g.has_edge(nodes.h(0), nodes.y()));
    CHECK(g.has_edge(nodes.x(0), nodes.y()));
    CHECK_FALSE(g.has_edge(nodes.y(), nodes.x(0)));
    CHECK(g.has_directed_path(nodes.a(0), nodes.y()));
    // the anchor is not d-separated from Y given X: X is a collider on A -> X <- H -> Y
    CHECK_FALSE(d_separated(g, {nodes.a(0)}, {nodes.y()}, {nodes.x(0)}));
}

TEST_CASE("total causal effects") {
    CHECK(total_causal_effect(example2_scm())(0) == doctest::Approx(1.0));

    // A -> X1 -> W -> Y with W observed as X2
    MatrixXd B = MatrixXd::Zero(3, 3);  // X1, W, Y
    B(1, 0) = 1.0;
    B(2, 1) = 1.0;
    MatrixXd M = MatrixXd::Zero(3, 1);
    M(0, 0) = 1.0;
    const LinearScm chain = make_scm(B, M, VectorXd::Ones(3), gaussian_anchor(MatrixXd::Identity(1, 1)), 2, 0);
    const VectorXd joint = total_causal_effect(chain);
    CHECK(joint(0) == doctest::Approx(0.0));
    CHECK(joint(1) == doctest::Approx(1.0));
    CHECK(total_causal_effect_single(chain, 0) == doctest::Approx(1.0));

    // Y without an X parent
    MatrixXd B2 = MatrixXd::Zero(2, 2);
    B2(0, 1) = 1.0;  // Y -> X
    const LinearScm rev = make_scm(B2, MatrixXd::Ones(2, 1), VectorXd::Ones(2), gaussian_anchor(MatrixXd::Identity(1, 1)), 1, 0);
    CHECK(total_causal_effect(rev)(0) == doctest::Approx(0.0));

    MatrixXd cyc = MatrixXd::Zero(2, 2);
    cyc(0, 1) = 0.5;
    cyc(1, 0) = 0.5;
    const LinearScm loop = make_scm(cyc, MatrixXd::Ones(2, 1), VectorXd::Ones(2), gaussian_anchor(MatrixXd::Identity(1, 1)), 1, 0);
    CHECK_THROWS_AS(total_causal_effect(loop), CyclicGraph);
}

TEST_CASE("total effect matches simulated do-shifts") {
    Rng rng(42);
    const LinearScm scm = random_stable_scm(rng, 2);
    const VectorXd effect = total_causal_effect(scm);
    // E[Y | do(X = x)] is linear in x: intervene by cutting X's equations and
    // fixing X through the noise, then difference the sample means
    LinearScm cut = scm;
    cut.B.topRows(scm.d).setZero();
    cut.M.topRows(scm.d).setZero();
    const Index n = 200000;
    for (Index k = 0; k < scm.d; ++k) {
        VectorXd v = VectorXd::Zero(scm.p());
        v(k) = 1.0;
        Rng r1(100 + static_cast<std::uint64_t>(k)), r2(100 + static_cast<std::uint64_t>(k));
        const AnchorDataset hi = sample(cut, n, r1, Shift::fixed(v)).data;
        const AnchorDataset lo = sample(cut, n, r2, Shift::fixed(-v)).data;
        const VectorXd diff = hi.Y - lo.Y;  // common random numbers
        const double est = diff.mean() / 2.0;
        const double se = std::sqrt((diff.array() - diff.mean()).square().sum() / (n - 1) / n) / 2.0;
        CHECK(std::abs(est - effect(k)) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("anchor stability implies causality") {
    Rng rng(43);
    for (int s = 0; s < 20; ++s) {
        const LinearScm scm = random_stable_scm(rng, 1 + s % 3);
        const CausalStabilityReport rep = anchor_stability_causal_check(scm, default_gamma_grid());
        CHECK(rep.stable);
        CHECK(rep.matches_causal_effect);
        CHECK(rep.unconfounded);
        CHECK(rep.causal_gap < 1e-8);
    }

    const CausalStabilityReport ex2 = anchor_stability_causal_check(example2_scm(), default_gamma_grid());
    CHECK_FALSE(ex2.stable);
    CHECK(ex2.b_zero(0) == doctest::Approx(2.0));
    CHECK(ex2.b_infinity(0) == doctest::Approx(1.0));
    CHECK_FALSE(ex2.unconfounded);

    // anchor acting on H only: no A -> X edge
    CHECK_THROWS_AS(anchor_stability_causal_check(hidden_shift_scm(), default_gamma_grid()), AssumptionViolated);
}
