#include "anchorlab/error.hpp"
#include "anchorlab/numkern.hpp"
#include "anchorlab/rng.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

using namespace anchorlab;

namespace {

MatrixXd random_matrix(Rng& rng, Index rows, Index cols) {
    MatrixXd m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("normal cdf matches erfc and is symmetric") {
    for (double x : {-8.0, -3.0, -1.0, 0.0, 0.5, 2.0, 6.0}) {
        CHECK(normal_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / std::sqrt(2.0))).epsilon(1e-14));
        CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-8}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("chi-square one-degree quantiles") {
    // bisection on P(chi2_1 <= x) = erf(sqrt(x / 2)) as the reference
    auto reference = [](double alpha) {
        double lo = 0.0, hi = 100.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (std::erf(std::sqrt(mid / 2.0)) < alpha ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    for (double a : {0.05, 0.5, 0.6827, 0.9, 0.95, 0.99}) {
        CHECK(chi2_1_quantile(a) == doctest::Approx(reference(a)).epsilon(1e-10));
    }
    CHECK(chi2_1_quantile(0.95) == doctest::Approx(3.841458820694124).epsilon(1e-12));
    CHECK(chi2_1_cdf(1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
    CHECK(chi2_1_quantile(1e-9) < 1e-15);
    CHECK_THROWS_AS(chi2_1_quantile(1.5), DomainError);
}

TEST_CASE("solve_spd solves and rejects indefinite matrices") {
    Rng rng(1);
    const MatrixXd W = random_matrix(rng, 6, 4);
    const MatrixXd G = W.transpose() * W + 0.1 * MatrixXd::Identity(4, 4);
    const MatrixXd rhs = random_matrix(rng, 4, 2);
    const MatrixXd sol = solve_spd(G, rhs);
    CHECK((G * sol - rhs).norm() < 1e-10);

    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(solve_spd(bad, VectorXd::Ones(3)), NotPositiveDefinite);

    MatrixXd singular = MatrixXd::Zero(2, 2);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(solve_spd(singular, VectorXd::Ones(2)), NotPositiveDefinite);
    const VectorXd ridged = solve_spd(singular, VectorXd::Ones(2), 1.0);
    CHECK(ridged(0) == doctest::Approx(0.5));
    CHECK(ridged(1) == doctest::Approx(1.0));
}

TEST_CASE("projector agrees with the explicit hat matrix") {
    Rng rng(2);
    const MatrixXd A = random_matrix(rng, 20, 3);
    const MatrixXd V = random_matrix(rng, 20, 4);
    const MatrixXd hat = A * (A.transpose() * A).inverse() * A.transpose();
    const Projector proj(A);
    CHECK(proj.rank() == 3);
    CHECK((proj.apply(V) - hat * V).norm() < 1e-10);
    CHECK((proj.residual(V) - (V - hat * V)).norm() < 1e-10);
    CHECK((project_columns(A, V) - hat * V).norm() < 1e-10);
}

TEST_CASE("projector handles a full set of dummy columns") {
    MatrixXd A = MatrixXd::Zero(6, 3);
    for (Index i = 0; i < 6; ++i) A(i, i % 3) = 1.0;
    A.rowwise() -= A.colwise().mean();
    const Projector proj(A);
    CHECK(proj.rank() == 2);
    VectorXd y(6);
    y << 1, 2, 3, 5, 6, 9;
    // projection onto centred dummies = group means minus the grand mean
    const VectorXd fitted = proj.apply(y);
    const double grand = y.mean();
    for (Index i = 0; i < 6; ++i) {
        const double group = 0.5 * (y(i % 3) + y(i % 3 + 3));
        CHECK(fitted(i) == doctest::Approx(group - grand).epsilon(1e-12));
    }
}

TEST_CASE("numerical rank, pseudo-inverse and square root") {
    Rng rng(3);
    const MatrixXd U = random_matrix(rng, 5, 2);
    const MatrixXd S = U * U.transpose();
    CHECK(numerical_rank(S) == 2);
    CHECK(numerical_rank(MatrixXd::Zero(3, 3)) == 0);
    CHECK(numerical_rank(S, 1e-10, 1e6) == 0);

    const MatrixXd P = psd_pseudo_inverse(S);
    CHECK((S * P * S - S).norm() < 1e-9);
    CHECK((P * S * P - P).norm() < 1e-9);

    const MatrixXd R = psd_sqrt(S);
    CHECK((R * R - S).norm() < 1e-9);
    CHECK((R - R.transpose()).norm() < 1e-12);
}

TEST_CASE("rng streams are reproducible") {
    Rng a(42), b(42), c(43);
    bool same = true, differ = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a(), y = b(), z = c();
        same = same && x == y;
        differ = differ || x != z;
    }
    CHECK(same);
    CHECK(differ);
    const Rng root(7);
    Rng d1 = root.derive(1), d1b = root.derive(1), d2 = root.derive(2);
    CHECK(d1.normal() == d1b.normal());
    CHECK(d1.uniform() != d2.uniform());

    Rng m(5);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = m.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    for (int i = 0; i < 1000; ++i) {
        const double r = m.rademacher();
        CHECK((r == 1.0 || r == -1.0));
        CHECK(m.uniform_index(7) < 7u);
    }
}

TEST_CASE("parallel_for visits every index once") {
    setenv("ANCHORLAB_THREADS", "3", 1);
    CHECK(worker_count() <= 3u);
    std::vector<std::atomic<int>> hits(500);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    bool all_once = true;
    for (auto& h : hits) all_once = all_once && h.load() == 1;
    CHECK(all_once);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw DomainError("boom");
                    }),
                    DomainError);
    unsetenv("ANCHORLAB_THREADS");
}
