#include "anchorlab/verify.hpp"

#include "anchorlab/battery.hpp"
#include "anchorlab/causal.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/estimators.hpp"
#include "anchorlab/modelsel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace anchorlab {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Accumulates a statistic over cases and counts values outside the band.
class CheckBuilder {
public:
    CheckBuilder(std::string name, std::string statistic, double low, double high) {
        check_.name = std::move(name);
        check_.statistic = std::move(statistic);
        check_.allowed_low = low;
        check_.allowed_high = high;
        check_.measured_low = kInf;
        check_.measured_high = -kInf;
    }

    void add(double value) {
        ++check_.cases;
        check_.measured_low = std::min(check_.measured_low, value);
        check_.measured_high = std::max(check_.measured_high, value);
        if (!(value >= check_.allowed_low && value <= check_.allowed_high)) ++check_.failures;
    }

    void fail_case() {
        ++check_.cases;
        ++check_.failures;
    }

    VerifyCheck finish(std::string note = {}) {
        if (check_.cases == 0) {
            check_.measured_low = 0.0;
            check_.measured_high = 0.0;
        }
        check_.passed = check_.failures == 0;
        check_.note = std::move(note);
        return check_;
    }

private:
    VerifyCheck check_;
};

double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

VectorXd random_vector(Rng& rng, Index n, double scale) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

Index perturbation_rank(const LinearScm& scm) {
    return numerical_rank(scm.M * scm.gram() * scm.M.transpose(), kRankTolerance, 0.0);
}

/// Boundary-grid supremum minus worst-case risk; the grid can only undershoot.
void grid_identity_case(const LinearScm& scm, const VectorXd& b, double gamma, Index points, CheckBuilder& check) {
    check.add(grid_supremum(scm, b, gamma, points) - worst_case_risk(scm, b, gamma));
}

/// Random shifts with E[v v^T] = Q^{1/2} R Q^{1/2}, R having eigenvalues in [0, 1].
void random_shift_case(const LinearScm& scm, const VectorXd& b, double gamma, Rng& rng, CheckBuilder& check) {
    const PerturbationSet set = perturbation_set(scm, gamma);
    const MatrixXd root = psd_sqrt(set.Q);
    MatrixXd raw(scm.p(), scm.p());
    for (Index i = 0; i < raw.size(); ++i) raw.data()[i] = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(raw);
    const MatrixXd basis = qr.householderQ();
    VectorXd eig(scm.p());
    for (Index i = 0; i < eig.size(); ++i) eig(i) = rng.uniform();
    const MatrixXd inner = basis * eig.asDiagonal() * basis.transpose();
    const MatrixXd cov = root * inner * root;
    check.add(shift_risk(scm, b, Shift::gaussian(cov)) - worst_case_risk(scm, b, gamma));
}

/// shift_risk spread over random shifts in span(M) for b in the invariance set.
double span_shift_spread(const LinearScm& scm, const VectorXd& b, Rng& rng, Index shifts) {
    double lo = kInf;
    double hi = -kInf;
    for (Index s = 0; s < shifts; ++s) {
        const VectorXd v = scm.M * random_vector(rng, scm.q, 3.0);
        const double risk = shift_risk(scm, b, Shift::fixed(v));
        lo = std::min(lo, risk);
        hi = std::max(hi, risk);
    }
    return hi - lo;
}

LinearScm battery_gaussian_scm(Rng& rng) {
    RandomScmOptions o;
    o.d = 2;
    o.r = 1;
    o.q = 2;
    return random_scm(rng, o);
}

void quantile_checks(const LinearScm& scm, const VerifyOptions& opt, Rng& rng, std::vector<VerifyCheck>& out) {
    CheckBuilder check("conditional_mse_quantile", "|monte carlo quantile - anchor objective| / standard error", 0.0,
                       3.0);
    for (double alpha : {0.5, 0.9, 0.95}) {
        const VectorXd b = population_anchor(scm, quantile_gamma(alpha));
        const ConditionalQuantileCheck res = conditional_quantile_check(scm, b, alpha, opt.quantile_draws, rng);
        check.add(std::abs(res.monte_carlo - res.predicted) / res.standard_error);
    }
    out.push_back(check.finish("gamma = chi2_1(alpha) for alpha in {0.5, 0.9, 0.95}"));
}

}  // namespace

double grid_supremum(const LinearScm& scm, const VectorXd& b, double gamma, Index points) {
    const MatrixXd grid = perturbation_set(scm, gamma).boundary_grid(points);
    double best = -kInf;
    for (Index j = 0; j < grid.cols(); ++j) best = std::max(best, shift_risk(scm, b, Shift::fixed(grid.col(j))));
    return best;
}

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::to_json() const {
    json doc;
    doc["source"] = source;
    doc["seed"] = seed;
    doc["passed"] = passed();
    doc["checks"] = json::array();
    for (const auto& c : checks) {
        doc["checks"].push_back({{"name", c.name},
                                 {"statistic", c.statistic},
                                 {"cases", c.cases},
                                 {"failures", c.failures},
                                 {"measured", {c.measured_low, c.measured_high}},
                                 {"allowed", {c.allowed_low, c.allowed_high}},
                                 {"passed", c.passed},
                                 {"note", c.note}});
    }
    return doc.dump(2);
}

VerifyReport verify_battery(const std::string& battery, const VerifyOptions& opt) {
    if (battery != "default") throw InvalidConfig("unknown verification battery '" + battery + "'");
    VerifyReport report;
    report.source = "battery:" + battery;
    report.seed = opt.seed;
    const Rng root(opt.seed);

    {
        Rng rng = root.derive(1);
        CheckBuilder grid("worst_case_grid", "boundary grid supremum - worst_case_risk", -1e-4, 1e-8);
        CheckBuilder random("random_shift_bound", "random-shift risk - worst_case_risk", -kInf, 1e-9);
        for (Index s = 0; s < opt.random_scms; ++s) {
            RandomScmOptions o;
            o.q = 1 + static_cast<Index>(rng.uniform_index(2));
            o.d = 1 + static_cast<Index>(rng.uniform_index(2));
            o.r = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(3 - o.d + 1)));
            o.rademacher = rng.uniform() < 0.5;
            const LinearScm scm = random_scm(rng, o);
            // a 10^4-point circle undershoots by about (pi / 10^4)^2 times the
            // anchored risk term, so the draws keep that term moderate
            const double gamma = log_uniform(rng, 0.1, 10.0);
            for (Index k = 0; k < opt.coefficient_draws; ++k) {
                const VectorXd b = random_vector(rng, scm.d, 1.0);
                grid_identity_case(scm, b, gamma, opt.grid_points, grid);
                random_shift_case(scm, b, gamma, rng, random);
            }
        }
        report.checks.push_back(grid.finish("random SCMs with d + r <= 3, q <= 2"));
        report.checks.push_back(random.finish());
    }

    {
        Rng rng = root.derive(2);
        CheckBuilder check("projectability_equivalence", "rank condition agrees with penalty_min < 1e-8 (0/1)", 1.0,
                           1.0);
        Index holds = 0;
        for (Index s = 0; s < opt.projectability_scms; ++s) {
            const ProjectabilityReport rep = projectability_check(random_projectability_scm(rng));
            holds += rep.holds ? 1 : 0;
            check.add((rep.holds == (rep.penalty_min < 1e-8)) ? 1.0 : 0.0);
        }
        report.checks.push_back(check.finish(std::to_string(holds) + " projectable draws"));
    }

    {
        Rng rng = root.derive(3);
        CheckBuilder check("replicability", "max-norm discrepancy of IV-limit coefficients", 0.0, 1e-8);
        for (Index s = 0; s < opt.replicability_scenarios; ++s) {
            check.add(replicability_experiment(random_replicability_scenario(rng, true)).discrepancy);
        }
        report.checks.push_back(check.finish("proportional test noise"));
    }

    {
        Rng rng = root.derive(4);
        CheckBuilder endpoints("stability_causal_effect", "max |b^0 - b^inf|, |b^0 - causal effect|", 0.0, 1e-8);
        CheckBuilder path("stability_path", "max over gamma grid |b^gamma - b^0|", 0.0, 1e-7);
        CheckBuilder spread("invariance_shift_constancy", "spread of shift_risk(b^0) over span(M) shifts", 0.0,
                            1e-9);
        const std::vector<double> grid = default_gamma_grid();
        for (Index s = 0; s < opt.stable_scms; ++s) {
            const LinearScm scm = random_stable_scm(rng, 1 + static_cast<Index>(rng.uniform_index(3)));
            const CausalStabilityReport rep = anchor_stability_causal_check(scm, grid);
            const double end_gap = (rep.b_zero - rep.b_infinity).lpNorm<Eigen::Infinity>();
            endpoints.add(std::max(end_gap, rep.causal_gap));
            double path_gap = 0.0;
            for (const auto& b : rep.path) path_gap = std::max(path_gap, (b - rep.b_zero).lpNorm<Eigen::Infinity>());
            path.add(path_gap);
            spread.add(span_shift_spread(scm, rep.b_zero, rng, 100));
        }
        report.checks.push_back(endpoints.finish());
        report.checks.push_back(path.finish());
        report.checks.push_back(spread.finish("100 shifts per SCM"));
    }

    {
        Rng rng = root.derive(5);
        const LinearScm scm = battery_gaussian_scm(rng);
        quantile_checks(scm, opt, rng, report.checks);
    }
    return report;
}

VerifyReport verify_scm(const LinearScm& scm, const VerifyOptions& opt) {
    scm.validate();
    VerifyReport report;
    report.source = "scm";
    report.seed = opt.seed;
    const Rng root(opt.seed);

    {
        Rng rng = root.derive(1);
        // the grid resolution bound below only holds for perturbation ranks <= 2
        const bool fine_grid = perturbation_rank(scm) <= 2;
        CheckBuilder grid("worst_case_grid", "boundary grid supremum - worst_case_risk", fine_grid ? -1e-4 : -kInf,
                          1e-8);
        CheckBuilder random("random_shift_bound", "random-shift risk - worst_case_risk", -kInf, 1e-9);
        for (double gamma : {0.5, 1.0, 5.0}) {
            for (Index k = 0; k < opt.coefficient_draws; ++k) {
                const VectorXd b = random_vector(rng, scm.d, 1.5);
                grid_identity_case(scm, b, gamma, opt.grid_points, grid);
                random_shift_case(scm, b, gamma, rng, random);
            }
        }
        report.checks.push_back(grid.finish(fine_grid ? "" : "perturbation rank > 2: only overshoot is certified"));
        report.checks.push_back(random.finish());
    }

    const ProjectabilityReport proj = projectability_check(scm);
    {
        CheckBuilder check("projectability_equivalence", "rank condition agrees with penalty_min < 1e-8 (0/1)", 1.0,
                           1.0);
        check.add((proj.holds == (proj.penalty_min < 1e-8)) ? 1.0 : 0.0);
        report.checks.push_back(check.finish(proj.holds ? "projectable" : "not projectable"));
    }

    if (proj.holds) {
        Rng rng = root.derive(2);
        CheckBuilder check("invariance_shift_constancy", "spread of shift_risk(b^inf) over span(M) shifts", 0.0,
                           1e-9);
        try {
            const VectorXd b = population_anchor(scm, kInfiniteGamma);
            const double scale = 1.0 + shift_risk(scm, b, Shift::fixed(VectorXd::Zero(scm.p())));
            check.add(span_shift_spread(scm, b, rng, 100) / scale);
            report.checks.push_back(check.finish("relative to 1 + E_0 risk"));
        } catch (const Error& e) {
            check.fail_case();
            report.checks.push_back(check.finish(e.what()));
        }
    }

    if (scm.acyclic()) {
        try {
            const CausalStabilityReport rep = anchor_stability_causal_check(scm, default_gamma_grid());
            CheckBuilder check("stability_implies_causality", "causal gap when the path is stable", 0.0,
                               rep.tolerance);
            if (rep.stable) check.add(rep.causal_gap);
            report.checks.push_back(check.finish(rep.stable ? "anchor stable" : "not anchor stable; nothing to certify"));
        } catch (const AssumptionViolated& e) {
            CheckBuilder check("stability_implies_causality", "skipped", 0.0, 0.0);
            report.checks.push_back(check.finish(std::string("skipped: ") + e.what()));
        }
    }

    if (scm.anchor.kind == AnchorDistribution::Gaussian) {
        Rng rng = root.derive(3);
        quantile_checks(scm, opt, rng, report.checks);
    }
    return report;
}

}  // namespace anchorlab
