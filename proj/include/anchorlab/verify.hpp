#pragma once

#include "anchorlab/scm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace anchorlab {

/// One certification: the measured statistic over all cases must lie in
/// [allowed_low, allowed_high].
struct VerifyCheck {
    std::string name;
    std::string statistic;
    Index cases = 0;
    Index failures = 0;
    double measured_low = 0.0;
    double measured_high = 0.0;
    double allowed_low = 0.0;
    double allowed_high = 0.0;
    bool passed = false;
    std::string note;
};

struct VerifyReport {
    std::string source;
    std::uint64_t seed = 0;
    std::vector<VerifyCheck> checks;

    bool passed() const;
    std::string to_json() const;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    /// Boundary points per C^gamma grid.
    Index grid_points = 10000;
    Index random_scms = 100;
    Index coefficient_draws = 10;
    Index projectability_scms = 50;
    Index replicability_scenarios = 20;
    Index stable_scms = 50;
    Index quantile_draws = 10000;
};

/// Largest shift_risk over the boundary grid of C^gamma.
double grid_supremum(const LinearScm& scm, const VectorXd& b, double gamma, Index points);

/// Seeded random-SCM battery ("default" is the only named battery).
VerifyReport verify_battery(const std::string& battery, const VerifyOptions& opt);

/// Checks that apply to one user-supplied SCM.
VerifyReport verify_scm(const LinearScm& scm, const VerifyOptions& opt);

}  // namespace anchorlab
