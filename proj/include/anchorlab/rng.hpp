#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>

namespace anchorlab {

/// xoshiro256** seeded through splitmix64. The stream depends only on the
/// seed, so identical seeds give identical draws on every platform.
/// Normal draws use the Marsaglia polar method on top of the bit stream.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t uniform_index(std::uint64_t bound);
    double normal();
    double rademacher();

    /// Independent stream for task `stream`; the parent is not advanced.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

Eigen::VectorXd sample_normal(Rng& rng, Eigen::Index n);
Eigen::VectorXd sample_rademacher(Rng& rng, Eigen::Index n);

}  // namespace anchorlab
