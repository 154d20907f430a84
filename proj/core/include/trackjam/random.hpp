#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace trackjam {

/// A single reproducible random stream.
///
/// Streams are keyed, not sequenced: `Rng::keyed(seed, domain, index)` always
/// yields the same stream for the same triple regardless of how many other
/// streams were created before it. The key is expanded with std::seed_seq into
/// an mt19937_64 state.
class Rng {
public:
    using Engine = std::mt19937_64;

    explicit Rng(std::uint64_t seed);
    static Rng keyed(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index);

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);
    double normal();
    unsigned poisson(double mean);
    bool bernoulli(double p);

    Engine& engine() { return engine_; }

private:
    explicit Rng(Engine engine) : engine_(std::move(engine)) {}
    Engine engine_;
};

/// Stream domains used by the simulator's keyed derivation.
enum class StreamDomain : std::uint64_t {
    Agent = 1,
    Truth = 2,
    Solver = 3,
    Spawn = 4,
    Instance = 5,
};

/// Draws from N(mean, cov) for a symmetric positive semi-definite `cov`.
/// A zero covariance returns `mean` exactly.
class GaussianSampler {
public:
    GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);
    Eigen::VectorXd sample(Rng& rng) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd factor_;
};

}  // namespace trackjam
