#include "trackjam/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace trackjam {

void ParticleSet::normalize() {
    const double total = weights.sum();
    if (weights.size() > 0 && total > 0.0) {
        weights /= total;
    }
}

double ParticleSet::effective_sample_size() const {
    const double sq = weights.squaredNorm();
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

namespace {

ParticleSet concat(const ParticleSet& a, const ParticleSet& b) {
    ParticleSet out;
    out.states.resize(6, a.states.cols() + b.states.cols());
    out.states << a.states, b.states;
    out.weights.resize(a.weights.size() + b.weights.size());
    out.weights << a.weights, b.weights;
    return out;
}

ParticleSet sample_birth(std::size_t n, double total_weight, const Box& box, double velocity_std,
                         Rng& rng) {
    ParticleSet birth;
    birth.states.resize(6, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < birth.states.cols(); ++i) {
        birth.states.col(i).head<3>() = box.sample(rng);
        for (int k = 3; k < 6; ++k) {
            birth.states(k, i) = velocity_std * rng.normal();
        }
    }
    birth.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                              total_weight / static_cast<double>(n));
    return birth;
}

}  // namespace

BernoulliBelief predict(const BernoulliBelief& belief, const FilterParams& params, Rng& rng) {
    const auto& dyn = params.dynamics;
    const double e = belief.existence;
    const double e_pred = dyn.p_birth * (1.0 - e) + dyn.p_survive * e;
    BernoulliBelief out;
    out.existence = std::clamp(e_pred, 0.0, 1.0);
    if (e_pred <= 0.0) {
        return out;
    }

    const double survive_mass = dyn.p_survive * e / e_pred;
    const double birth_mass = dyn.p_birth * (1.0 - e) / e_pred;

    ParticleSet survivors;
    if (survive_mass > 0.0 && !belief.particles.empty()) {
        const Mat6 phi = transition_matrix(dyn.dt);
        const Eigen::Matrix<double, 6, 3> gamma = noise_gain(dyn.dt);
        const GaussianSampler accel(Eigen::Vector3d::Zero(), dyn.accel_noise_cov);
        survivors.states = phi * belief.particles.states;
        for (Eigen::Index i = 0; i < survivors.states.cols(); ++i) {
            survivors.states.col(i) += gamma * accel.sample(rng);
        }
        survivors.weights = belief.particles.weights * survive_mass;
    } else {
        survivors.states.resize(6, 0);
        survivors.weights.resize(0);
    }

    if (birth_mass > 0.0 && params.n_birth_particles > 0) {
        const ParticleSet birth = sample_birth(params.n_birth_particles, birth_mass,
                                               params.surveillance_box,
                                               params.birth_velocity_std, rng);
        out.particles = concat(survivors, birth);
    } else {
        out.particles = std::move(survivors);
    }
    out.particles.normalize();
    return out;
}

namespace {

struct LikelihoodModel {
    Mat3 info;
    double norm;

    explicit LikelihoodModel(const Mat3& cov)
        : info(cov.inverse()),
          norm(1.0 / std::sqrt(std::pow(2.0 * std::numbers::pi, 3) * cov.determinant())) {}

    double operator()(const Measurement& y, const Vec3& target, const Vec3& agent) const {
        const Vec3 d = target - agent;
        const double rho = d.norm();
        if (rho == 0.0) {
            return 0.0;
        }
        const Vec3 r(y.rho - rho, wrap_angle(y.theta - std::atan2(d.y(), d.x())),
                     y.phi - std::atan2(std::hypot(d.x(), d.y()), d.z()));
        return norm * std::exp(-0.5 * r.dot(info * r));
    }
};

}  // namespace

double measurement_likelihood(const Measurement& y, const Vec3& target, const Vec3& agent,
                              const Mat3& noise_cov) {
    return LikelihoodModel(noise_cov)(y, target, agent);
}

BernoulliBelief update(const BernoulliBelief& predicted, std::span<const Measurement> scan,
                       const Vec3& agent, const PowerLevel& level, const SensingCone& cone,
                       const FilterParams& params, Rng& rng, UpdateTerms* terms) {
    BernoulliBelief out = predicted;
    const std::size_t n = predicted.particles.size();
    if (n == 0 || predicted.existence <= 0.0) {
        out.existence = 0.0;
        if (terms) {
            *terms = {};
        }
        return out;
    }

    const SensingParams& s = params.sensing;
    const LikelihoodModel g(s.meas_noise_cov);
    const double clutter_intensity =
        std::max(s.clutter_rate, params.clutter_rate_floor) * s.clutter_density();

    const auto& states = predicted.particles.states;
    const auto& w = predicted.particles.weights;
    Eigen::VectorXd factor(static_cast<Eigen::Index>(n));
    double detection_mass = 0.0;
    double measured_mass = 0.0;
    const bool transmitting = level_ratio(level, s) > 0.0;
    for (Eigen::Index i = 0; i < factor.size(); ++i) {
        const Vec3 pos = states.col(i).head<3>();
        const double pd = transmitting ? detection_prob(pos, agent, level, cone, s) : 0.0;
        double ratio_sum = 0.0;
        if (pd > 0.0) {
            for (const Measurement& y : scan) {
                ratio_sum += g(y, pos, agent) / clutter_intensity;
            }
        }
        detection_mass += w[i] * pd;
        measured_mass += w[i] * pd * ratio_sum;
        factor[i] = (1.0 - pd) + pd * ratio_sum;
    }

    const double q = std::min(detection_mass - measured_mass, 1.0 - 1e-12);
    const double e_pred = predicted.existence;
    out.existence = std::clamp((1.0 - q) * e_pred / (1.0 - e_pred * q), 0.0, 1.0);
    if (terms) {
        terms->detection_mass = detection_mass;
        terms->q = q;
    }

    const Eigen::VectorXd updated = w.cwiseProduct(factor);
    if (updated.sum() > 0.0) {
        out.particles.weights = updated;
        out.particles.normalize();
    }

    const double ess = out.particles.effective_sample_size();
    if (n != params.n_particles ||
        ess < params.resample_threshold * static_cast<double>(n)) {
        out.particles = resample_systematic(out.particles, params.n_particles, rng);
    }
    return out;
}

std::optional<StateVector> particle_mean(const ParticleSet& particles) {
    if (particles.empty()) {
        return std::nullopt;
    }
    const double total = particles.weights.sum();
    if (total <= 0.0) {
        return std::nullopt;
    }
    return StateVector(particles.states * particles.weights / total);
}

std::optional<GaussianEstimate> point_estimate(const BernoulliBelief& belief) {
    if (belief.existence <= 0.5) {
        return std::nullopt;
    }
    const auto mean = particle_mean(belief.particles);
    if (!mean) {
        return std::nullopt;
    }
    const auto& p = belief.particles;
    const double total = p.weights.sum();
    const Eigen::Matrix<double, 6, Eigen::Dynamic> centred = p.states.colwise() - *mean;
    Mat6 cov = centred * (p.weights / total).asDiagonal() * centred.transpose();
    cov = 0.5 * (cov + cov.transpose());
    if (Eigen::LLT<Mat6>(cov).info() != Eigen::Success) {
        cov += 1e-9 * Mat6::Identity();
    }
    return GaussianEstimate{*mean, cov};
}

std::vector<std::size_t> systematic_indices(const Eigen::VectorXd& weights, std::size_t n_out,
                                            double offset) {
    std::vector<std::size_t> out;
    out.reserve(n_out);
    const double total = weights.sum();
    const double step = total / static_cast<double>(n_out);
    double cumulative = weights.size() > 0 ? weights[0] : 0.0;
    Eigen::Index i = 0;
    const Eigen::Index last = weights.size() - 1;
    for (std::size_t k = 0; k < n_out; ++k) {
        const double u = (offset + static_cast<double>(k)) * step;
        while (u >= cumulative && i < last) {
            ++i;
            cumulative += weights[i];
        }
        out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

ParticleSet resample_systematic(const ParticleSet& particles, std::size_t n_out, Rng& rng) {
    ParticleSet out;
    out.states.resize(6, static_cast<Eigen::Index>(n_out));
    out.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_out),
                                            1.0 / static_cast<double>(n_out));
    if (particles.empty() || n_out == 0) {
        out.states.resize(6, 0);
        out.weights.resize(0);
        return out;
    }
    const auto idx = systematic_indices(particles.weights, n_out, rng.uniform());
    for (std::size_t k = 0; k < n_out; ++k) {
        out.states.col(static_cast<Eigen::Index>(k)) =
            particles.states.col(static_cast<Eigen::Index>(idx[k]));
    }
    return out;
}

BernoulliBelief make_belief(double existence, const GaussianEstimate& prior, std::size_t n,
                            Rng& rng) {
    BernoulliBelief b;
    b.existence = existence;
    b.particles.states.resize(6, static_cast<Eigen::Index>(n));
    const GaussianSampler sampler(prior.mean, prior.cov);
    for (Eigen::Index i = 0; i < b.particles.states.cols(); ++i) {
        b.particles.states.col(i) = sampler.sample(rng);
    }
    b.particles.weights =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
    return b;
}

BernoulliBelief make_uniform_belief(double existence, const Box& box, double velocity_std,
                                    std::size_t n, Rng& rng) {
    BernoulliBelief b;
    b.existence = existence;
    b.particles = sample_birth(n, 1.0, box, velocity_std, rng);
    return b;
}

}  // namespace trackjam
