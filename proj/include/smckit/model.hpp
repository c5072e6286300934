#pragma once

#include "smckit/common.hpp"
#include "smckit/rng.hpp"

#include <memory>

namespace smckit {

/// A state-space model: hidden Markov state x_k with transition kernel
/// p_k(.|x_{k-1}) and observation density p_k(z|x_k). Step indices are
/// 1-based; initial_sample() draws the notional time-0 state the first
/// transition departs from. Models are immutable after construction and
/// safe to share across threads; all randomness flows through the caller's
/// stream.
class Model {
public:
    virtual ~Model() = default;

    virtual int state_dim() const = 0;
    virtual int obs_dim() const = 0;

    virtual VectorXd initial_sample(RngStream& rng) const = 0;
    virtual VectorXd transition_sample(const VectorXd& x, int step, RngStream& rng) const = 0;
    virtual VectorXd observation_sample(const VectorXd& x, RngStream& rng) const = 0;

    /// Natural log of p(z|x); -inf encodes zero density.
    virtual double observation_logdensity(const VectorXd& x, const VectorXd& z) const = 0;

    /// Natural log of p_step(to|from). Optional; present on all bundled models.
    virtual double transition_logdensity(const VectorXd& from, const VectorXd& to,
                                         int step) const = 0;

    /// True when exact inference (enumeration / forward recursion) applies.
    virtual bool exact_support() const { return false; }
};

/// One simulated trajectory: column k-1 holds x_k / z_k for k = 1..T.
struct Trajectory {
    MatrixXd states;        // state_dim x T
    MatrixXd observations;  // obs_dim x T
};

inline Trajectory simulate_trajectory(const Model& model, int horizon, RngStream& rng) {
    if (horizon < 1) throw std::invalid_argument("simulate_trajectory: horizon must be >= 1");
    Trajectory traj;
    traj.states.resize(model.state_dim(), horizon);
    traj.observations.resize(model.obs_dim(), horizon);
    VectorXd x = model.initial_sample(rng);
    for (int k = 1; k <= horizon; ++k) {
        x = model.transition_sample(x, k, rng);
        traj.states.col(k - 1) = x;
        traj.observations.col(k - 1) = model.observation_sample(x, rng);
    }
    return traj;
}

}  // namespace smckit
