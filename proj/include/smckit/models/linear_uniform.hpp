#pragma once

#include "smckit/model.hpp"

#include <cmath>

namespace smckit {

/// Linear 3-state / 2-observation model with U[-1,1] process and measurement
/// noise:
///   x_{k+1} = A x_k + w_k,   z_k = C x_k + v_k.
/// The initial state is x_0 = 0 deterministically. `noise_scale` is a test
/// hook that scales sampled noise only (densities are unaffected); it is 1 in
/// every experiment.
class LinearUniformModel : public Model {
public:
    explicit LinearUniformModel(double noise_scale = 1.0) : noise_scale_(noise_scale) {
        A_.resize(3, 3);
        A_ << 0.5, 0.5, 0.0,
              0.0, 0.5, 0.5,
              0.5, 0.0, 0.5;
        C_.resize(2, 3);
        C_ << 0.5, 0.5, 0.5,
              0.5, 0.5, 0.5;
    }

    int state_dim() const override { return 3; }
    int obs_dim() const override { return 2; }

    const MatrixXd& transition_matrix() const { return A_; }
    const MatrixXd& observation_matrix() const { return C_; }

    VectorXd initial_sample(RngStream&) const override { return VectorXd::Zero(3); }

    VectorXd transition_sample(const VectorXd& x, int, RngStream& rng) const override {
        VectorXd next = A_ * x;
        for (int i = 0; i < 3; ++i) next[i] += noise_scale_ * rng.uniform(-1.0, 1.0);
        return next;
    }

    VectorXd observation_sample(const VectorXd& x, RngStream& rng) const override {
        VectorXd z = C_ * x;
        for (int i = 0; i < 2; ++i) z[i] += noise_scale_ * rng.uniform(-1.0, 1.0);
        return z;
    }

    double observation_logdensity(const VectorXd& x, const VectorXd& z) const override {
        const VectorXd mean = C_ * x;
        for (int i = 0; i < 2; ++i)
            if (std::abs(z[i] - mean[i]) > 1.0) return kNegInf;
        return 2.0 * std::log(0.5);
    }

    double transition_logdensity(const VectorXd& from, const VectorXd& to,
                                 int) const override {
        const VectorXd mean = A_ * from;
        for (int i = 0; i < 3; ++i)
            if (std::abs(to[i] - mean[i]) > 1.0) return kNegInf;
        return 3.0 * std::log(0.5);
    }

private:
    MatrixXd A_;
    MatrixXd C_;
    double noise_scale_;
};

}  // namespace smckit
