#pragma once

#include "smckit/model.hpp"

#include <cmath>
#include <numbers>

namespace smckit {

/// Multivariate stochastic volatility model:
///   x_{k+1} = mu + phi (x_k - mu) + w_k,   z_{k,i} = exp(x_{k,i}/2) v_{k,i},
/// with w, v standard normal. Observations are centered normal with
/// per-component variance exp(x_i). The initial state is drawn from the
/// stationary law N(mu, I/(1-phi^2)). `noise_scale` is the deterministic-test
/// hook (scales sampled noise, including the initial spread; densities are
/// unaffected).
class StochVolModel : public Model {
public:
    StochVolModel(VectorXd mu, double phi, double noise_scale = 1.0)
        : mu_(std::move(mu)), phi_(phi), noise_scale_(noise_scale) {
        if (mu_.size() < 1) throw std::invalid_argument("StochVolModel: empty mu");
        if (std::abs(phi_) >= 1.0)
            throw std::invalid_argument("StochVolModel: |phi| must be < 1");
    }

    static StochVolModel zero_mean_3d() { return StochVolModel(VectorXd::Zero(3), 0.5); }

    int state_dim() const override { return static_cast<int>(mu_.size()); }
    int obs_dim() const override { return static_cast<int>(mu_.size()); }

    double phi() const { return phi_; }
    const VectorXd& mu() const { return mu_; }

    VectorXd initial_sample(RngStream& rng) const override {
        const double sd = 1.0 / std::sqrt(1.0 - phi_ * phi_);
        VectorXd x = mu_;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x[i] += noise_scale_ * sd * rng.normal();
        return x;
    }

    VectorXd transition_sample(const VectorXd& x, int, RngStream& rng) const override {
        VectorXd next = mu_ + phi_ * (x - mu_);
        for (Eigen::Index i = 0; i < next.size(); ++i)
            next[i] += noise_scale_ * rng.normal();
        return next;
    }

    VectorXd observation_sample(const VectorXd& x, RngStream& rng) const override {
        VectorXd z(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            z[i] = std::exp(x[i] / 2.0) * noise_scale_ * rng.normal();
        return z;
    }

    double observation_logdensity(const VectorXd& x, const VectorXd& z) const override {
        double lp = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            lp += -0.5 * (std::log(2.0 * std::numbers::pi) + x[i] +
                          z[i] * z[i] * std::exp(-x[i]));
        return lp;
    }

    double transition_logdensity(const VectorXd& from, const VectorXd& to,
                                 int) const override {
        const VectorXd mean = mu_ + phi_ * (from - mu_);
        double lp = 0.0;
        for (Eigen::Index i = 0; i < to.size(); ++i) {
            const double d = to[i] - mean[i];
            lp += -0.5 * (std::log(2.0 * std::numbers::pi) + d * d);
        }
        return lp;
    }

private:
    VectorXd mu_;
    double phi_;
    double noise_scale_;
};

}  // namespace smckit
