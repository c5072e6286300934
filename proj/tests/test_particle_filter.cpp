#include "smckit/particle_filter.hpp"

#include "smckit/exact_inference.hpp"
#include "smckit/models/discrete_hmm.hpp"
#include "smckit/models/linear_uniform.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace smckit;

namespace {

// 1-D model whose observation log-density is the particle's own value;
// lets tests dictate unnormalized weights exactly.
class LogWeightModel : public Model {
public:
    int state_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    VectorXd initial_sample(RngStream&) const override { return VectorXd::Zero(1); }
    VectorXd transition_sample(const VectorXd& x, int, RngStream&) const override {
        return x;
    }
    VectorXd observation_sample(const VectorXd&, RngStream&) const override {
        return VectorXd::Zero(1);
    }
    double observation_logdensity(const VectorXd& x, const VectorXd&) const override {
        return x[0];
    }
    double transition_logdensity(const VectorXd&, const VectorXd&, int) const override {
        return 0.0;
    }
};

// wraps another model, scaling every observation density by `scale`
class ScaledLikelihoodModel : public Model {
public:
    ScaledLikelihoodModel(const Model& base, double scale)
        : base_(base), log_scale_(std::log(scale)) {}
    int state_dim() const override { return base_.state_dim(); }
    int obs_dim() const override { return base_.obs_dim(); }
    VectorXd initial_sample(RngStream& rng) const override {
        return base_.initial_sample(rng);
    }
    VectorXd transition_sample(const VectorXd& x, int k, RngStream& rng) const override {
        return base_.transition_sample(x, k, rng);
    }
    VectorXd observation_sample(const VectorXd& x, RngStream& rng) const override {
        return base_.observation_sample(x, rng);
    }
    double observation_logdensity(const VectorXd& x, const VectorXd& z) const override {
        return base_.observation_logdensity(x, z) + log_scale_;
    }
    double transition_logdensity(const VectorXd& a, const VectorXd& b, int k) const override {
        return base_.transition_logdensity(a, b, k);
    }

private:
    const Model& base_;
    double log_scale_;
};

ParticleCloud predicted_cloud(std::vector<double> values) {
    ParticleCloud cloud;
    cloud.step = 1;
    cloud.phase = Phase::predicted;
    const int m = static_cast<int>(values.size());
    cloud.particles.resize(1, m);
    for (int i = 0; i < m; ++i) cloud.particles(0, i) = values[static_cast<std::size_t>(i)];
    cloud.log_alpha = VectorXd::Zero(m);
    cloud.weights = VectorXd::Constant(m, 1.0 / m);
    cloud.ancestors.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) cloud.ancestors[static_cast<std::size_t>(i)] = i;
    return cloud;
}

}  // namespace

TEST_CASE("initialize: sizes, weights, identity ancestry") {
    LinearUniformModel model;
    RngStream rng(1);
    const ParticleCloud one = initialize(model, 1, rng);
    REQUIRE(one.size() == 1);
    REQUIRE(one.weights[0] == 1.0);

    const ParticleCloud cloud = initialize(model, 64, rng);
    REQUIRE(cloud.size() == 64);
    // deterministic initial law: all particles equal
    for (int i = 0; i < 64; ++i) {
        REQUIRE(cloud.particles.col(i).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(cloud.ancestors[static_cast<std::size_t>(i)] == i);
        REQUIRE(cloud.weights[i] == Catch::Approx(1.0 / 64).epsilon(1e-15));
    }
}

TEST_CASE("propagate: zero-noise map, count preserved, identity chain unchanged") {
    LinearUniformModel noiseless(0.0);
    RngStream rng(2);
    ParticleCloud cloud = initialize(noiseless, 16, rng);
    for (int i = 0; i < 16; ++i) cloud.particles.col(i) = VectorXd::Constant(3, double(i));
    const ParticleCloud next = propagate(cloud, noiseless, rng);
    REQUIRE(next.size() == 16);
    REQUIRE(next.phase == Phase::predicted);
    REQUIRE(next.step == 1);
    for (int i = 0; i < 16; ++i) {
        const VectorXd expected = noiseless.transition_matrix() * cloud.particles.col(i);
        REQUIRE((next.particles.col(i) - expected).cwiseAbs().maxCoeff() == 0.0);
    }

    // point-mass pi0 + identity transitions: the cloud never moves
    VectorXd values(2), pi0(2);
    values << 3.0, 7.0;
    pi0 << 1.0, 0.0;
    MatrixXd B(2, 2);
    B << 0.5, 0.5, 0.5, 0.5;
    DiscreteHMMModel identity_chain(values, pi0, MatrixXd::Identity(2, 2), B);
    ParticleCloud h = initialize(identity_chain, 8, rng);
    h = propagate(h, identity_chain, rng);  // step 1: all at state 0 (value 3)
    const MatrixXd at_step1 = h.particles;
    h.phase = Phase::resampled;
    const ParticleCloud again = propagate(h, identity_chain, rng);
    REQUIRE(again.particles == at_step1);
}

TEST_CASE("weigh: constant likelihood gives uniform weights and alpha_bar = c") {
    LogWeightModel model;
    ParticleCloud cloud = predicted_cloud({std::log(0.3), std::log(0.3), std::log(0.3)});
    const ParticleCloud w = weigh(cloud, model, VectorXd::Zero(1));
    for (int i = 0; i < 3; ++i) REQUIRE(w.weights[i] == Catch::Approx(1.0 / 3).epsilon(1e-15));
    REQUIRE(w.alpha_bar() == Catch::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("weigh: direct two-particle arithmetic") {
    LogWeightModel model;
    ParticleCloud cloud = predicted_cloud({std::log(0.2), std::log(0.6)});
    const ParticleCloud w = weigh(cloud, model, VectorXd::Zero(1));
    REQUIRE(w.weights[0] == Catch::Approx(0.25).epsilon(1e-14));
    REQUIRE(w.weights[1] == Catch::Approx(0.75).epsilon(1e-14));
    REQUIRE(w.alpha_bar() == Catch::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("weigh: single particle inside the support gets the whole weight") {
    LinearUniformModel model;
    ParticleCloud cloud;
    cloud.step = 1;
    cloud.phase = Phase::predicted;
    cloud.particles = MatrixXd::Zero(3, 3);
    cloud.particles.col(2) << 40.0, 40.0, 40.0;  // only this one maps near z
    cloud.log_alpha = VectorXd::Zero(3);
    cloud.weights = VectorXd::Constant(3, 1.0 / 3);
    cloud.ancestors = {0, 1, 2};
    VectorXd z(2);
    z << 60.0, 60.0;
    const ParticleCloud w = weigh(cloud, model, z);
    REQUIRE(w.weights[2] == 1.0);
    REQUIRE(w.weights[0] == 0.0);
    REQUIRE(w.weights[1] == 0.0);
}

TEST_CASE("weigh: all particles outside the support collapses") {
    LinearUniformModel model;
    RngStream rng(3);
    ParticleCloud cloud = initialize(model, 4, rng);
    cloud.phase = Phase::predicted;
    cloud.step = 5;
    VectorXd z(2);
    z << 100.0, 100.0;
    try {
        weigh(cloud, model, z);
        FAIL("expected WeightCollapse");
    } catch (const WeightCollapse& e) {
        REQUIRE(e.step() == 5);
    }
}

TEST_CASE("weigh normalization holds for wild log-weights") {
    LogWeightModel model;
    RngStream rng(44);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = 2 + static_cast<int>(rng.uniform01() * 40);
        std::vector<double> la(static_cast<std::size_t>(m));
        for (double& v : la) v = rng.uniform(-700.0, 700.0);
        const ParticleCloud w = weigh(predicted_cloud(la), model, VectorXd::Zero(1));
        REQUIRE(w.weights.minCoeff() >= 0.0);
        REQUIRE(std::abs(w.weights.sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("estimate: closed forms and convex hull") {
    LogWeightModel model;
    {
        ParticleCloud w = weigh(predicted_cloud({0.0, 0.0, 0.0, 0.0}), model, VectorXd::Zero(1));
        w.particles << 1.0, 2.0, 3.0, 4.0;
        REQUIRE(estimate(w)[0] == Catch::Approx(2.5).epsilon(1e-15));
    }
    {
        // scalar particles 0 and 1 with weights (0.25, 0.75)
        ParticleCloud w = weigh(predicted_cloud({std::log(0.2), std::log(0.6)}), model,
                                VectorXd::Zero(1));
        w.particles(0, 0) = 0.0;
        w.particles(0, 1) = 1.0;
        REQUIRE(estimate(w)[0] == Catch::Approx(0.75).epsilon(1e-14));
    }
    {
        // one-hot weight picks that particle exactly
        ParticleCloud w = weigh(predicted_cloud({0.0, -3000.0, -3000.0}), model,
                                VectorXd::Zero(1));
        w.particles << -2.5, 8.0, 9.0;
        REQUIRE(estimate(w)[0] == -2.5);
    }
    RngStream rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 2 + static_cast<int>(rng.uniform01() * 30);
        std::vector<double> la(static_cast<std::size_t>(m));
        for (double& v : la) v = rng.uniform(-3.0, 1.0);
        ParticleCloud w = weigh(predicted_cloud(la), model, VectorXd::Zero(1));
        for (int i = 0; i < m; ++i) w.particles(0, i) = rng.uniform(-5.0, 5.0);
        const double est = estimate(w)[0];
        REQUIRE(est >= w.particles.row(0).minCoeff() - 1e-12);
        REQUIRE(est <= w.particles.row(0).maxCoeff() + 1e-12);
    }
}

TEST_CASE("multinomial draws and resampling") {
    RngStream rng(10);
    VectorXd one_hot = VectorXd::Zero(5);
    one_hot[3] = 1.0;
    const std::vector<int> draws = multinomial_draws(one_hot, 100, rng);
    for (int d : draws) REQUIRE(d == 3);

    // counts sum to n for arbitrary weights
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(rng.uniform01() * 20);
        VectorXd w(m);
        for (int i = 0; i < m; ++i) w[i] = rng.uniform01() + 1e-3;
        w /= w.sum();
        const std::vector<int> ds = multinomial_draws(w, 137, rng);
        REQUIRE(ds.size() == 137);
        for (int d : ds) {
            REQUIRE(d >= 0);
            REQUIRE(d < m);
        }
    }
}

TEST_CASE("multinomial marginal frequencies match the weights") {
    RngStream rng(11);
    VectorXd w(3);
    w << 0.5, 0.3, 0.2;
    const int n = 100000;
    std::vector<int> counts(3, 0);
    for (int d : multinomial_draws(w, n, rng)) ++counts[static_cast<std::size_t>(d)];
    for (int i = 0; i < 3; ++i) {
        const double expected = n * w[i];
        const double band = 4.0 * std::sqrt(n * w[i] * (1.0 - w[i]));
        REQUIRE(std::abs(counts[static_cast<std::size_t>(i)] - expected) <= band);
    }
}

TEST_CASE("resample: one-hot weights clone one particle and reset weights") {
    LogWeightModel model;
    ParticleCloud w = weigh(predicted_cloud({-4000.0, 0.0, -4000.0}), model, VectorXd::Zero(1));
    w.particles << 5.0, 6.0, 7.0;
    w.ancestors = {10, 11, 12};
    RngStream rng(12);
    const auto [resampled, record] = multinomial_resample(w, rng);
    REQUIRE(record.counts == std::vector<int>{0, 3, 0});
    REQUIRE(resampled.phase == Phase::resampled);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(resampled.particles(0, i) == 6.0);
        REQUIRE(resampled.ancestors[static_cast<std::size_t>(i)] == 11);
        REQUIRE(resampled.weights[i] == Catch::Approx(1.0 / 3).epsilon(1e-15));
    }
    int total = 0;
    for (int c : record.counts) total += c;
    REQUIRE(total == 3);
}

TEST_CASE("resampling is unbiased in the mean counts") {
    RngStream rng(13);
    VectorXd w(3);
    w << 0.5, 0.3, 0.2;
    const int m = 1000, trials = 300;
    std::vector<double> mean_counts(3, 0.0);
    for (int t = 0; t < trials; ++t) {
        std::vector<int> counts(3, 0);
        for (int d : multinomial_draws(w, m, rng)) ++counts[static_cast<std::size_t>(d)];
        for (int i = 0; i < 3; ++i) mean_counts[static_cast<std::size_t>(i)] += counts[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < 3; ++i) {
        mean_counts[static_cast<std::size_t>(i)] /= trials;
        const double se = std::sqrt(m * w[i] * (1.0 - w[i]) / trials);
        REQUIRE(std::abs(mean_counts[static_cast<std::size_t>(i)] - m * w[i]) <= 4.0 * se);
    }
}

TEST_CASE("scale invariance: multiplying all likelihoods by c leaves the filter alone") {
    DiscreteHMMModel base = DiscreteHMMModel::two_state_default();
    RngStream data_rng(14);
    const Trajectory traj = simulate_trajectory(base, 6, data_rng);

    // power of two keeps every normalized weight bit-identical
    ScaledLikelihoodModel scaled(base, 4.0);
    RngStream r1(15), r2(15);
    const FilterRun a = run_filter(base, traj.observations, 300, r1);
    const FilterRun b = run_filter(scaled, traj.observations, 300, r2);
    REQUIRE(a.estimates == b.estimates);
    for (int k = 0; k < 6; ++k) {
        REQUIRE(b.log_alpha_bars[static_cast<std::size_t>(k)] ==
                Catch::Approx(a.log_alpha_bars[static_cast<std::size_t>(k)] + std::log(4.0))
                    .epsilon(1e-14));
        REQUIRE(a.resamples[static_cast<std::size_t>(k)].parents ==
                b.resamples[static_cast<std::size_t>(k)].parents);
    }
}

TEST_CASE("run_filter: T = 1 reduces to one importance-sampling mean") {
    DiscreteHMMModel model = DiscreteHMMModel::two_state_default();
    MatrixXd obs(1, 1);
    obs(0, 0) = 0.0;
    RngStream r1(16), r2(16);
    const FilterRun run = run_filter(model, obs, 500, r1);

    ParticleCloud cloud = initialize(model, 500, r2);
    cloud = propagate(cloud, model, r2);
    cloud = weigh(cloud, model, obs.col(0));
    REQUIRE(run.estimates.col(0) == estimate(cloud));
    REQUIRE(run.horizon() == 1);
}

TEST_CASE("run_filter: zero-noise model tracks the true state exactly") {
    LinearUniformModel noiseless(0.0);
    RngStream data_rng(17);
    const Trajectory traj = simulate_trajectory(noiseless, 8, data_rng);
    RngStream rng(18);
    const FilterRun run = run_filter(noiseless, traj.observations, 50, rng);
    REQUIRE((run.estimates - traj.states).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("run_filter is bit-deterministic given the seed") {
    LinearUniformModel model;
    RngStream data_rng(19);
    const Trajectory traj = simulate_trajectory(model, 10, data_rng);
    RngStream r1(20), r2(20);
    const FilterRun a = run_filter(model, traj.observations, 200, r1, true);
    const FilterRun b = run_filter(model, traj.observations, 200, r2, true);
    REQUIRE(a.estimates == b.estimates);
    REQUIRE(a.log_alpha_bars == b.log_alpha_bars);
    const double abar_product = std::exp(a.log_alpha_bar_product());
    REQUIRE(abar_product > 0.0);
    REQUIRE(std::isfinite(abar_product));
    for (int k = 0; k < 10; ++k) {
        REQUIRE(a.resamples[static_cast<std::size_t>(k)].counts ==
                b.resamples[static_cast<std::size_t>(k)].counts);
        REQUIRE(a.weighted_clouds[static_cast<std::size_t>(k)].particles ==
                b.weighted_clouds[static_cast<std::size_t>(k)].particles);
    }
}

TEST_CASE("run_filter estimate agrees with the exact forward mean at large m") {
    DiscreteHMMModel model = DiscreteHMMModel::two_state_default();
    RngStream data_rng(21);
    const Trajectory traj = simulate_trajectory(model, 5, data_rng);
    const ExactDiagnostics diag(model, traj.observations);
    const double exact = diag.conditional_mean();
    const double sigma = diag.sigma()(0, 0);

    const int m = 100000;
    RngStream rng(22);
    const FilterRun run = run_filter(model, traj.observations, m, rng);
    const double se = std::sqrt(sigma / m);
    REQUIRE(std::abs(run.estimates(0, 4) - exact) <= 3.0 * se);
}

TEST_CASE("particle count is conserved through a full pass") {
    DiscreteHMMModel model = DiscreteHMMModel::two_state_default();
    RngStream data_rng(23);
    const Trajectory traj = simulate_trajectory(model, 4, data_rng);
    RngStream rng(24);
    ParticleCloud cloud = initialize(model, 37, rng);
    for (int k = 1; k <= 4; ++k) {
        cloud = propagate(cloud, model, rng);
        REQUIRE(cloud.size() == 37);
        cloud = weigh(cloud, model, traj.observations.col(k - 1));
        REQUIRE(cloud.size() == 37);
        auto [next, record] = multinomial_resample(cloud, rng);
        REQUIRE(next.size() == 37);
        int total = 0;
        for (int c : record.counts) total += c;
        REQUIRE(total == 37);
        cloud = next;
    }
}

TEST_CASE("phase preconditions are enforced") {
    LinearUniformModel model;
    RngStream rng(25);
    ParticleCloud cloud = initialize(model, 4, rng);
    REQUIRE_THROWS_AS(weigh(cloud, model, VectorXd::Zero(2)), std::logic_error);
    REQUIRE_THROWS_AS(estimate(cloud), std::logic_error);
    REQUIRE_THROWS_AS(multinomial_resample(cloud, rng), std::logic_error);
    const ParticleCloud pred = propagate(cloud, model, rng);
    REQUIRE_THROWS_AS(propagate(pred, model, rng), std::logic_error);
}
