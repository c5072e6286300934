#pragma once

#include "smckit/common.hpp"
#include "smckit/model.hpp"
#include "smckit/rng.hpp"

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace smckit {

enum class Phase { initial, predicted, weighted, resampled };

/// The m particles of one filtering step, with un/normalized weights,
/// time-1 ancestry origins, and the step's average unnormalized weight.
/// Weights live in log space; alpha_bar() exponentiates on demand.
struct ParticleCloud {
    int step = 0;                  // k; 0 for the initial cloud
    Phase phase = Phase::initial;
    MatrixXd particles;            // state_dim x m
    VectorXd log_alpha;            // m unnormalized log-weights
    VectorXd weights;              // m normalized weights
    std::vector<int> ancestors;    // time-1 ancestry origin per particle
    double log_alpha_bar = 0.0;    // log((1/m) sum_i alpha_i)

    int size() const { return static_cast<int>(particles.cols()); }
    double alpha_bar() const { return std::exp(log_alpha_bar); }
};

/// Outcome of one multinomial resampling pass: how many copies each input
/// particle received and, per output slot, which input it copies.
struct ResampleRecord {
    std::vector<int> counts;   // size m, sums to m
    std::vector<int> parents;  // size m, nondecreasing input indices
};

/// One complete filtering pass: per-step estimates, the alpha-bar sequence,
/// resampling bookkeeping, and (optionally) the retained pre-resampling
/// clouds that path reconstruction needs.
struct FilterRun {
    MatrixXd estimates;                        // state_dim x T
    std::vector<double> log_alpha_bars;        // T entries
    std::vector<ResampleRecord> resamples;     // T entries
    std::vector<ParticleCloud> weighted_clouds;  // T entries when retained
    bool retained = false;
    std::uint64_t seed = 0;
    int particle_count = 0;

    int horizon() const { return static_cast<int>(log_alpha_bars.size()); }

    std::vector<double> alpha_bars() const {
        std::vector<double> out(log_alpha_bars.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(log_alpha_bars[k]);
        return out;
    }

    /// log of the product alpha_bar_1 ... alpha_bar_T.
    double log_alpha_bar_product() const {
        double acc = 0.0;
        for (double la : log_alpha_bars) acc += la;
        return acc;
    }
};

/// m draws from the model's initial law with uniform weights and identity
/// ancestry.
inline ParticleCloud initialize(const Model& model, int m, RngStream& rng) {
    if (m < 1) throw std::invalid_argument("initialize: particle count must be >= 1");
    ParticleCloud cloud;
    cloud.step = 0;
    cloud.phase = Phase::initial;
    cloud.particles.resize(model.state_dim(), m);
    for (int i = 0; i < m; ++i) cloud.particles.col(i) = model.initial_sample(rng);
    cloud.log_alpha = VectorXd::Zero(m);
    cloud.weights = VectorXd::Constant(m, 1.0 / m);
    cloud.ancestors.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) cloud.ancestors[static_cast<std::size_t>(i)] = i;
    cloud.log_alpha_bar = 0.0;
    return cloud;
}

/// Advance every particle one step through the transition kernel.
inline ParticleCloud propagate(const ParticleCloud& cloud, const Model& model,
                               RngStream& rng) {
    if (cloud.phase != Phase::resampled && cloud.phase != Phase::initial)
        throw std::logic_error("propagate: cloud must be resampled or initial");
    ParticleCloud next;
    next.step = cloud.step + 1;
    next.phase = Phase::predicted;
    const int m = cloud.size();
    next.particles.resize(model.state_dim(), m);
    for (int i = 0; i < m; ++i)
        next.particles.col(i) = model.transition_sample(cloud.particles.col(i), next.step, rng);
    next.log_alpha = VectorXd::Zero(m);
    next.weights = VectorXd::Constant(m, 1.0 / m);
    next.ancestors = cloud.ancestors;
    next.log_alpha_bar = 0.0;
    return next;
}

/// Score the predicted cloud against observation z: per-particle log
/// observation densities, normalized weights (max-shift exp-sum), and the
/// step's average unnormalized weight.
inline ParticleCloud weigh(const ParticleCloud& cloud, const Model& model,
                           const VectorXd& z) {
    if (cloud.phase != Phase::predicted)
        throw std::logic_error("weigh: cloud must be predicted");
    ParticleCloud next = cloud;
    next.phase = Phase::weighted;
    const int m = cloud.size();
    for (int i = 0; i < m; ++i)
        next.log_alpha[i] = model.observation_logdensity(cloud.particles.col(i), z);
    const double hi = next.log_alpha.maxCoeff();
    if (hi == kNegInf) throw WeightCollapse(cloud.step);
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        next.weights[i] = std::exp(next.log_alpha[i] - hi);
        sum += next.weights[i];
    }
    next.weights /= sum;
    next.log_alpha_bar = hi + std::log(sum) - std::log(static_cast<double>(m));
    return next;
}

/// Weighted posterior-mean estimate sum_i w_i x_i; componentwise it
/// lies in the convex hull of the particles.
inline VectorXd estimate(const ParticleCloud& cloud) {
    if (cloud.phase != Phase::weighted)
        throw std::logic_error("estimate: cloud must be weighted");
    return cloud.particles * cloud.weights;
}

/// n i.i.d. categorical draws by weight, returned as a nondecreasing list of
/// input indices. Uses the order-statistics construction (normalized
/// exponential partial sums give sorted uniforms) walked against the weight
/// CDF in one O(n + |weights|) pass.
inline std::vector<int> multinomial_draws(const VectorXd& weights, int n, RngStream& rng) {
    const int m = static_cast<int>(weights.size());
    if (m < 1 || n < 1) throw std::invalid_argument("multinomial_draws: empty input");
    std::vector<double> cum_spacings(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += rng.exponential();
        cum_spacings[static_cast<std::size_t>(i)] = acc;
    }
    const double total = acc + rng.exponential();
    std::vector<int> draws(static_cast<std::size_t>(n));
    int j = 0;
    double cum_w = weights[0];
    for (int i = 0; i < n; ++i) {
        const double u = cum_spacings[static_cast<std::size_t>(i)] / total;
        while (u > cum_w && j + 1 < m) {
            ++j;
            cum_w += weights[j];
        }
        draws[static_cast<std::size_t>(i)] = j;
    }
    return draws;
}

/// Multinomial resampling: m i.i.d. draws by weight, uniform weights after,
/// ancestry inherited from the drawn parent.
inline std::pair<ParticleCloud, ResampleRecord> multinomial_resample(
    const ParticleCloud& cloud, RngStream& rng) {
    if (cloud.phase != Phase::weighted)
        throw std::logic_error("multinomial_resample: cloud must be weighted");
    const int m = cloud.size();
    ResampleRecord record;
    record.parents = multinomial_draws(cloud.weights, m, rng);
    record.counts.assign(static_cast<std::size_t>(m), 0);
    ParticleCloud next;
    next.step = cloud.step;
    next.phase = Phase::resampled;
    next.particles.resize(cloud.particles.rows(), m);
    next.ancestors.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const int p = record.parents[static_cast<std::size_t>(i)];
        ++record.counts[static_cast<std::size_t>(p)];
        next.particles.col(i) = cloud.particles.col(p);
        next.ancestors[static_cast<std::size_t>(i)] =
            cloud.ancestors[static_cast<std::size_t>(p)];
    }
    next.log_alpha = VectorXd::Zero(m);
    next.weights = VectorXd::Constant(m, 1.0 / m);
    next.log_alpha_bar = cloud.log_alpha_bar;
    return {std::move(next), std::move(record)};
}

/// The full bootstrap filter with multinomial resampling at every step:
/// propagate -> weigh -> estimate -> resample for k = 1..T. Bit-deterministic
/// given the stream. Throws WeightCollapse with the failing step.
inline FilterRun run_filter(const Model& model, const MatrixXd& observations, int m,
                            RngStream& rng, bool retain = false) {
    const int horizon = static_cast<int>(observations.cols());
    if (horizon < 1) throw std::invalid_argument("run_filter: need at least one observation");
    FilterRun run;
    run.seed = rng.seed();
    run.retained = retain;
    run.particle_count = m;
    run.estimates.resize(model.state_dim(), horizon);
    run.log_alpha_bars.reserve(static_cast<std::size_t>(horizon));
    run.resamples.reserve(static_cast<std::size_t>(horizon));

    ParticleCloud cloud = initialize(model, m, rng);
    for (int k = 1; k <= horizon; ++k) {
        cloud = propagate(cloud, model, rng);
        cloud = weigh(cloud, model, observations.col(k - 1));
        run.estimates.col(k - 1) = estimate(cloud);
        run.log_alpha_bars.push_back(cloud.log_alpha_bar);
        auto [resampled, record] = multinomial_resample(cloud, rng);
        run.resamples.push_back(std::move(record));
        if (retain) run.weighted_clouds.push_back(std::move(cloud));
        cloud = std::move(resampled);
    }
    return run;
}

}  // namespace smckit
