#pragma once

#include "smckit/common.hpp"
#include "smckit/exact_inference.hpp"
#include "smckit/model.hpp"
#include "smckit/models/discrete_hmm.hpp"
#include "smckit/models/linear_uniform.hpp"
#include "smckit/models/stoch_vol.hpp"
#include "smckit/particle_filter.hpp"
#include "smckit/rng.hpp"
#include "smckit/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace smckit {

/// One experiment: fix a dataset, compute an oracle conditional mean, run R
/// independent filter replications, and report normality statistics of the
/// sqrt(m)-scaled terminal errors.
struct ExperimentConfig {
    std::string model = "linear_uniform";
    int horizon = 25;               // T
    int particles = 1000;           // m
    int oracle_particles = 100000;  // m_oracle
    int replications = 500;         // R
    int bins = 20;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool retain_diagnostics = false;
    bool regenerate_data = false;  // draw a fresh (x, z) per replication
    int threads = 1;               // 0 = hardware concurrency
    std::string out_dir = ".";

    // stoch_vol parameters
    double sv_phi = 0.5;
    int sv_dim = 3;
    std::vector<double> sv_mu = {0.0};  // broadcast when a single entry

    // discrete_hmm parameters (defaults: the 2-state oracle model)
    std::vector<double> hmm_values = {0.0, 1.0};
    std::vector<double> hmm_pi0 = {0.5, 0.5};
    std::vector<double> hmm_transition = {0.9, 0.1, 0.2, 0.8};  // row-major S x S
    std::vector<double> hmm_emission = {0.7, 0.3, 0.4, 0.6};    // row-major S x V

    // scaling subcommand
    std::vector<int> m_list = {500, 2000};
};

inline std::unique_ptr<Model> make_model(const ExperimentConfig& cfg) {
    try {
        if (cfg.model == "linear_uniform") return std::make_unique<LinearUniformModel>();
        if (cfg.model == "stoch_vol") {
            VectorXd mu(cfg.sv_dim);
            if (cfg.sv_mu.size() == 1)
                mu.setConstant(cfg.sv_mu[0]);
            else if (cfg.sv_mu.size() == static_cast<std::size_t>(cfg.sv_dim))
                for (int i = 0; i < cfg.sv_dim; ++i) mu[i] = cfg.sv_mu[static_cast<std::size_t>(i)];
            else
                throw ValidationError("sv_mu", "sv_mu must have 1 or sv_dim entries");
            return std::make_unique<StochVolModel>(mu, cfg.sv_phi);
        }
        if (cfg.model == "discrete_hmm") {
            const auto states = static_cast<Eigen::Index>(cfg.hmm_values.size());
            if (states < 1) throw ValidationError("hmm_values", "no states");
            if (cfg.hmm_pi0.size() != cfg.hmm_values.size())
                throw ValidationError("hmm_pi0", "hmm_pi0 must have one entry per state");
            if (cfg.hmm_transition.size() != cfg.hmm_values.size() * cfg.hmm_values.size())
                throw ValidationError("hmm_P", "hmm_P must be a row-major S x S matrix");
            if (cfg.hmm_emission.size() % cfg.hmm_values.size() != 0)
                throw ValidationError("hmm_B", "hmm_B length must be a multiple of S");
            const auto symbols =
                static_cast<Eigen::Index>(cfg.hmm_emission.size() / cfg.hmm_values.size());
            VectorXd values(states), pi0(states);
            for (Eigen::Index s = 0; s < states; ++s) {
                values[s] = cfg.hmm_values[static_cast<std::size_t>(s)];
                pi0[s] = cfg.hmm_pi0[static_cast<std::size_t>(s)];
            }
            MatrixXd transition(states, states), emission(states, symbols);
            for (Eigen::Index r = 0; r < states; ++r) {
                for (Eigen::Index c = 0; c < states; ++c)
                    transition(r, c) =
                        cfg.hmm_transition[static_cast<std::size_t>(r * states + c)];
                for (Eigen::Index c = 0; c < symbols; ++c)
                    emission(r, c) =
                        cfg.hmm_emission[static_cast<std::size_t>(r * symbols + c)];
            }
            return std::make_unique<DiscreteHMMModel>(values, pi0, transition, emission);
        }
        throw ValidationError("model", "unknown model '" + cfg.model + "'");
    } catch (const std::invalid_argument& e) {
        throw ValidationError("model", e.what());
    }
}

/// The experiment's fixed dataset, from the dedicated dataset substream.
inline Trajectory generate_dataset(const ExperimentConfig& cfg, const Model& model,
                                   std::uint64_t dataset_index = 0) {
    RngStream rng = RngStream::substream(cfg.seed, StreamKind::dataset, dataset_index);
    return simulate_trajectory(model, cfg.horizon, rng);
}

/// Oracle conditional mean at the terminal step: exact (forward recursion) for
/// the discrete model, a high-particle-count filter run otherwise.
inline VectorXd compute_oracle(const ExperimentConfig& cfg, const Model& model,
                               const MatrixXd& observations,
                               std::uint64_t oracle_index = 0) {
    if (model.exact_support()) {
        const auto& hmm = dynamic_cast<const DiscreteHMMModel&>(model);
        const ForwardResult fwd = forward_filter(hmm, observations);
        VectorXd mean(1);
        mean[0] = fwd.conditional_means.back();
        return mean;
    }
    RngStream rng = RngStream::substream(cfg.seed, StreamKind::oracle, oracle_index);
    const FilterRun run = run_filter(model, observations, cfg.oracle_particles, rng);
    return run.estimates.col(cfg.horizon - 1);
}

struct ErrorSample {
    int replication;  // 1-based
    VectorXd error;   // sqrt(m) (xhat_T - oracle); empty when collapsed
    bool collapsed;
};

struct ExperimentReport {
    std::vector<ErrorSample> samples;            // all R, in replication order
    MatrixXd errors;                             // rows_used x state_dim
    // absent when the error column is degenerate (fewer than 4 usable rows or
    // zero variance), e.g. the identical-streams test hook
    std::vector<std::optional<NormalityResult>> component_tests;
    MatrixXd sigma_hat;
    VectorXd mean_error;
    std::vector<Histogram> component_histograms;
    int collapse_count = 0;
    int rows_used = 0;
    ExperimentConfig config;
    double wall_seconds = 0.0;
};

using StreamFactory = std::function<RngStream(int replication)>;

inline StreamFactory default_replication_streams(std::uint64_t seed) {
    return [seed](int r) {
        return RngStream::substream(seed, StreamKind::replication,
                                    static_cast<std::uint64_t>(r));
    };
}

/// R independent filter replications against a fixed dataset and oracle.
/// Replication r uses substream (seed, replication, r), so reports are
/// bit-deterministic and invariant to the thread count. Collapsed
/// replications are excluded from the statistics and counted.
inline ExperimentReport run_replications(const ExperimentConfig& cfg, const Model& model,
                                         const MatrixXd& observations,
                                         const VectorXd& oracle,
                                         StreamFactory streams = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!streams) streams = default_replication_streams(cfg.seed);
    const int total = cfg.replications;
    const double scale = std::sqrt(static_cast<double>(cfg.particles));
    std::vector<ErrorSample> samples(static_cast<std::size_t>(total));

    auto run_one = [&](int r) {
        ErrorSample& slot = samples[static_cast<std::size_t>(r - 1)];
        slot.replication = r;
        RngStream rng = streams(r);
        const MatrixXd* obs = &observations;
        const VectorXd* target = &oracle;
        MatrixXd local_obs;
        VectorXd local_oracle;
        if (cfg.regenerate_data) {
            const Trajectory traj =
                generate_dataset(cfg, model, static_cast<std::uint64_t>(r));
            local_obs = traj.observations;
            local_oracle =
                compute_oracle(cfg, model, local_obs, static_cast<std::uint64_t>(r));
            obs = &local_obs;
            target = &local_oracle;
        }
        try {
            const FilterRun run = run_filter(model, *obs, cfg.particles, rng);
            slot.error = scale * (run.estimates.col(cfg.horizon - 1) - *target);
            slot.collapsed = false;
        } catch (const WeightCollapse&) {
            slot.collapsed = true;
        }
    };

    int workers = cfg.threads == 0
                      ? static_cast<int>(std::thread::hardware_concurrency())
                      : cfg.threads;
    if (workers < 1) workers = 1;
    if (workers == 1) {
        for (int r = 1; r <= total; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int r = w + 1; r <= total; r += workers) run_one(r);
            });
        for (auto& t : pool) t.join();
    }

    ExperimentReport report;
    report.config = cfg;
    report.samples = std::move(samples);
    for (const auto& s : report.samples)
        if (s.collapsed) ++report.collapse_count;
    report.rows_used = total - report.collapse_count;
    if (report.collapse_count * 2 > total)
        throw ExperimentDegenerate("more than half of the replications collapsed (" +
                                   std::to_string(report.collapse_count) + " of " +
                                   std::to_string(total) + ")");

    const int dim = model.state_dim();
    report.errors.resize(report.rows_used, dim);
    int row = 0;
    for (const auto& s : report.samples)
        if (!s.collapsed) report.errors.row(row++) = s.error.transpose();

    report.sigma_hat = sample_covariance(report.errors);
    report.mean_error = report.errors.colwise().mean().transpose();
    report.component_tests.reserve(static_cast<std::size_t>(dim));
    report.component_histograms.reserve(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
        std::vector<double> column(report.errors.col(c).data(),
                                   report.errors.col(c).data() + report.rows_used);
        try {
            report.component_tests.push_back(jarque_bera(column));
        } catch (const DegenerateSample&) {
            report.component_tests.push_back(std::nullopt);
        }
        report.component_histograms.push_back(histogram(column, cfg.bins));
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// Sigma_hat at several particle counts against the same dataset and oracle;
/// with sqrt(m) scaling the diagonals should be roughly m-independent.
struct ScalingTable {
    struct Row {
        int particles;
        MatrixXd sigma_hat;
        int collapse_count;
    };
    std::vector<Row> rows;
};

inline ScalingTable scaling_check(const ExperimentConfig& cfg, const Model& model,
                                  const MatrixXd& observations, const VectorXd& oracle,
                                  const std::vector<int>& m_list) {
    if (m_list.empty())
        throw std::invalid_argument("scaling_check: m_list must not be empty");
    ScalingTable table;
    table.rows.reserve(m_list.size());
    for (int m : m_list) {
        ExperimentConfig local = cfg;
        local.particles = m;
        const ExperimentReport report =
            run_replications(local, model, observations, oracle);
        table.rows.push_back({m, report.sigma_hat, report.collapse_count});
    }
    return table;
}

}  // namespace smckit
