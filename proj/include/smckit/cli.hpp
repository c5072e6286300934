#pragma once

#include "smckit/config.hpp"
#include "smckit/exact_inference.hpp"
#include "smckit/experiments.hpp"
#include "smckit/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace smckit {

/// A resolved CLI invocation: subcommand, config source, and the
/// flag-supplied overrides (applied on top of the file; flags win).
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

namespace cli_detail {

inline const DiscreteHMMModel& require_discrete(const Model& model,
                                                const std::string& subcommand) {
    if (!model.exact_support())
        throw ValidationError("model",
                              subcommand + " requires model = discrete_hmm");
    return dynamic_cast<const DiscreteHMMModel&>(model);
}

inline void run_simulate(const ExperimentConfig& cfg, const Model& model,
                         std::ostream& out) {
    const Trajectory traj = generate_dataset(cfg, model);
    const auto path = std::filesystem::path(cfg.out_dir) / "dataset.csv";
    write_dataset_csv(path, traj);
    out << "wrote " << path.string() << " (" << cfg.horizon << " steps)\n";
}

inline void run_filter_cmd(const ExperimentConfig& cfg, const Model& model,
                           std::ostream& out) {
    const Trajectory traj = generate_dataset(cfg, model);
    RngStream rng = RngStream::substream(cfg.seed, StreamKind::replication, 1);
    const FilterRun run =
        run_filter(model, traj.observations, cfg.particles, rng, cfg.retain_diagnostics);
    const auto path = std::filesystem::path(cfg.out_dir) / "estimates.csv";
    write_estimates_csv(path, run);
    out << "wrote " << path.string() << " (m = " << cfg.particles << ", T = "
        << cfg.horizon << ")\n";
}

inline void run_experiment(const ExperimentConfig& cfg, const Model& model,
                           std::ostream& out) {
    const Trajectory traj = generate_dataset(cfg, model);
    const VectorXd oracle = compute_oracle(cfg, model, traj.observations);
    const ExperimentReport report =
        run_replications(cfg, model, traj.observations, oracle);
    const auto written = write_experiment_outputs(cfg.out_dir, report);
    for (const auto& p : written) out << "wrote " << p.string() << "\n";
    out << "replications used: " << report.rows_used << " (collapsed: "
        << report.collapse_count << ")\n";
    for (std::size_t c = 0; c < report.component_tests.size(); ++c) {
        const auto& t = report.component_tests[c];
        out << "component " << (c + 1) << ": JB p-value = "
            << (t ? g17(t->p_value) : "nan")
            << (t ? (t->reject_at_05 ? " (reject at 0.05)" : " (no rejection at 0.05)")
                  : " (degenerate sample)")
            << "\n";
    }
    out << "wall seconds: " << report.wall_seconds << "\n";
}

inline void run_oracle_check(const ExperimentConfig& cfg, const Model& model,
                             std::ostream& out) {
    const auto& hmm = require_discrete(model, "oracle-check");
    const Trajectory traj = generate_dataset(cfg, model);
    const ExactDiagnostics diag(hmm, traj.observations);
    const double exact_mean = diag.conditional_mean();

    double max_identity_dev = 0.0;
    double sq_err = 0.0;
    double mean_estimate = 0.0;
    for (int r = 1; r <= cfg.replications; ++r) {
        RngStream rng = RngStream::substream(cfg.seed, StreamKind::replication,
                                             static_cast<std::uint64_t>(r));
        const FilterRun run =
            run_filter(model, traj.observations, cfg.particles, rng, true);
        const auto est = theoretical_estimator(run, diag);
        const double xhat = run.estimates(0, cfg.horizon - 1);
        const double recovered = est.x_star[0] / est.ratio;
        const double denom = std::max(std::abs(xhat), 1e-300);
        max_identity_dev = std::max(max_identity_dev, std::abs(xhat - recovered) / denom);
        sq_err += (xhat - exact_mean) * (xhat - exact_mean);
        mean_estimate += xhat;
    }
    mean_estimate /= cfg.replications;
    const double rmse = std::sqrt(sq_err / cfg.replications);

    const auto path = std::filesystem::path(cfg.out_dir) / "oracle_check.csv";
    {
        auto csv = detail::open_output(path);
        csv << "key,value\n";
        csv << "runs," << cfg.replications << "\n";
        csv << "identity_max_rel_dev," << g17(max_identity_dev) << "\n";
        csv << "exact_conditional_mean," << g17(exact_mean) << "\n";
        csv << "mean_pf_estimate," << g17(mean_estimate) << "\n";
        csv << "rmse_vs_exact," << g17(rmse) << "\n";
        csv << "log_marginal_likelihood," << g17(diag.log_marginal_likelihood()) << "\n";
    }
    out << "wrote " << path.string() << "\n";
    out << "identity max relative deviation: " << g17(max_identity_dev) << "\n";
    out << "exact mean: " << g17(exact_mean) << "  PF mean of " << cfg.replications
        << " runs: " << g17(mean_estimate) << "  RMSE: " << g17(rmse) << "\n";
}

inline void run_sigma_check(const ExperimentConfig& cfg, const Model& model,
                            std::ostream& out) {
    const auto& hmm = require_discrete(model, "sigma-check");
    const Trajectory traj = generate_dataset(cfg, model);
    const ExactDiagnostics diag(hmm, traj.observations);
    const MatrixXd exact = diag.sigma(SigmaForm::self_normalized);
    const VectorXd oracle = compute_oracle(cfg, model, traj.observations);
    const ExperimentReport report =
        run_replications(cfg, model, traj.observations, oracle);

    const auto path = std::filesystem::path(cfg.out_dir) / "sigma_check.csv";
    double max_rel = 0.0;
    {
        auto csv = detail::open_output(path);
        csv << "i,j,exact,empirical,rel_dev\n";
        for (Eigen::Index i = 0; i < exact.rows(); ++i)
            for (Eigen::Index j = 0; j < exact.cols(); ++j) {
                const double e = exact(i, j);
                const double h = report.sigma_hat(i, j);
                const double rel =
                    std::abs(e) > 0 ? std::abs(h - e) / std::abs(e) : std::abs(h);
                if (std::abs(e) > 0.01) max_rel = std::max(max_rel, rel);
                csv << (i + 1) << ',' << (j + 1) << ',' << g17(e) << ',' << g17(h)
                    << ',' << g17(rel) << "\n";
            }
    }
    out << "wrote " << path.string() << "\n";
    out << "exact sigma: " << g17(exact(0, 0)) << "  empirical: "
        << g17(report.sigma_hat(0, 0)) << "  max rel dev (entries > 0.01): "
        << g17(max_rel) << "\n";
}

inline void run_scaling(const ExperimentConfig& cfg, const Model& model,
                        std::ostream& out) {
    const Trajectory traj = generate_dataset(cfg, model);
    const VectorXd oracle = compute_oracle(cfg, model, traj.observations);
    const ScalingTable table =
        scaling_check(cfg, model, traj.observations, oracle, cfg.m_list);
    const auto path = std::filesystem::path(cfg.out_dir) / "scaling.csv";
    write_scaling_csv(path, table);
    out << "wrote " << path.string() << "\n";
    for (const auto& row : table.rows) {
        out << "m = " << row.particles << ": diag(sigma_hat) =";
        for (Eigen::Index i = 0; i < row.sigma_hat.rows(); ++i)
            out << ' ' << g17(row.sigma_hat(i, i));
        out << "\n";
    }
}

}  // namespace cli_detail

/// Execute a validated manifest. Returns 0 on success; on failure prints one
/// machine-readable `error: <code>: <message>` line to `err` and returns 1.
inline int dispatch(const RunManifest& manifest, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    try {
        const ExperimentConfig cfg = parse_config(manifest.config_path, manifest.overrides);
        if (!cfg.seed_set)
            throw ValidationError("seed", "a seed is required (flag --seed or config key "
                                          "'seed'); wall-clock seeding is not supported");
        const std::unique_ptr<Model> model = make_model(cfg);
        if (manifest.subcommand == "simulate")
            cli_detail::run_simulate(cfg, *model, out);
        else if (manifest.subcommand == "filter")
            cli_detail::run_filter_cmd(cfg, *model, out);
        else if (manifest.subcommand == "experiment")
            cli_detail::run_experiment(cfg, *model, out);
        else if (manifest.subcommand == "oracle-check")
            cli_detail::run_oracle_check(cfg, *model, out);
        else if (manifest.subcommand == "sigma-check")
            cli_detail::run_sigma_check(cfg, *model, out);
        else if (manifest.subcommand == "scaling")
            cli_detail::run_scaling(cfg, *model, out);
        else
            throw ValidationError("subcommand",
                                  "unknown subcommand '" + manifest.subcommand + "'");
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace smckit
