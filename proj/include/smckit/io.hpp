#pragma once

#include "smckit/experiments.hpp"
#include "smckit/particle_filter.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace smckit {

/// Round-trip-safe float formatting: 17 significant digits.
inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace detail

inline void write_dataset_csv(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = detail::open_output(path);
    out << "step";
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) out << ",x_" << (i + 1);
    for (Eigen::Index i = 0; i < traj.observations.rows(); ++i) out << ",z_" << (i + 1);
    out << "\n";
    for (Eigen::Index k = 0; k < traj.states.cols(); ++k) {
        out << (k + 1);
        for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
            out << ',' << g17(traj.states(i, k));
        for (Eigen::Index i = 0; i < traj.observations.rows(); ++i)
            out << ',' << g17(traj.observations(i, k));
        out << "\n";
    }
}

inline void write_estimates_csv(const std::filesystem::path& path, const FilterRun& run) {
    auto out = detail::open_output(path);
    out << "step";
    for (Eigen::Index i = 0; i < run.estimates.rows(); ++i) out << ",xhat_" << (i + 1);
    out << ",log_alpha_bar\n";
    for (int k = 0; k < run.horizon(); ++k) {
        out << (k + 1);
        for (Eigen::Index i = 0; i < run.estimates.rows(); ++i)
            out << ',' << g17(run.estimates(i, k));
        out << ',' << g17(run.log_alpha_bars[static_cast<std::size_t>(k)]) << "\n";
    }
}

inline void write_errors_csv(const std::filesystem::path& path,
                             const ExperimentReport& report) {
    auto out = detail::open_output(path);
    const Eigen::Index dim = report.errors.cols();
    out << "rep";
    for (Eigen::Index i = 0; i < dim; ++i) out << ",err_" << (i + 1);
    out << ",collapsed\n";
    for (const ErrorSample& s : report.samples) {
        out << s.replication;
        for (Eigen::Index i = 0; i < dim; ++i)
            out << ',' << (s.collapsed ? "nan" : g17(s.error[i]));
        out << ',' << (s.collapsed ? 1 : 0) << "\n";
    }
}

inline void write_report_csv(const std::filesystem::path& path,
                             const ExperimentReport& report) {
    auto out = detail::open_output(path);
    out << "key,value\n";
    out << "replications," << report.config.replications << "\n";
    out << "rows_used," << report.rows_used << "\n";
    out << "collapses," << report.collapse_count << "\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t c = 0; c < report.component_tests.size(); ++c) {
        const auto& t = report.component_tests[c];
        const std::string tag = std::to_string(c + 1);
        out << "jb_stat_" << tag << ',' << g17(t ? t->jb_stat : nan) << "\n";
        out << "jb_p_" << tag << ',' << g17(t ? t->p_value : nan) << "\n";
        out << "skewness_" << tag << ',' << g17(t ? t->skewness : nan) << "\n";
        out << "excess_kurtosis_" << tag << ',' << g17(t ? t->excess_kurtosis : nan) << "\n";
        out << "reject_at_05_" << tag << ',' << (t && t->reject_at_05 ? 1 : 0) << "\n";
        out << "mean_error_" << tag << ',' << g17(report.mean_error[static_cast<Eigen::Index>(c)])
            << "\n";
    }
    for (Eigen::Index i = 0; i < report.sigma_hat.rows(); ++i)
        for (Eigen::Index j = 0; j < report.sigma_hat.cols(); ++j)
            out << "sigma_" << (i + 1) << '_' << (j + 1) << ','
                << g17(report.sigma_hat(i, j)) << "\n";
}

inline void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
    auto out = detail::open_output(path);
    out << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        out << g17(hist.edges[b]) << ',' << g17(hist.edges[b + 1]) << ','
            << hist.counts[b] << "\n";
}

/// errors.csv + report.csv + hist_component_k.csv, as the experiment emits.
inline std::vector<std::filesystem::path> write_experiment_outputs(
    const std::filesystem::path& dir, const ExperimentReport& report) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    written.push_back(dir / "errors.csv");
    write_errors_csv(written.back(), report);
    written.push_back(dir / "report.csv");
    write_report_csv(written.back(), report);
    for (std::size_t c = 0; c < report.component_histograms.size(); ++c) {
        written.push_back(dir / ("hist_component_" + std::to_string(c + 1) + ".csv"));
        write_histogram_csv(written.back(), report.component_histograms[c]);
    }
    return written;
}

inline void write_scaling_csv(const std::filesystem::path& path, const ScalingTable& table) {
    auto out = detail::open_output(path);
    out << "m,i,j,sigma_hat,collapses\n";
    for (const auto& row : table.rows)
        for (Eigen::Index i = 0; i < row.sigma_hat.rows(); ++i)
            for (Eigen::Index j = 0; j < row.sigma_hat.cols(); ++j)
                out << row.particles << ',' << (i + 1) << ',' << (j + 1) << ','
                    << g17(row.sigma_hat(i, j)) << ',' << row.collapse_count << "\n";
}

}  // namespace smckit
