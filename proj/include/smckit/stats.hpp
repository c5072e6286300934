#pragma once

#include "smckit/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace smckit {

/// Central sample moments with divisor n (the convention the Jarque-Bera
/// statistic's chi-square limit assumes). `variance` is m2, `kurtosis` is the
/// raw m4/m2^2 (3 for a normal population).
struct Moments {
    double mean;
    double variance;
    double skewness;
    double kurtosis;
};

inline Moments moments(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 4) throw DegenerateSample("moments: need at least 4 observations");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 <= 0.0) throw DegenerateSample("moments: sample variance is zero");
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

/// Jarque-Bera test of normality.
struct NormalityResult {
    std::size_t n;
    double skewness;
    double excess_kurtosis;
    double jb_stat;
    double p_value;
    bool reject_at_05;
};

/// JB statistic from precomputed skewness and raw kurtosis:
/// JB = n/6 * (S^2 + (K-3)^2/4), p = exp(-JB/2) (exact chi-square(2) survival).
inline NormalityResult jarque_bera_from_moments(std::size_t n, double skewness,
                                                double kurtosis) {
    const double excess = kurtosis - 3.0;
    const double jb = static_cast<double>(n) / 6.0 *
                      (skewness * skewness + excess * excess / 4.0);
    const double p = std::exp(-jb / 2.0);
    return {n, skewness, excess, jb, p, p < 0.05};
}

inline NormalityResult jarque_bera(std::span<const double> xs) {
    const Moments m = moments(xs);
    return jarque_bera_from_moments(xs.size(), m.skewness, m.kurtosis);
}

/// Unbiased sample covariance of the rows of `samples` (R x n), divisor R-1.
inline MatrixXd sample_covariance(const MatrixXd& samples) {
    const Eigen::Index r = samples.rows();
    if (r < 2) throw DegenerateSample("sample_covariance: need at least 2 rows");
    const MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    MatrixXd cov = centered.transpose() * centered / static_cast<double>(r - 1);
    return (cov + cov.transpose()) / 2.0;
}

/// Equal-width histogram over [min, max]; interior bins are left-closed and
/// the last bin is right-closed, so counts always sum to the sample size.
struct Histogram {
    std::vector<double> edges;        // bins + 1 boundaries
    std::vector<std::int64_t> counts; // bins entries
};

inline Histogram histogram(std::span<const double> xs, int bins) {
    if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
    if (xs.empty()) throw std::invalid_argument("histogram: empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    const double lo = *lo_it, hi = *hi_it;
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b)
        h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double x : xs) {
        int idx = width > 0.0 ? static_cast<int>((x - lo) / width) : bins - 1;
        idx = std::clamp(idx, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

}  // namespace smckit
