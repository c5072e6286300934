#pragma once

#include "smckit/common.hpp"
#include "smckit/models/discrete_hmm.hpp"
#include "smckit/particle_filter.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace smckit {

/// Exact filtering output of the forward recursion on a DiscreteHMMModel.
struct ForwardResult {
    MatrixXd posteriors;                    // S x T, column k-1 = p(x_k | z_{1:k})
    std::vector<double> log_marginal;       // log p(z_{1:k}) per step
    std::vector<double> conditional_means;  // sum_s value(s) posterior_k(s)
};

/// Map an observation matrix (1 x T) onto symbol indices, validating against
/// the emission alphabet.
inline std::vector<int> observation_symbols(const DiscreteHMMModel& hmm,
                                            const MatrixXd& observations) {
    std::vector<int> symbols(static_cast<std::size_t>(observations.cols()));
    for (Eigen::Index k = 0; k < observations.cols(); ++k)
        symbols[static_cast<std::size_t>(k)] = hmm.symbol_of(observations.col(k));
    return symbols;
}

inline ForwardResult forward_filter(const DiscreteHMMModel& hmm,
                                    std::span<const int> symbols) {
    const int num_states = hmm.num_states();
    const int horizon = static_cast<int>(symbols.size());
    if (horizon < 1) throw std::invalid_argument("forward_filter: empty observation sequence");
    for (int sym : symbols)
        if (sym < 0 || sym >= hmm.num_symbols())
            throw UnknownSymbol("symbol " + std::to_string(sym) + " outside alphabet");

    ForwardResult result;
    result.posteriors.resize(num_states, horizon);
    result.log_marginal.resize(static_cast<std::size_t>(horizon));
    result.conditional_means.resize(static_cast<std::size_t>(horizon));

    VectorXd alpha = hmm.initial_distribution().cwiseProduct(hmm.emission().col(symbols[0]));
    double log_scale = 0.0;
    for (int k = 0; k < horizon; ++k) {
        if (k > 0)
            alpha = (hmm.transition().transpose() * alpha)
                        .cwiseProduct(hmm.emission().col(symbols[static_cast<std::size_t>(k)]));
        const double step_sum = alpha.sum();
        if (step_sum <= 0.0)
            throw DegenerateSample("forward_filter: observation sequence has zero likelihood");
        alpha /= step_sum;
        log_scale += std::log(step_sum);
        result.posteriors.col(k) = alpha;
        result.log_marginal[static_cast<std::size_t>(k)] = log_scale;
        result.conditional_means[static_cast<std::size_t>(k)] = hmm.state_values().dot(alpha);
    }
    return result;
}

inline ForwardResult forward_filter(const DiscreteHMMModel& hmm, const MatrixXd& observations) {
    return forward_filter(hmm, observation_symbols(hmm, observations));
}

/// Which estimator an asymptotic covariance refers to.
///   self_normalized — the filter estimate sum_i w_i x_i (weights renormalized
///                     each step); the covariance of the actual PF error.
///   unnormalized    — the path-weighted average rescaled by the true
///                     marginal likelihood instead of the realized
///                     alpha-bar product (see theoretical_estimator).
enum class SigmaForm { self_normalized, unnormalized };

/// Enumeration-backed values of every exactly-computable filtering quantity
/// for a DiscreteHMMModel and a fixed observation sequence: prefix marginal
/// likelihoods, the conditional mean, the path-weight ratio g*, the
/// conditional path functionals u_k, and the asymptotic covariance assembly.
///
/// Under the bootstrap proposal the per-step unnormalized weight along a path
/// is the emission probability, so E[prod alpha over k steps] = p(z_{1:k}).
class ExactDiagnostics {
public:
    static constexpr double kMaxEnumerationPaths = 1e6;

    ExactDiagnostics(DiscreteHMMModel hmm, std::vector<int> symbols)
        : hmm_(std::move(hmm)), symbols_(std::move(symbols)) {
        const ForwardResult fwd = forward_filter(hmm_, symbols_);
        log_prefix_marginal_.assign(1, 0.0);  // log p(z_{1:0}) = 0
        log_prefix_marginal_.insert(log_prefix_marginal_.end(), fwd.log_marginal.begin(),
                                    fwd.log_marginal.end());
        conditional_mean_ = fwd.conditional_means.back();
    }

    ExactDiagnostics(const DiscreteHMMModel& hmm, const MatrixXd& observations)
        : ExactDiagnostics(hmm, observation_symbols(hmm, observations)) {}

    const DiscreteHMMModel& hmm() const { return hmm_; }
    int horizon() const { return static_cast<int>(symbols_.size()); }

    /// log E[prod_{l=1..T} alpha_l] = log p(z_{1:T}).
    double log_marginal_likelihood() const { return log_prefix_marginal_.back(); }

    /// log p(z_{1:k}); k = 0 gives 0.
    double log_prefix_marginal(int k) const {
        return log_prefix_marginal_[static_cast<std::size_t>(k)];
    }

    /// u_0 = E[x_T | z_{1:T}].
    double conditional_mean() const { return conditional_mean_; }

    /// g*_k(x_{1:k}) = E[prod alpha] / prod alpha along the path; +inf when
    /// the path likelihood is zero. k = 0 gives 1.
    double g_star(std::span<const int> path) const {
        const double log_lik = path_log_likelihood(path);
        if (log_lik == kNegInf) return kPosInf;
        return std::exp(log_prefix_marginal(static_cast<int>(path.size())) - log_lik);
    }

    /// u_k(x_{1:k}) = E[x_T L_T | x_{1:k}], by enumerating every continuation
    /// under the transition law. k = 0 (empty path) gives the conditional
    /// mean; k = T leaves no expectation.
    double u_function(std::span<const int> path) const { return u_shifted(path, 0.0); }

    /// E[(x_T - shift) L_T | x_{1:k}] — the centered variant the
    /// self-normalized covariance assembly needs.
    double u_shifted(std::span<const int> path, double shift) const {
        const int horizon_t = horizon();
        const int k = static_cast<int>(path.size());
        if (k > horizon_t)
            throw std::invalid_argument("u_function: path longer than horizon");
        guard_enumeration(horizon_t - k);
        const double log_z = log_marginal_likelihood();
        // prefix emission product; a zero factor forces u = 0 exactly.
        double prefix_lik = 1.0;
        for (int l = 0; l < k; ++l)
            prefix_lik *= hmm_.emission()(path[static_cast<std::size_t>(l)],
                                          symbols_[static_cast<std::size_t>(l)]);
        if (k == horizon_t) {
            const double terminal = hmm_.state_values()[path[static_cast<std::size_t>(k - 1)]];
            return (terminal - shift) * prefix_lik * std::exp(-log_z);
        }
        double total = 0.0;
        std::vector<int> cont(static_cast<std::size_t>(horizon_t - k), 0);
        const int states = hmm_.num_states();
        while (true) {
            double term = 1.0;
            int prev = k > 0 ? path[static_cast<std::size_t>(k - 1)] : -1;
            for (int l = k; l < horizon_t; ++l) {
                const int s = cont[static_cast<std::size_t>(l - k)];
                term *= l == 0 ? hmm_.initial_distribution()[s] : hmm_.transition()(prev, s);
                term *= hmm_.emission()(s, symbols_[static_cast<std::size_t>(l)]);
                prev = s;
            }
            total += term * (hmm_.state_values()[prev] - shift);
            if (!advance(cont, states)) break;
        }
        return prefix_lik * total * std::exp(-log_z);
    }

    /// Asymptotic covariance of the sqrt(m)-scaled terminal estimation error,
    /// assembled as the exact expectation of the
    /// per-step integrands over the proposal path law (the prior chain):
    ///   Sigma = sum_{k=1..T}   E[(u_k u_k' - u_{k-1} u_{k-1}') g*_{k-1}]
    ///         + sum_{k=1..T-1} E[(u_k g*_k - u_0)(u_k g*_k - u_0)' / g*_k].
    /// Zero-likelihood paths make g* infinite and the matching u zero; those
    /// integrand terms are taken as 0 (their exact limit). For
    /// SigmaForm::self_normalized the u functions are centered at the
    /// conditional mean, which is what the filter estimate's error obeys.
    MatrixXd sigma(SigmaForm form = SigmaForm::self_normalized) const {
        const int horizon_t = horizon();
        guard_enumeration(horizon_t);
        const double u0 = conditional_mean();
        const double shift = form == SigmaForm::self_normalized ? u0 : 0.0;
        const double u0_eff = form == SigmaForm::self_normalized ? 0.0 : u0;
        const int states = hmm_.num_states();
        double total = 0.0;

        for (int k = 1; k <= horizon_t; ++k) {
            std::vector<int> prefix(static_cast<std::size_t>(k), 0);
            while (true) {
                const double rho = prior_path_probability(prefix);
                if (rho > 0.0) {
                    const auto head = std::span<const int>(prefix).first(
                        static_cast<std::size_t>(k - 1));
                    const double g_prev = g_star(head);
                    if (!std::isinf(g_prev)) {
                        const double u_k = u_shifted(prefix, shift);
                        const double u_prev = u_shifted(head, shift);
                        total += rho * (u_k * u_k - u_prev * u_prev) * g_prev;
                    }
                }
                if (!advance(prefix, states)) break;
            }
        }
        for (int k = 1; k <= horizon_t - 1; ++k) {
            std::vector<int> prefix(static_cast<std::size_t>(k), 0);
            while (true) {
                const double rho = prior_path_probability(prefix);
                if (rho > 0.0) {
                    const double g_k = g_star(prefix);
                    if (!std::isinf(g_k)) {
                        const double u_k = u_shifted(prefix, shift);
                        const double d = u_k * g_k - u0_eff;
                        total += rho * d * d / g_k;
                    }
                }
                if (!advance(prefix, states)) break;
            }
        }
        // exact zero can round to a tiny negative for degenerate chains
        if (total < 0.0 && total > -1e-12) total = 0.0;
        MatrixXd out(1, 1);
        out(0, 0) = total;
        return out;
    }

    /// Prior-chain probability pi0(x_1) prod P(x_{l-1}, x_l) of a label path.
    double prior_path_probability(std::span<const int> path) const {
        if (path.empty()) return 1.0;
        double p = hmm_.initial_distribution()[path[0]];
        for (std::size_t l = 1; l < path.size(); ++l)
            p *= hmm_.transition()(path[l - 1], path[l]);
        return p;
    }

    /// log prod_{l<=k} p(z_l | x_l) along a label path; -inf on a zero factor.
    double path_log_likelihood(std::span<const int> path) const {
        double acc = 0.0;
        for (std::size_t l = 0; l < path.size(); ++l) {
            const double b = hmm_.emission()(path[l], symbols_[l]);
            if (b <= 0.0) return kNegInf;
            acc += std::log(b);
        }
        return acc;
    }

private:
    void guard_enumeration(int free_steps) const {
        if (std::pow(static_cast<double>(hmm_.num_states()), free_steps) >
            kMaxEnumerationPaths)
            throw EnumerationTooLarge("path enumeration over " +
                                      std::to_string(free_steps) +
                                      " steps exceeds the path budget");
    }

    static bool advance(std::vector<int>& odometer, int base) {
        for (std::size_t pos = odometer.size(); pos-- > 0;) {
            if (++odometer[pos] < base) return true;
            odometer[pos] = 0;
        }
        return false;
    }

    DiscreteHMMModel hmm_;
    std::vector<int> symbols_;
    std::vector<double> log_prefix_marginal_;
    double conditional_mean_;
};

inline MatrixXd exact_sigma(const DiscreteHMMModel& hmm, std::span<const int> symbols,
                            SigmaForm form = SigmaForm::self_normalized) {
    return ExactDiagnostics(hmm, std::vector<int>(symbols.begin(), symbols.end()))
        .sigma(form);
}

/// Reconstructed genealogy of one retained run: per final-step particle, the
/// pre-resampling indices of its ancestors at steps 1..T.
namespace detail {

inline std::vector<int> trace_indices(const FilterRun& run, int start_index, int from_step) {
    std::vector<int> idx(static_cast<std::size_t>(from_step));
    int j = start_index;
    for (int l = from_step; l >= 1; --l) {
        idx[static_cast<std::size_t>(l - 1)] = j;
        if (l > 1) j = run.resamples[static_cast<std::size_t>(l - 2)]
                           .parents[static_cast<std::size_t>(j)];
    }
    return idx;
}

inline void require_history(const FilterRun& run) {
    if (!run.retained ||
        run.weighted_clouds.size() != static_cast<std::size_t>(run.horizon()))
        throw MissingHistory("filter run was not retained with per-step clouds");
}

}  // namespace detail

/// The likelihood-ratio path estimator and the realized-to-exact
/// normalization ratio:
///   x_star = (1/m) sum_i L_T(path_i) x_i H_i(T-1),
///   ratio  = (alpha_bar_1 ... alpha_bar_T) / E[prod alpha],
/// satisfying estimate = x_star / ratio exactly (floating tolerance), on any
/// run whose per-step history was retained.
struct TheoreticalEstimate {
    VectorXd x_star;
    double ratio;
};

inline TheoreticalEstimate theoretical_estimator(const FilterRun& run,
                                                 const ExactDiagnostics& diag) {
    detail::require_history(run);
    const int horizon_t = run.horizon();
    const int m = run.particle_count;
    const double log_z = diag.log_marginal_likelihood();

    double log_abar_head = 0.0;  // sum over steps 1..T-1
    for (int l = 0; l + 1 < horizon_t; ++l)
        log_abar_head += run.log_alpha_bars[static_cast<std::size_t>(l)];

    const ParticleCloud& last = run.weighted_clouds.back();
    VectorXd x_star = VectorXd::Zero(last.particles.rows());
    for (int i = 0; i < m; ++i) {
        const std::vector<int> idx = detail::trace_indices(run, i, horizon_t);
        double log_path_alpha = 0.0;  // sum over steps 1..T
        for (int l = 1; l <= horizon_t; ++l)
            log_path_alpha += run.weighted_clouds[static_cast<std::size_t>(l - 1)]
                                  .log_alpha[idx[static_cast<std::size_t>(l - 1)]];
        const double log_head_alpha =
            log_path_alpha - last.log_alpha[i];  // steps 1..T-1
        // L_T * H_{T-1} with the path alphas cancelling between the two
        const double log_factor = (log_path_alpha - log_z) + (log_abar_head - log_head_alpha);
        x_star += std::exp(log_factor) * last.particles.col(i);
    }
    x_star /= static_cast<double>(m);
    const double ratio = std::exp(run.log_alpha_bar_product() - log_z);
    return {std::move(x_star), ratio};
}

/// Path-weight factors of one post-resampling particle:
///   h            = H_k = (alpha_bar_1 ... alpha_bar_k) / prod alpha along path,
///   h_over_g_star = H_k / g*_k(path) (converges to 1 as m grows).
struct PathFactors {
    double h;
    double h_over_g_star;
};

inline PathFactors h_factor(const FilterRun& run, const ExactDiagnostics& diag,
                            int particle, int step) {
    if (step == 0) return {1.0, 1.0};
    detail::require_history(run);
    if (step < 1 || step > run.horizon())
        throw std::invalid_argument("h_factor: step outside run horizon");
    if (particle < 0 || particle >= run.particle_count)
        throw std::invalid_argument("h_factor: particle index out of range");

    // post-resampling particle `particle` at `step` copies this pre-resampling one
    const int source = run.resamples[static_cast<std::size_t>(step - 1)]
                           .parents[static_cast<std::size_t>(particle)];
    const std::vector<int> idx = detail::trace_indices(run, source, step);

    double log_abar = 0.0, log_path_alpha = 0.0;
    std::vector<int> labels(static_cast<std::size_t>(step));
    for (int l = 1; l <= step; ++l) {
        const ParticleCloud& cloud = run.weighted_clouds[static_cast<std::size_t>(l - 1)];
        const int j = idx[static_cast<std::size_t>(l - 1)];
        log_abar += run.log_alpha_bars[static_cast<std::size_t>(l - 1)];
        log_path_alpha += cloud.log_alpha[j];
        labels[static_cast<std::size_t>(l - 1)] = diag.hmm().label_of(cloud.particles.col(j));
    }
    const double h = std::exp(log_abar - log_path_alpha);
    const double log_g =
        diag.log_prefix_marginal(step) - diag.path_log_likelihood(labels);
    return {h, std::exp(log_abar - log_path_alpha - log_g)};
}

}  // namespace smckit
