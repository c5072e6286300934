#pragma once

#include "smckit/model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace smckit {

/// Finite hidden Markov model over S latent states and a V-symbol observation
/// alphabet. It exists to make every filtering quantity exactly computable by
/// the forward recursion and path enumeration.
///
/// State s carries a real value state_values[s]; a particle is the 1-vector
/// holding that value, an observation the 1-vector holding the symbol index.
/// x_1 is drawn from pi0 (the step-1 kernel ignores the notional time-0
/// state), later steps from the matching row of P.
class DiscreteHMMModel : public Model {
public:
    DiscreteHMMModel(VectorXd state_values, VectorXd pi0, MatrixXd transition,
                     MatrixXd emission)
        : values_(std::move(state_values)),
          pi0_(std::move(pi0)),
          P_(std::move(transition)),
          B_(std::move(emission)) {
        const Eigen::Index s = values_.size();
        if (s < 1) throw std::invalid_argument("DiscreteHMMModel: no states");
        if (pi0_.size() != s || P_.rows() != s || P_.cols() != s || B_.rows() != s)
            throw std::invalid_argument("DiscreteHMMModel: inconsistent dimensions");
        if (B_.cols() < 1) throw std::invalid_argument("DiscreteHMMModel: empty alphabet");
        check_distribution(pi0_, "pi0");
        for (Eigen::Index r = 0; r < s; ++r) {
            check_distribution(P_.row(r), "transition row " + std::to_string(r));
            check_distribution(B_.row(r), "emission row " + std::to_string(r));
        }
        for (Eigen::Index i = 0; i < s; ++i)
            for (Eigen::Index j = i + 1; j < s; ++j)
                if (values_[i] == values_[j])
                    throw std::invalid_argument(
                        "DiscreteHMMModel: state values must be distinct");
    }

    /// The 2-state model used as the default exact-inference oracle.
    static DiscreteHMMModel two_state_default() {
        VectorXd values(2), pi0(2);
        values << 0.0, 1.0;
        pi0 << 0.5, 0.5;
        MatrixXd P(2, 2), B(2, 2);
        P << 0.9, 0.1,
             0.2, 0.8;
        B << 0.7, 0.3,
             0.4, 0.6;
        return DiscreteHMMModel(values, pi0, P, B);
    }

    int state_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    bool exact_support() const override { return true; }

    int num_states() const { return static_cast<int>(values_.size()); }
    int num_symbols() const { return static_cast<int>(B_.cols()); }
    const VectorXd& state_values() const { return values_; }
    const VectorXd& initial_distribution() const { return pi0_; }
    const MatrixXd& transition() const { return P_; }
    const MatrixXd& emission() const { return B_; }

    int label_of(const VectorXd& x) const {
        for (int s = 0; s < num_states(); ++s)
            if (x[0] == values_[s]) return s;
        throw std::invalid_argument("DiscreteHMMModel: state value not in model");
    }

    int symbol_of(const VectorXd& z) const {
        const double v = z[0];
        const int sym = static_cast<int>(std::llround(v));
        if (v != static_cast<double>(sym) || sym < 0 || sym >= num_symbols())
            throw UnknownSymbol("observation symbol " + std::to_string(v) +
                                " outside alphabet of size " +
                                std::to_string(num_symbols()));
        return sym;
    }

    VectorXd state_vector(int label) const {
        VectorXd x(1);
        x[0] = values_[label];
        return x;
    }

    VectorXd initial_sample(RngStream&) const override {
        // Notional time-0 state; the step-1 kernel ignores it.
        return state_vector(0);
    }

    VectorXd transition_sample(const VectorXd& x, int step, RngStream& rng) const override {
        const VectorXd probs =
            step <= 1 ? pi0_ : VectorXd(P_.row(label_of(x)).transpose());
        return state_vector(sample_categorical(probs, rng));
    }

    VectorXd observation_sample(const VectorXd& x, RngStream& rng) const override {
        const VectorXd probs = B_.row(label_of(x)).transpose();
        VectorXd z(1);
        z[0] = static_cast<double>(sample_categorical(probs, rng));
        return z;
    }

    double observation_logdensity(const VectorXd& x, const VectorXd& z) const override {
        const double p = B_(label_of(x), symbol_of(z));
        return p > 0.0 ? std::log(p) : kNegInf;
    }

    double transition_logdensity(const VectorXd& from, const VectorXd& to,
                                 int step) const override {
        const double p =
            step <= 1 ? pi0_[label_of(to)] : P_(label_of(from), label_of(to));
        return p > 0.0 ? std::log(p) : kNegInf;
    }

private:
    template <typename Derived>
    static void check_distribution(const Eigen::DenseBase<Derived>& row,
                                   const std::string& what) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < row.size(); ++i) {
            if (row(i) < 0.0)
                throw std::invalid_argument("DiscreteHMMModel: negative entry in " + what);
            sum += row(i);
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteHMMModel: " + what + " does not sum to 1");
    }

    static int sample_categorical(const VectorXd& probs, RngStream& rng) {
        const double u = rng.uniform01();
        double cum = 0.0;
        for (Eigen::Index i = 0; i + 1 < probs.size(); ++i) {
            cum += probs[i];
            if (u < cum) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size() - 1);
    }

    VectorXd values_;
    VectorXd pi0_;
    MatrixXd P_;
    MatrixXd B_;
};

}  // namespace smckit
