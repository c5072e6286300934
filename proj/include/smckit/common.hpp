#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace smckit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Base for all library errors. `code()` is the stable machine-readable
/// identifier surfaced on the CLI's error line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Every unnormalized weight is zero: the whole cloud fell outside the
/// observation's support. Carries the 1-based filtering step.
class WeightCollapse : public Error {
public:
    explicit WeightCollapse(int step)
        : Error("weight_collapse",
                "all particle weights are zero at step " + std::to_string(step)),
          step_(step) {}

    int step() const noexcept { return step_; }

private:
    int step_;
};

class UnknownSymbol : public Error {
public:
    explicit UnknownSymbol(const std::string& msg) : Error("unknown_symbol", msg) {}
};

class EnumerationTooLarge : public Error {
public:
    explicit EnumerationTooLarge(const std::string& msg)
        : Error("enumeration_too_large", msg) {}
};

class MissingHistory : public Error {
public:
    explicit MissingHistory(const std::string& msg) : Error("missing_history", msg) {}
};

class DegenerateSample : public Error {
public:
    explicit DegenerateSample(const std::string& msg)
        : Error("degenerate_sample", msg) {}
};

class ExperimentDegenerate : public Error {
public:
    explicit ExperimentDegenerate(const std::string& msg)
        : Error("experiment_degenerate", msg) {}
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& msg)
        : Error("parse", "line " + std::to_string(line) + ": " + msg), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string key, const std::string& msg)
        : Error("validation", msg), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// log(sum_i exp(xs_i)) with the usual max shift; -inf for an all-(-inf) input.
inline double log_sum_exp(const VectorXd& xs) {
    const double hi = xs.maxCoeff();
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i) acc += std::exp(xs[i] - hi);
    return hi + std::log(acc);
}

}  // namespace smckit
