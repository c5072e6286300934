#pragma once

#include "smckit/common.hpp"
#include "smckit/experiments.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace smckit {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    T value{};
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError(key, "invalid value '" + t + "' for key " + key);
    return value;
}

template <>
inline double parse_number<double>(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double value = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return value;
    } catch (const std::exception&) {
        throw ValidationError(key, "invalid value '" + t + "' for key " + key);
    }
}

inline bool parse_bool(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw ValidationError(key, "invalid boolean '" + t + "' for key " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
    std::vector<T> out;
    for (const std::string& part : split_list(text))
        out.push_back(parse_number<T>(part, key));
    if (out.empty()) throw ValidationError(key, "empty list for key " + key);
    return out;
}

inline void apply_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
    if (key == "model") cfg.model = trim(value);
    else if (key == "T") cfg.horizon = parse_number<int>(value, key);
    else if (key == "m") cfg.particles = parse_number<int>(value, key);
    else if (key == "m_oracle") cfg.oracle_particles = parse_number<int>(value, key);
    else if (key == "R") cfg.replications = parse_number<int>(value, key);
    else if (key == "bins") cfg.bins = parse_number<int>(value, key);
    else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(value, key);
        cfg.seed_set = true;
    } else if (key == "retain") cfg.retain_diagnostics = parse_bool(value, key);
    else if (key == "regenerate_data") cfg.regenerate_data = parse_bool(value, key);
    else if (key == "threads") cfg.threads = parse_number<int>(value, key);
    else if (key == "out") cfg.out_dir = trim(value);
    else if (key == "sv_phi") cfg.sv_phi = parse_number<double>(value, key);
    else if (key == "sv_dim") cfg.sv_dim = parse_number<int>(value, key);
    else if (key == "sv_mu") cfg.sv_mu = parse_list<double>(value, key);
    else if (key == "hmm_values") cfg.hmm_values = parse_list<double>(value, key);
    else if (key == "hmm_pi0") cfg.hmm_pi0 = parse_list<double>(value, key);
    else if (key == "hmm_P") cfg.hmm_transition = parse_list<double>(value, key);
    else if (key == "hmm_B") cfg.hmm_emission = parse_list<double>(value, key);
    else if (key == "m_list") cfg.m_list = parse_list<int>(value, key);
    else throw ValidationError(key, "unknown config key '" + key + "'");
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.model != "linear_uniform" && cfg.model != "stoch_vol" &&
        cfg.model != "discrete_hmm")
        throw ValidationError("model", "unknown model '" + cfg.model + "'");
    if (cfg.horizon < 1) throw ValidationError("T", "T must be >= 1");
    if (cfg.particles < 1) throw ValidationError("m", "m must be >= 1");
    if (cfg.oracle_particles < cfg.particles)
        throw ValidationError("m_oracle", "m_oracle must be >= m");
    if (cfg.replications < 2) throw ValidationError("R", "R must be >= 2");
    if (cfg.bins < 1) throw ValidationError("bins", "bins must be >= 1");
    if (cfg.threads < 0) throw ValidationError("threads", "threads must be >= 0");
    if (cfg.sv_dim < 1) throw ValidationError("sv_dim", "sv_dim must be >= 1");
    if (std::abs(cfg.sv_phi) >= 1.0)
        throw ValidationError("sv_phi", "|sv_phi| must be < 1");
    for (int m : cfg.m_list)
        if (m < 1) throw ValidationError("m_list", "m_list entries must be >= 1");
}

/// Parse a flat `key = value` config file (UTF-8, '#' comments, blank lines
/// ignored) and apply flag overrides on top; overrides win. An empty path
/// yields the defaults. Structural problems raise ParseError with the line
/// number; semantic problems raise ValidationError naming the key.
inline ExperimentConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    ExperimentConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ParseError(0, "cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string body = detail::trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ParseError(lineno, "expected 'key = value', got '" + body + "'");
            const std::string key = detail::trim(body.substr(0, eq));
            const std::string value = detail::trim(body.substr(eq + 1));
            if (key.empty()) throw ParseError(lineno, "missing key before '='");
            try {
                detail::apply_key(cfg, key, value);
            } catch (const ValidationError& e) {
                throw ParseError(lineno, e.what());
            }
        }
    }
    for (const auto& [key, value] : overrides) detail::apply_key(cfg, key, value);
    validate_config(cfg);
    return cfg;
}

}  // namespace smckit
