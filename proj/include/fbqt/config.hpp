// config.hpp: run configuration from flat dotted keys
//
// Files hold one `key = value` per line; `#` starts a comment. Numbers accept a
// trailing `pi` factor ("0.4pi", "pi", "-0.5*pi"). Lists are comma separated.

#pragma once

#include "fbqt/correlations.hpp"
#include "fbqt/dynamics.hpp"
#include "fbqt/params.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fbqt {

using KeyValues = std::map<std::string, std::string>;

struct SweepSpec {
    std::string parameter;  // a model key, e.g. "phi" or "tau"
    std::vector<double> values;
    bool keep_dt{true};     // sweeping tau: rescale n_bins so dt stays fixed
};

struct RunConfig {
    ModelParams model;

    std::int64_t n_trajectories{1000};
    double t_end{20.0};
    std::uint64_t master_seed{1};
    int threads{1};
    ObservableSet observables{};
    double abort_tolerance{1e-3};

    // correlations and spectra
    double t_ss{-1.0};
    double t2_max{10.0};
    G2Estimator estimator{G2Estimator::Weighted};
    std::int64_t pilot_trajectories{500};
    double pilot_t_end{30.0};
    double rel_tol{0.02};
    double ss_window{2.0};
    double omega_max{15.0};
    std::int64_t omega_points{601};
    Apodization window{Apodization::Exponential};

    double wtd_bin_width{-1.0};  // negative: 5 dt

    SweepSpec sweep;

    std::string out_dir{"out"};
    std::vector<std::string> formats{"csv", "json"};

    CorrelationSettings correlation_settings() const;
    EnsembleSettings ensemble_settings() const;
};

/// Parses `key = value` lines. Throws ConfigError with the line number on malformed input.
KeyValues parse_key_values(const std::string& text);
KeyValues read_config_file(const std::string& path);

/// Applies keys in order; unknown keys and bad values throw ConfigError.
void apply(RunConfig& config, const KeyValues& values);
void apply_key(RunConfig& config, const std::string& key, const std::string& value);

/// Every key with its current value, in canonical form.
KeyValues to_key_values(const RunConfig& config);

/// Checks the cross-field invariants and the model parameters.
void validate(const RunConfig& config);

double parse_number(const std::string& text);
std::vector<double> parse_number_list(const std::string& text);

/// Model with `parameter` set to `value`; honours SweepSpec::keep_dt for tau.
ModelParams with_parameter(const ModelParams& base, const SweepSpec& sweep, double value);

} // namespace fbqt
