// output.hpp: CSV series and the JSON run manifest

#pragma once

#include "fbqt/config.hpp"
#include "fbqt/correlations.hpp"
#include "fbqt/ensemble.hpp"
#include "fbqt/observables.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fbqt {

inline constexpr const char* kCodeVersion = "1.0.0";

/// Shortest round-trip decimal form; identical inputs give identical bytes.
std::string format_double(double v);

/// Header "<axis>,mean,std_error".
void write_series_csv(const std::filesystem::path& path, const std::string& axis, const EnsembleSeries& series);

/// Real kinds: "delay,mean,std_error". Complex kinds add "mean_imag".
void write_correlation_csv(const std::filesystem::path& path, const CorrelationSeries& series);

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumSeries& spectrum);

/// "delay,mean,std_error" with bin centres, normalized counts and their Poisson errors.
void write_wtd_csv(const std::filesystem::path& path, const WtdHistogram& histogram);

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

struct RunManifest {
    std::string command;
    std::string preset;
    KeyValues config;
    std::vector<std::uint64_t> seeds;
    std::int64_t n_trajectories{0};
    std::int64_t aborted_attempts{0};
    std::int64_t skipped{0};
    std::string started_utc;
    double wall_seconds{0.0};
    std::vector<std::string> files;
    std::string status{"ok"};
    std::string error;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

std::string utc_timestamp();

} // namespace fbqt
