#include "fbqt/output.hpp"

#include "fbqt/params.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

namespace fbqt {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write '" + path.string() + "'");
    return out;
}

void check_lengths(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    if (a != b || a != c) throw std::invalid_argument("series columns differ in length");
}

} // namespace

void write_series_csv(const std::filesystem::path& path, const std::string& axis, const EnsembleSeries& series) {
    check_lengths(series.times.size(), series.mean.size(), series.std_error.size());
    std::ofstream out = open_for_write(path);
    out << axis << ",mean,std_error\n";
    for (Eigen::Index i = 0; i < series.times.size(); ++i)
        out << format_double(series.times(i)) << ',' << format_double(series.mean(i)) << ','
            << format_double(series.std_error(i)) << '\n';
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationSeries& series) {
    check_lengths(series.delays.size(), series.values.size(), series.std_error.size());
    const bool complex = series.kind == CorrelationKind::G1 || series.kind == CorrelationKind::g1;
    std::ofstream out = open_for_write(path);
    out << "delay,mean,std_error" << (complex ? ",mean_imag" : "") << '\n';
    for (Eigen::Index i = 0; i < series.delays.size(); ++i) {
        out << format_double(series.delays(i)) << ',' << format_double(series.values(i).real()) << ','
            << format_double(series.std_error(i));
        if (complex) out << ',' << format_double(series.values(i).imag());
        out << '\n';
    }
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumSeries& spectrum) {
    check_lengths(spectrum.detunings.size(), spectrum.values.size(), spectrum.std_error.size());
    std::ofstream out = open_for_write(path);
    out << "detuning,mean,std_error\n";
    for (Eigen::Index i = 0; i < spectrum.detunings.size(); ++i)
        out << format_double(spectrum.detunings(i)) << ',' << format_double(spectrum.values(i)) << ','
            << format_double(spectrum.std_error(i)) << '\n';
}

void write_wtd_csv(const std::filesystem::path& path, const WtdHistogram& histogram) {
    std::ofstream out = open_for_write(path);
    out << "delay,mean,std_error\n";
    const double n = static_cast<double>(histogram.n_events);
    for (Eigen::Index i = 0; i < histogram.counts.size(); ++i) {
        const double se = n > 0 ? std::sqrt(histogram.counts(i)) / n : 0.0;
        out << format_double(histogram.bin_center(i)) << ',' << format_double(histogram.normalized(i)) << ','
            << format_double(se) << '\n';
    }
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out = open_for_write(path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["code_version"] = kCodeVersion;
    j["command"] = command;
    j["preset"] = preset;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    j["config"] = config;
    j["n_trajectories"] = n_trajectories;
    j["aborted_attempts"] = aborted_attempts;
    j["skipped"] = skipped;
    j["started_utc"] = started_utc;
    j["wall_seconds"] = wall_seconds;
    j["files"] = files;
    j["seeds"] = seeds;
    j["extra"] = extra;
    return j;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    std::ofstream out = open_for_write(path);
    out << manifest.to_json().dump(2) << '\n';
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace fbqt
