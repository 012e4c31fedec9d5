#include "fbqt/commands.hpp"

#include "fbqt/correlations.hpp"
#include "fbqt/ensemble.hpp"
#include "fbqt/observables.hpp"

#include <cmath>
#include <filesystem>

namespace fbqt {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, Command>>& command_table() {
    static const std::vector<std::pair<std::string, Command>> table = {
        {"flux", Command::Flux},   {"loopprob", Command::LoopProb}, {"wtd", Command::Wtd},
        {"g2", Command::G2},       {"g1", Command::G1},             {"spectrum", Command::Spectrum},
        {"sweep", Command::Sweep}, {"validate", Command::Validate},
    };
    return table;
}

bool wants_csv(const RunConfig& c) {
    for (const std::string& f : c.formats)
        if (f == "csv") return true;
    return false;
}

struct Writer {
    const RunConfig& config;
    RunManifest& manifest;

    fs::path path(const std::string& name) const { return fs::path(config.out_dir) / name; }

    void series(const std::string& name, const std::string& axis, const EnsembleSeries& s) {
        if (!wants_csv(config)) return;
        write_series_csv(path(name), axis, s);
        manifest.files.push_back(name);
    }
    void correlation(const std::string& name, const CorrelationSeries& s) {
        if (!wants_csv(config)) return;
        write_correlation_csv(path(name), s);
        manifest.files.push_back(name);
    }
};

void record(RunManifest& m, const TrajectoryBookkeeping& b, std::int64_t n) {
    m.seeds = b.seeds;
    m.aborted_attempts = b.aborted_attempts;
    m.n_trajectories = n;
}

// Mean of the series from the first time >= t_from on, with the mean per-step error.
std::pair<double, double> tail_average(const EnsembleSeries& s, double t_from) {
    Eigen::Index first = 0;
    while (first < s.size() && s.times(first) < t_from - 1e-12) ++first;
    if (first >= s.size()) first = s.size() - 1;
    const Eigen::Index count = s.size() - first;
    return {s.mean.tail(count).mean(), s.std_error.tail(count).mean()};
}

void try_steady_state(const RunConfig& c, const EnsembleSeries& flux, nlohmann::json& extra) {
    try {
        const double t_ss = detect_steady_state(flux, c.rel_tol, c.ss_window);
        const auto [mean, se] = tail_average(flux, t_ss);
        extra["t_ss"] = t_ss;
        extra["steady_flux"] = mean;
        extra["steady_flux_se"] = se;
    } catch (const SimulationError& e) {
        extra["t_ss"] = nullptr;
        extra["steady_state_note"] = e.what();
    }
}

void run_series_command(Command command, const RunConfig& c, RunManifest& m) {
    const Propagator prop(c.model);
    EnsembleSettings s = c.ensemble_settings();
    if (command == Command::LoopProb) s.observables.loop_probabilities = true;
    s.observables.flux = true;
    if (command == Command::Wtd) s.keep_events = true;
    const EnsembleResult run = run_series_ensemble(prop, s);
    record(m, run.bookkeeping, s.n_trajectories);
    Writer w{c, m};
    try_steady_state(c, run.flux, m.extra);

    switch (command) {
    case Command::Flux:
        w.series("flux.csv", "time", run.flux);
        w.series("detection_rate.csv", "time", run.detection_rate);
        if (s.observables.tls_population) w.series("tls_population.csv", "time", run.tls_population);
        break;
    case Command::LoopProb:
        w.series("p0.csv", "time", run.p0);
        w.series("p1.csv", "time", run.p1);
        w.series("p2.csv", "time", run.p2);
        if (m.extra.contains("t_ss") && !m.extra["t_ss"].is_null()) {
            const double t_ss = m.extra["t_ss"].get<double>();
            m.extra["steady_p0"] = tail_average(run.p0, t_ss).first;
            m.extra["steady_p1"] = tail_average(run.p1, t_ss).first;
            m.extra["steady_p2"] = tail_average(run.p2, t_ss).first;
        }
        break;
    case Command::Wtd: {
        const double width = c.wtd_bin_width > 0.0 ? c.wtd_bin_width : 5.0 * prop.dt();
        const WtdHistogram hist = waiting_time_distribution(run.events, prop.dt(), width);
        m.extra["wtd_bin_width"] = hist.bin_width;
        m.extra["wtd_events"] = hist.n_events;
        m.extra["wtd_valid"] = hist.valid;
        if (wants_csv(c)) {
            write_wtd_csv(w.path("wtd.csv"), hist);
            m.files.push_back("wtd.csv");
        }
        break;
    }
    default: break;
    }
}

void run_correlation_command(Command command, const RunConfig& c, RunManifest& m) {
    const Propagator prop(c.model);
    const CorrelationSettings s = c.correlation_settings();
    Writer w{c, m};
    if (command == Command::G2) {
        const G2Result r = g2_ensemble(prop, s);
        record(m, r.bookkeeping, s.n_trajectories);
        m.skipped = r.g2.skipped;
        m.extra["t_ss"] = r.t_ss;
        m.extra["steady_bin_population"] = r.steady_population;
        if (r.g2.values.size() > 1) {
            m.extra["g2_dt"] = r.g2.values(1).real();
            m.extra["g2_dt_se"] = r.g2.std_error(1);
        }
        w.correlation("g2.csv", r.g2);
        w.correlation("G2.csv", r.G2);
        return;
    }

    const G1Result r = g1_ensemble(prop, s);
    record(m, r.bookkeeping, s.n_trajectories);
    m.skipped = r.follower_vanished;
    m.extra["t_ss"] = r.t_ss;
    m.extra["coherent_amplitude"] = {r.coherent_amplitude.real(), r.coherent_amplitude.imag()};
    m.extra["follower_vanished"] = r.follower_vanished;
    w.correlation("G1.csv", r.G1);
    if (command == Command::G1) {
        w.correlation("g1.csv", g1_normalized(r.G1, r.lead_population));
        w.series("lead_population.csv", "delay", r.lead_population);
        return;
    }
    const SpectrumSeries spec = incoherent_spectrum(r.G1, r.coherent_amplitude, prop.dt(),
                                                    symmetric_grid(c.omega_max, c.omega_points), c.window);
    m.extra["coherent_term"] = spec.coherent_term;
    m.extra["taper_time"] = spec.taper_time;
    m.extra["plateau_reached"] = spec.plateau_reached;
    if (wants_csv(c)) {
        write_spectrum_csv(w.path("spectrum.csv"), spec);
        m.files.push_back("spectrum.csv");
    }
}

std::string fmt(double v) { return format_double(v); }

} // namespace

Command command_from_string(const std::string& name) {
    for (const auto& [n, cmd] : command_table())
        if (n == name) return cmd;
    throw ConfigError("unknown command '" + name + "'");
}

std::string to_string(Command command) {
    for (const auto& [n, cmd] : command_table())
        if (cmd == command) return n;
    return "unknown";
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& entry : command_table()) out.push_back(entry.first);
        return out;
    }();
    return names;
}

std::vector<SweepPoint> run_sweep(const RunConfig& config) {
    if (config.sweep.values.empty()) throw ConfigError("sweep.values is empty");
    if (config.sweep.parameter.empty()) throw ConfigError("sweep.parameter is not set");

    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < config.sweep.values.size(); ++i) {
        SweepPoint pt;
        pt.value = config.sweep.values[i];
        try {
            const ModelParams model = with_parameter(config.model, config.sweep, pt.value);
            const Propagator prop(model);
            const std::uint64_t point_seed = trajectory_seed(config.master_seed, i);

            EnsembleSettings es = config.ensemble_settings();
            es.master_seed = point_seed;
            es.observables = {.flux = true, .tls_population = false, .loop_probabilities = true};
            const EnsembleResult run = run_series_ensemble(prop, es);
            if (config.t_ss > 0.0) {
                pt.t_ss = config.t_ss;
            } else {
                try {
                    pt.t_ss = detect_steady_state(run.flux, config.rel_tol, config.ss_window);
                } catch (const SimulationError&) {
                    pt.t_ss = steps_for(0.5 * config.t_end, prop.dt()) * prop.dt();
                    pt.settled = false;
                }
            }
            std::tie(pt.flux, pt.flux_se) = tail_average(run.flux, pt.t_ss);
            pt.p0 = tail_average(run.p0, pt.t_ss).first;
            std::tie(pt.p1, pt.p1_se) = tail_average(run.p1, pt.t_ss);
            std::tie(pt.p2, pt.p2_se) = tail_average(run.p2, pt.t_ss);

            CorrelationSettings cs = config.correlation_settings();
            cs.master_seed = splitmix64(point_seed);
            cs.t_ss = pt.t_ss;
            cs.t2_max = std::max(config.t2_max, prop.dt());
            const G2Result g2 = g2_ensemble(prop, cs);
            pt.g2_dt = g2.g2.values(1).real();
            pt.g2_dt_se = g2.g2.std_error(1);
            pt.aborted_attempts = run.bookkeeping.aborted_attempts + g2.bookkeeping.aborted_attempts;
            pt.seeds = run.bookkeeping.seeds;
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        points.push_back(std::move(pt));
    }
    return points;
}

void run_command(Command command, const RunConfig& config, RunManifest& manifest) {
    validate(config);
    manifest.command = to_string(command);
    manifest.config = to_key_values(config);
    switch (command) {
    case Command::Flux:
    case Command::LoopProb:
    case Command::Wtd: run_series_command(command, config, manifest); break;
    case Command::G2:
    case Command::G1:
    case Command::Spectrum: run_correlation_command(command, config, manifest); break;
    case Command::Sweep: {
        const std::vector<SweepPoint> points = run_sweep(config);
        std::vector<std::vector<std::string>> rows;
        nlohmann::json per_point = nlohmann::json::array();
        std::int64_t failed = 0;
        for (const SweepPoint& p : points) {
            rows.push_back({fmt(p.value), p.ok ? "1" : "0", p.settled ? "1" : "0", fmt(p.t_ss), fmt(p.g2_dt), fmt(p.g2_dt_se), fmt(p.flux),
                            fmt(p.flux_se), fmt(p.p0), fmt(p.p1), fmt(p.p1_se), fmt(p.p2), fmt(p.p2_se)});
            nlohmann::json jp = {{"value", p.value}, {"ok", p.ok}, {"settled", p.settled}, {"aborted_attempts", p.aborted_attempts},
                                 {"seeds", p.seeds}};
            if (!p.ok) {
                jp["error"] = p.error;
                ++failed;
            }
            manifest.aborted_attempts += p.aborted_attempts;
            per_point.push_back(jp);
        }
        manifest.n_trajectories = config.n_trajectories;
        manifest.extra["sweep_parameter"] = config.sweep.parameter;
        manifest.extra["failed_points"] = failed;
        manifest.extra["points"] = per_point;
        if (wants_csv(config)) {
            write_table_csv(fs::path(config.out_dir) / "sweep.csv",
                            {config.sweep.parameter, "ok", "settled", "t_ss", "g2_dt", "g2_dt_se", "flux", "flux_se", "p0",
                             "p1", "p1_se", "p2", "p2_se"},
                            rows);
            manifest.files.push_back("sweep.csv");
        }
        break;
    }
    case Command::Validate: throw std::logic_error("validate is run through run_validate_command");
    }
}

int run_validate_command(const ValidationOptions& options, const RunConfig& config, RunManifest& manifest) {
    manifest.command = "validate";
    manifest.config = to_key_values(config);
    const std::vector<CheckResult> results = run_validation(options);
    int failed = 0;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json checks = nlohmann::json::array();
    for (const CheckResult& r : results) {
        if (!r.passed) ++failed;
        rows.push_back({r.name, r.passed ? "pass" : "fail", fmt(r.seconds), "\"" + r.detail + "\""});
        checks.push_back({{"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds}, {"detail", r.detail}});
    }
    manifest.extra["checks"] = checks;
    manifest.extra["failed"] = failed;
    manifest.extra["shift_fault"] = options.fault == ShiftFault::OffByOne ? "off_by_one" : "none";
    manifest.status = failed ? "validation_failed" : "ok";
    if (wants_csv(config)) {
        write_table_csv(fs::path(config.out_dir) / "validation.csv", {"check", "result", "seconds", "detail"}, rows);
        manifest.files.push_back("validation.csv");
    }
    return failed;
}

} // namespace fbqt
