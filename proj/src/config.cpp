#include "fbqt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace fbqt {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::string body = trim(text);
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

std::int64_t parse_integer(const std::string& text) {
    const std::string s = trim(text);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("expected an integer, got '" + text + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& text) {
    const std::string s = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError("expected an unsigned integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& text) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected a boolean, got '" + text + "'");
}

std::string model_key(const std::string& name) {
    return name.rfind("model.", 0) == 0 ? name.substr(6) : name;
}

} // namespace

double parse_number(const std::string& text) {
    std::string s = trim(text);
    double factor = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        s = trim(s.substr(0, s.size() - 2));
        if (!s.empty() && s.back() == '*') s = trim(s.substr(0, s.size() - 1));
        if (s.empty() || s == "+") return factor;
        if (s == "-") return -factor;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("expected a number, got '" + text + "'");
    return v * factor;
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& item : split_list(text)) out.push_back(parse_number(item));
    return out;
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << line_no << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            std::ostringstream os;
            os << "line " << line_no << ": empty key";
            throw ConfigError(os.str());
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_key_values(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.gamma_L", [](RunConfig& c, const std::string& v) { c.model.gamma_L = parse_number(v); }},
        {"model.gamma_R", [](RunConfig& c, const std::string& v) { c.model.gamma_R = parse_number(v); }},
        {"model.gamma0", [](RunConfig& c, const std::string& v) { c.model.gamma0 = parse_number(v); }},
        {"model.gamma_prime", [](RunConfig& c, const std::string& v) { c.model.gamma_prime = parse_number(v); }},
        {"model.Omega", [](RunConfig& c, const std::string& v) { c.model.Omega = parse_number(v); }},
        {"model.delta", [](RunConfig& c, const std::string& v) { c.model.delta = parse_number(v); }},
        {"model.phi", [](RunConfig& c, const std::string& v) { c.model.phi = parse_number(v); }},
        {"model.tau", [](RunConfig& c, const std::string& v) { c.model.tau = parse_number(v); }},
        {"model.n_bins", [](RunConfig& c, const std::string& v) { c.model.n_bins = static_cast<int>(parse_integer(v)); }},
        {"model.feedback", [](RunConfig& c, const std::string& v) { c.model.feedback = feedback_mode_from_string(trim(v)); }},

        {"run.n_trajectories", [](RunConfig& c, const std::string& v) { c.n_trajectories = parse_integer(v); }},
        {"run.t_end", [](RunConfig& c, const std::string& v) { c.t_end = parse_number(v); }},
        {"run.seed", [](RunConfig& c, const std::string& v) { c.master_seed = parse_unsigned(v); }},
        {"run.threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<int>(parse_integer(v)); }},
        {"run.abort_tolerance", [](RunConfig& c, const std::string& v) { c.abort_tolerance = parse_number(v); }},
        {"run.observables",
         [](RunConfig& c, const std::string& v) {
             ObservableSet obs{false, false, false};
             for (const std::string& item : split_list(v)) {
                 if (item == "flux")
                     obs.flux = true;
                 else if (item == "tls" || item == "tls_population")
                     obs.tls_population = true;
                 else if (item == "loop" || item == "loop_probabilities")
                     obs.loop_probabilities = true;
                 else
                     throw ConfigError("unknown observable '" + item + "' (flux, tls, loop)");
             }
             c.observables = obs;
         }},

        {"correlation.t_ss", [](RunConfig& c, const std::string& v) { c.t_ss = parse_number(v); }},
        {"correlation.t2_max", [](RunConfig& c, const std::string& v) { c.t2_max = parse_number(v); }},
        {"correlation.estimator",
         [](RunConfig& c, const std::string& v) {
             const std::string s = trim(v);
             if (s == "weighted")
                 c.estimator = G2Estimator::Weighted;
             else if (s == "per_trajectory")
                 c.estimator = G2Estimator::PerTrajectory;
             else
                 throw ConfigError("unknown g2 estimator '" + s + "' (weighted, per_trajectory)");
         }},
        {"correlation.pilot_trajectories", [](RunConfig& c, const std::string& v) { c.pilot_trajectories = parse_integer(v); }},
        {"correlation.pilot_t_end", [](RunConfig& c, const std::string& v) { c.pilot_t_end = parse_number(v); }},
        {"correlation.rel_tol", [](RunConfig& c, const std::string& v) { c.rel_tol = parse_number(v); }},
        {"correlation.ss_window", [](RunConfig& c, const std::string& v) { c.ss_window = parse_number(v); }},
        {"correlation.omega_max", [](RunConfig& c, const std::string& v) { c.omega_max = parse_number(v); }},
        {"correlation.omega_points", [](RunConfig& c, const std::string& v) { c.omega_points = parse_integer(v); }},
        {"correlation.window",
         [](RunConfig& c, const std::string& v) {
             const std::string s = trim(v);
             if (s == "exponential")
                 c.window = Apodization::Exponential;
             else if (s == "none")
                 c.window = Apodization::None;
             else
                 throw ConfigError("unknown window '" + s + "' (exponential, none)");
         }},

        {"wtd.bin_width", [](RunConfig& c, const std::string& v) { c.wtd_bin_width = parse_number(v); }},

        {"sweep.parameter", [](RunConfig& c, const std::string& v) { c.sweep.parameter = model_key(trim(v)); }},
        {"sweep.values", [](RunConfig& c, const std::string& v) { c.sweep.values = parse_number_list(v); }},
        {"sweep.keep_dt", [](RunConfig& c, const std::string& v) { c.sweep.keep_dt = parse_bool(v); }},

        {"output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = trim(v); }},
        {"output.formats",
         [](RunConfig& c, const std::string& v) {
             c.formats = split_list(v);
             for (const std::string& f : c.formats)
                 if (f != "csv" && f != "json") throw ConfigError("unknown output format '" + f + "' (csv, json)");
         }},
    };
    return table;
}

} // namespace

void apply_key(RunConfig& config, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    try {
        it->second(config, value);
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

void apply(RunConfig& config, const KeyValues& values) {
    for (const auto& [key, value] : values) apply_key(config, key, value);
}

KeyValues to_key_values(const RunConfig& c) {
    KeyValues kv;
    kv["model.gamma_L"] = format_number(c.model.gamma_L);
    kv["model.gamma_R"] = format_number(c.model.gamma_R);
    kv["model.gamma0"] = format_number(c.model.gamma0);
    kv["model.gamma_prime"] = format_number(c.model.gamma_prime);
    kv["model.Omega"] = format_number(c.model.Omega);
    kv["model.delta"] = format_number(c.model.delta);
    kv["model.phi"] = format_number(c.model.phi);
    kv["model.tau"] = format_number(c.model.tau);
    kv["model.n_bins"] = std::to_string(c.model.n_bins);
    kv["model.feedback"] = to_string(c.model.feedback);

    kv["run.n_trajectories"] = std::to_string(c.n_trajectories);
    kv["run.t_end"] = format_number(c.t_end);
    kv["run.seed"] = std::to_string(c.master_seed);
    kv["run.threads"] = std::to_string(c.threads);
    kv["run.abort_tolerance"] = format_number(c.abort_tolerance);
    std::vector<std::string> obs;
    if (c.observables.flux) obs.push_back("flux");
    if (c.observables.tls_population) obs.push_back("tls");
    if (c.observables.loop_probabilities) obs.push_back("loop");
    kv["run.observables"] = join(obs);

    kv["correlation.t_ss"] = format_number(c.t_ss);
    kv["correlation.t2_max"] = format_number(c.t2_max);
    kv["correlation.estimator"] = c.estimator == G2Estimator::Weighted ? "weighted" : "per_trajectory";
    kv["correlation.pilot_trajectories"] = std::to_string(c.pilot_trajectories);
    kv["correlation.pilot_t_end"] = format_number(c.pilot_t_end);
    kv["correlation.rel_tol"] = format_number(c.rel_tol);
    kv["correlation.ss_window"] = format_number(c.ss_window);
    kv["correlation.omega_max"] = format_number(c.omega_max);
    kv["correlation.omega_points"] = std::to_string(c.omega_points);
    kv["correlation.window"] = c.window == Apodization::Exponential ? "exponential" : "none";

    kv["wtd.bin_width"] = format_number(c.wtd_bin_width);

    kv["sweep.parameter"] = c.sweep.parameter;
    std::vector<std::string> values;
    for (double v : c.sweep.values) values.push_back(format_number(v));
    kv["sweep.values"] = join(values);
    kv["sweep.keep_dt"] = c.sweep.keep_dt ? "true" : "false";

    kv["output.dir"] = c.out_dir;
    kv["output.formats"] = join(c.formats);
    return kv;
}

void validate(const RunConfig& c) {
    validate(c.model);
    if (c.n_trajectories < 1) throw ConfigError("run.n_trajectories must be >= 1");
    if (!(c.t_end > 0.0)) throw ConfigError("run.t_end must be > 0");
    if (c.threads < 1) throw ConfigError("run.threads must be >= 1");
    if (!(c.abort_tolerance >= 0.0 && c.abort_tolerance <= 1.0))
        throw ConfigError("run.abort_tolerance must be in [0, 1]");
    if (!(c.t2_max > 0.0)) throw ConfigError("correlation.t2_max must be > 0");
    if (c.pilot_trajectories < 1) throw ConfigError("correlation.pilot_trajectories must be >= 1");
    if (!(c.pilot_t_end > 0.0)) throw ConfigError("correlation.pilot_t_end must be > 0");
    if (!(c.rel_tol > 0.0)) throw ConfigError("correlation.rel_tol must be > 0");
    if (!(c.ss_window > 0.0)) throw ConfigError("correlation.ss_window must be > 0");
    if (!(c.omega_max > 0.0) || c.omega_points < 2)
        throw ConfigError("correlation.omega_max must be > 0 and correlation.omega_points >= 2");
    if (!c.sweep.parameter.empty() || !c.sweep.values.empty()) {
        if (c.sweep.values.empty()) throw ConfigError("sweep.values is empty");
        for (double v : c.sweep.values)
            if (!std::isfinite(v)) throw ConfigError("sweep.values must be finite");
        for (double v : c.sweep.values) validate(with_parameter(c.model, c.sweep, v));
    }
}

ModelParams with_parameter(const ModelParams& base, const SweepSpec& sweep, double value) {
    ModelParams p = base;
    const std::string& name = sweep.parameter;
    if (name == "gamma_L")
        p.gamma_L = value;
    else if (name == "gamma_R")
        p.gamma_R = value;
    else if (name == "gamma0")
        p.gamma0 = value;
    else if (name == "gamma_prime")
        p.gamma_prime = value;
    else if (name == "Omega")
        p.Omega = value;
    else if (name == "delta")
        p.delta = value;
    else if (name == "phi")
        p.phi = value;
    else if (name == "tau") {
        p.tau = value;
        if (sweep.keep_dt) p.n_bins = std::max(2, static_cast<int>(std::lround(value / base.dt())));
    } else if (name == "n_bins") {
        p.n_bins = static_cast<int>(std::lround(value));
    } else {
        throw ConfigError("sweep.parameter '" + name + "' is not a model parameter");
    }
    return p;
}

CorrelationSettings RunConfig::correlation_settings() const {
    CorrelationSettings s;
    s.n_trajectories = n_trajectories;
    s.master_seed = master_seed;
    s.threads = threads;
    s.t_ss = t_ss;
    s.t2_max = t2_max;
    s.estimator = estimator;
    s.abort_tolerance = abort_tolerance;
    s.pilot_trajectories = pilot_trajectories;
    s.pilot_t_end = pilot_t_end;
    s.rel_tol = rel_tol;
    s.window = ss_window;
    return s;
}

EnsembleSettings RunConfig::ensemble_settings() const {
    EnsembleSettings s;
    s.n_trajectories = n_trajectories;
    s.t_end = t_end;
    s.master_seed = master_seed;
    s.threads = threads;
    s.observables = observables;
    s.abort_tolerance = abort_tolerance;
    return s;
}

} // namespace fbqt
