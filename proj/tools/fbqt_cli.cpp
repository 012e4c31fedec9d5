// fbqt: ensemble runs of the feedback-loop trajectory simulator
//
//   fbqt <command> [--preset NAME] [--config FILE] [--set key=value]... [--seed N] [--threads N] [--out DIR]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure, 3 validation failure.

#include "fbqt/commands.hpp"
#include "fbqt/config.hpp"
#include "fbqt/presets.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitValidation = 3;

struct Flags {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::string fault{"none"};
    double scale{1.0};
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config_path, "config file with flat dotted keys");
    sub->add_option("--preset", f.preset, "named parameter bundle (see --list-presets)");
    sub->add_option("--set", f.sets, "override one key, e.g. --set model.phi=pi")->take_all();
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--threads", f.threads, "worker threads (0: all cores)");
    sub->add_option("--out", f.out, "output directory");
}

fbqt::RunConfig resolve(const Flags& f) {
    fbqt::RunConfig config;
    if (!f.preset.empty()) fbqt::apply_preset(config, f.preset);
    if (!f.config_path.empty()) fbqt::apply(config, fbqt::read_config_file(f.config_path));
    for (const std::string& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw fbqt::ConfigError("--set expects key=value, got '" + kv + "'");
        fbqt::apply_key(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.seed) config.master_seed = *f.seed;
    if (f.threads) config.threads = *f.threads == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                                                    : *f.threads;
    if (f.out) config.out_dir = *f.out;
    return config;
}

bool wants_json(const fbqt::RunConfig& c) {
    for (const std::string& f : c.formats)
        if (f == "json") return true;
    return false;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-trajectory simulator for a driven two-level system with time-delayed coherent feedback"};
    app.require_subcommand(0, 1);
    bool list_presets = false;
    app.add_flag("--list-presets", list_presets, "print the available presets and exit");

    Flags flags;
    std::vector<std::pair<CLI::App*, std::string>> subs;
    const std::vector<std::pair<std::string, std::string>> descriptions = {
        {"flux", "output flux, detection rate and TLS population against time"},
        {"loopprob", "probabilities of 0, 1, 2 photons in the loop against time"},
        {"wtd", "waiting-time distribution of output detections"},
        {"g2", "steady-state second-order correlation of the output"},
        {"g1", "steady-state first-order correlation of the output"},
        {"spectrum", "incoherent output spectrum"},
        {"sweep", "g2(dt), steady flux and loop occupancy against one parameter"},
        {"validate", "oracle comparisons and invariant checks"},
    };
    for (const auto& [name, text] : descriptions) {
        CLI::App* sub = app.add_subcommand(name, text);
        add_common(sub, flags);
        if (name == "validate") {
            sub->add_option("--inject-fault", flags.fault, "deliberate defect to check the suite catches it")
                ->check(CLI::IsMember({"none", "shift_off_by_one"}));
            sub->add_option("--scale", flags.scale, "multiplier on validation trajectory counts");
        }
        subs.emplace_back(sub, name);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (list_presets) {
        for (const fbqt::Preset& p : fbqt::presets())
            std::cout << p.name << "  (" << p.command << ")  " << p.description << '\n';
        return 0;
    }

    std::string command_name;
    for (const auto& [sub, name] : subs)
        if (sub->parsed()) command_name = name;
    if (command_name.empty()) {
        std::cout << app.help();
        return kExitConfig;
    }

    fbqt::RunConfig config;
    fbqt::Command command{};
    try {
        command = fbqt::command_from_string(command_name);
        config = resolve(flags);
        if (!flags.preset.empty()) {
            const fbqt::Preset& p = fbqt::find_preset(flags.preset);
            if (p.command != command_name)
                std::cerr << "note: preset " << p.name << " is meant for '" << p.command << "'\n";
        }
        fbqt::validate(config);
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }

    fbqt::RunManifest manifest;
    manifest.preset = flags.preset;
    manifest.started_utc = fbqt::utc_timestamp();
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&](int code) {
        manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (wants_json(config)) {
            try {
                fbqt::write_manifest(std::filesystem::path(config.out_dir) / "manifest.json", manifest);
            } catch (const std::exception& e) {
                std::cerr << "cannot write manifest: " << e.what() << '\n';
                return code == 0 ? kExitRuntime : code;
            }
        }
        return code;
    };

    try {
        if (command == fbqt::Command::Validate) {
            fbqt::ValidationOptions opt;
            if (flags.seed) opt.seed = *flags.seed;
            opt.threads = config.threads;
            opt.trajectory_scale = flags.scale;
            opt.fault = flags.fault == "shift_off_by_one" ? fbqt::ShiftFault::OffByOne : fbqt::ShiftFault::None;
            const int failed = fbqt::run_validate_command(opt, config, manifest);
            for (const auto& check : manifest.extra["checks"])
                std::cout << (check["passed"].get<bool>() ? "PASS " : "FAIL ") << check["name"].get<std::string>()
                          << "  " << check["detail"].get<std::string>() << '\n';
            std::cout << (failed ? "validation failed: " : "validation passed: ") << failed << " failing check(s)\n";
            return finish(failed ? kExitValidation : 0);
        }
        fbqt::run_command(command, config, manifest);
        std::cout << "wrote " << manifest.files.size() << " file(s) to " << config.out_dir << '\n';
        return finish(0);
    } catch (const fbqt::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        manifest.status = "config_error";
        manifest.error = e.what();
        return finish(kExitConfig);
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        manifest.status = "runtime_error";
        manifest.error = e.what();
        return finish(kExitRuntime);
    }
}
