// commands.hpp: the work behind each CLI subcommand

#pragma once

#include "fbqt/config.hpp"
#include "fbqt/output.hpp"
#include "fbqt/validate.hpp"

#include <string>
#include <vector>

namespace fbqt {

enum class Command { Flux, LoopProb, Wtd, G2, G1, Spectrum, Sweep, Validate };

Command command_from_string(const std::string& name);
std::string to_string(Command command);
const std::vector<std::string>& command_names();

/// Runs one ensemble command, writing CSV files into config.out_dir and filling the
/// manifest (which the caller writes). Exceptions propagate; the manifest stays usable.
void run_command(Command command, const RunConfig& config, RunManifest& manifest);

struct SweepPoint {
    double value{0.0};
    bool ok{false};
    std::string error;
    double t_ss{0.0};
    bool settled{true};  // false: flux never settled, t_ss fell back to t_end / 2
    double g2_dt{0.0}, g2_dt_se{0.0};
    double flux{0.0}, flux_se{0.0};
    double p0{0.0}, p1{0.0}, p2{0.0};
    double p1_se{0.0}, p2_se{0.0};
    std::int64_t aborted_attempts{0};
    std::vector<std::uint64_t> seeds;
};

/// One ensemble per sweep value. Per-point failures are recorded, not thrown. A point whose
/// flux never settles (long-lived coherent oscillation) is averaged over the second half of the run.
std::vector<SweepPoint> run_sweep(const RunConfig& config);

/// Returns the number of failed checks.
int run_validate_command(const ValidationOptions& options, const RunConfig& config, RunManifest& manifest);

} // namespace fbqt
