#include "fbqt/presets.hpp"

#include <cmath>

namespace fbqt {

namespace {

std::string scaled(long published) {
    return std::to_string(std::lround(static_cast<double>(published) * kPresetTrajectoryScale));
}

std::vector<Preset> build() {
    // gamma_L = gamma_R = gamma / 2 throughout; times in 1/gamma.
    const std::string common = "model.gamma_L = 0.5\nmodel.gamma_R = 0.5\n";
    const std::string short_loop = "model.tau = 0.1\nmodel.n_bins = 10\n";
    std::vector<Preset> out;

    out.push_back({"fig2", "spectrum", "Mollow triplet with a short loop, phi = pi",
                   common + short_loop +
                       "model.Omega = 2pi\nmodel.phi = pi\n"
                       "run.n_trajectories = " + scaled(20000) + "\nrun.t_end = 20\n"
                       "correlation.t2_max = 10\ncorrelation.omega_max = 15\ncorrelation.omega_points = 601\n"});
    out.push_back({"fig3", "g2", "g2 with a short loop, phi = pi",
                   common + short_loop +
                       "model.Omega = 2pi\nmodel.phi = pi\n"
                       "run.n_trajectories = " + scaled(20000) + "\ncorrelation.t2_max = 6\n"});
    out.push_back({"fig4", "flux", "output flux with off-chip decay, phi = pi",
                   common + short_loop +
                       "model.Omega = 0.4pi\nmodel.phi = pi\nmodel.gamma0 = 0.1\n"
                       "run.n_trajectories = " + scaled(20000) + "\nrun.t_end = 20\nrun.observables = flux,tls\n"});
    out.push_back({"fig5", "spectrum", "detuned, dephased Mollow triplet with a short loop",
                   common + short_loop +
                       "model.Omega = 2pi\nmodel.delta = 5\nmodel.gamma_prime = 0.5\nmodel.phi = pi\n"
                       "run.n_trajectories = " + scaled(20000) + "\n"
                       "correlation.t2_max = 10\ncorrelation.omega_max = 20\ncorrelation.omega_points = 801\n"});
    out.push_back({"fig6", "wtd", "waiting times with a short loop, phi = pi",
                   common + short_loop +
                       "model.Omega = 2pi\nmodel.phi = pi\n"
                       "run.n_trajectories = " + scaled(20000) + "\nrun.t_end = 100\nwtd.bin_width = 0.05\n"});
    out.push_back({"fig7", "sweep", "g2(dt), flux and loop occupancy against the delay time, phi = 0",
                   common +
                       "model.tau = 0.1\nmodel.n_bins = 4\nmodel.Omega = 0.4pi\nmodel.phi = 0\n"
                       "run.n_trajectories = " + scaled(10000) + "\nrun.t_end = 30\n"
                       "correlation.t2_max = 0.1\n"
                       "sweep.parameter = tau\nsweep.values = 0.1,0.25,0.5,0.75,1.0,1.25,1.5,1.75,2.0,2.5\n"});
    out.push_back({"fig8", "loopprob", "loop photon numbers in time, tau = 0.5, phi = pi",
                   common +
                       "model.tau = 0.5\nmodel.n_bins = 20\nmodel.Omega = 0.4pi\nmodel.phi = pi\n"
                       "run.n_trajectories = " + scaled(20000) + "\nrun.t_end = 20\nrun.observables = flux,loop\n"});
    out.push_back({"fig9", "sweep", "g2(dt) against the round-trip phase, tau = 0.5",
                   common +
                       "model.tau = 0.5\nmodel.n_bins = 20\nmodel.Omega = 0.4pi\n"
                       "run.n_trajectories = " + scaled(10000) + "\nrun.t_end = 30\ncorrelation.t2_max = 0.1\n"
                       "sweep.parameter = phi\n"
                       "sweep.values = 0,0.1pi,0.2pi,0.3pi,0.4pi,0.5pi,0.6pi,0.7pi,0.8pi,0.9pi,pi,"
                       "1.1pi,1.2pi,1.3pi,1.4pi,1.5pi,1.6pi,1.7pi,1.8pi,1.9pi\n"});
    out.push_back({"fig10", "spectrum", "loop resonances with a long loop, tau = 2",
                   common +
                       "model.tau = 2\nmodel.n_bins = 40\nmodel.Omega = 2pi\nmodel.phi = 0\n"
                       "run.n_trajectories = " + scaled(20000) + "\n"
                       "correlation.t2_max = 20\ncorrelation.omega_max = 12\ncorrelation.omega_points = 961\n"});
    return out;
}

} // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = build();
    return table;
}

const Preset& find_preset(const std::string& name) {
    for (const Preset& p : presets())
        if (p.name == name) return p;
    std::string known;
    for (const Preset& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

void apply_preset(RunConfig& config, const std::string& name) {
    fbqt::apply(config, parse_key_values(find_preset(name).config_text));
}

} // namespace fbqt
