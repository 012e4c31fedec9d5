#include "fbqt/params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fbqt {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace

double reduce_phase(double phi) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

void validate(const ModelParams& p) {
    auto rate = [](double v) { return std::isfinite(v) && v >= 0.0; };
    require(rate(p.gamma_L), "gamma_L must be finite and >= 0");
    require(rate(p.gamma_R), "gamma_R must be finite and >= 0");
    require(rate(p.gamma0), "gamma0 must be finite and >= 0");
    require(rate(p.gamma_prime), "gamma_prime must be finite and >= 0");
    require(std::isfinite(p.Omega), "Omega must be finite");
    require(std::isfinite(p.delta), "delta must be finite");
    require(std::isfinite(p.phi), "phi must be finite");
    require(std::isfinite(p.tau) && p.tau > 0.0, "tau must be finite and > 0");
    require(p.n_bins >= 2, "n_bins must be >= 2");

    const double coupling = p.dt() * p.gamma();
    if (!(coupling < kMaxCouplingPerStep)) {
        std::ostringstream os;
        os << "dt * (gamma_L + gamma_R) = " << coupling << " must be < " << kMaxCouplingPerStep
           << " (increase n_bins or decrease tau)";
        throw ConfigError(os.str());
    }
}

ModelParams validated(ModelParams p) {
    validate(p);
    p.phi = reduce_phase(p.phi);
    return p;
}

std::string to_string(FeedbackMode mode) {
    return mode == FeedbackMode::Loop ? "loop" : "markovian";
}

FeedbackMode feedback_mode_from_string(const std::string& s) {
    if (s == "loop" || s == "true" || s == "on") return FeedbackMode::Loop;
    if (s == "markovian" || s == "none" || s == "false" || s == "off") return FeedbackMode::Markovian;
    throw ConfigError("unknown feedback mode '" + s + "' (expected loop or markovian)");
}

} // namespace fbqt
