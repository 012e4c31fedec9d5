// params.hpp: physical and numerical parameters of the feedback-loop model

#pragma once

#include <stdexcept>
#include <string>

namespace fbqt {

/// Invalid user input: bad parameter values, malformed config, unknown keys.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while integrating a trajectory (non-finite amplitudes, impossible projections).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A projection left no amplitude behind. The ensemble driver retries these with a fresh seed.
class ZeroNormError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

enum class FeedbackMode {
    Loop,       // mirror-terminated waveguide, emission into the loop returns after tau
    Markovian,  // loop coupling replaced by a Markovian jump sqrt(gamma_L) sigma^-
};

/// All rates are in the same (arbitrary) inverse-time unit; outputs use gamma = gamma_L + gamma_R.
struct ModelParams {
    double gamma_L{0.5};      // emission into the loop
    double gamma_R{0.5};      // emission toward the output
    double gamma0{0.0};       // off-chip decay
    double gamma_prime{0.0};  // pure dephasing
    double Omega{0.0};        // Rabi frequency
    double delta{0.0};        // TLS minus laser frequency
    double phi{0.0};          // round-trip phase, kept in [0, 2pi)
    double tau{0.1};          // round-trip delay
    int n_bins{10};
    FeedbackMode feedback{FeedbackMode::Loop};

    double dt() const noexcept { return tau / n_bins; }
    double gamma() const noexcept { return gamma_L + gamma_R; }
};

/// Upper bound on dt * (gamma_L + gamma_R); beyond it a bin may hold more than one photon.
inline constexpr double kMaxCouplingPerStep = 0.1;

/// Throws ConfigError if any invariant is violated.
void validate(const ModelParams& p);

/// Returns a copy with phi reduced to [0, 2pi), after validating.
ModelParams validated(ModelParams p);

double reduce_phase(double phi) noexcept;

std::string to_string(FeedbackMode mode);
FeedbackMode feedback_mode_from_string(const std::string& s);

} // namespace fbqt
