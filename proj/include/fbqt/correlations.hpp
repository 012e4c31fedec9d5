// correlations.hpp: steady-state output correlations and the incoherent spectrum
//
// g2 uses a forced detection of the output bin at t_ss followed by ordinary
// evolution. G1 forks a follower B_0|psi> off the lead trajectory at t_ss; the
// follower replays every jump, projection and renormalization of the lead.

#pragma once

#include "fbqt/dynamics.hpp"
#include "fbqt/ensemble.hpp"
#include "fbqt/observables.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace fbqt {

enum class CorrelationKind { G1, g1, G2, g2 };

const char* to_string(CorrelationKind kind);

struct CorrelationSeries {
    CorrelationKind kind{CorrelationKind::g2};
    Eigen::VectorXd delays;     // t2 = k dt, k = 0..K
    Eigen::VectorXcd values;    // imaginary part is zero for G2 and g2
    Eigen::VectorXd std_error;  // for complex values: sqrt(se_re^2 + se_im^2)
    std::int64_t n_trajectories{0};
    std::int64_t skipped{0};    // trajectories whose forced operation left no amplitude
};

/// Normalizations of the g2 ensemble mean. Weighted divides the mean of
/// <B0^dag B0>_pre * G2(t2) by the squared steady bin population; PerTrajectory
/// averages the renormalized G2(t2) and divides by the population once.
enum class G2Estimator { Weighted, PerTrajectory };

enum class Apodization { Exponential, None };

struct CorrelationSettings {
    std::int64_t n_trajectories{1000};
    std::uint64_t master_seed{1};
    int threads{1};
    double t_ss{-1.0};  // negative: detect from a pilot ensemble
    double t2_max{10.0};
    G2Estimator estimator{G2Estimator::Weighted};
    double abort_tolerance{1e-3};

    // pilot run for t_ss
    std::int64_t pilot_trajectories{500};
    double pilot_t_end{30.0};
    double rel_tol{0.02};
    double window{2.0};
};

/// Runs the pilot ensemble and returns the detected steady-state time.
double find_steady_state(const Propagator& prop, const CorrelationSettings& settings);

struct G2Trajectory {
    double weight{0.0};          // <B0^dag B0> at t_ss, just before the forced detection
    Eigen::VectorXd population;  // <B0^dag B0>(t2) of the renormalized post-detection state
    bool forced_detection_failed{false};
};

G2Trajectory g2_trajectory(const Propagator& prop, double t_ss, double t2_max, std::uint64_t seed);

struct G2Result {
    CorrelationSeries g2;
    CorrelationSeries G2;         // unnormalized: mean weight * population
    double steady_population{0};  // <B0^dag B0>_ss from the same trajectories
    double t_ss{0.0};
    TrajectoryBookkeeping bookkeeping;
};

/// Throws SimulationError for zero steady-state flux (g2 undefined).
G2Result g2_ensemble(const Propagator& prop, const CorrelationSettings& settings);

struct G1Trajectory {
    Eigen::VectorXcd G1;               // <lead|B0^dag|follower>, after step 1 of each step
    Eigen::VectorXd lead_population;   // <B0^dag B0> on the lead at the same points
    Eigen::VectorXcd lead_coherence;   // <B0> on the lead at the same points
    bool follower_vanished{false};     // lead projection annihilated the follower
};

G1Trajectory g1_trajectory(const Propagator& prop, double t_ss, double t2_max, std::uint64_t seed);

struct G1Result {
    CorrelationSeries G1;
    EnsembleSeries lead_population;
    cd coherent_amplitude{0.0};  // <B0>_ss, averaged over the lead window
    double t_ss{0.0};
    std::int64_t follower_vanished{0};
    TrajectoryBookkeeping bookkeeping;
};

G1Result g1_ensemble(const Propagator& prop, const CorrelationSettings& settings);

/// g1(t2) = G1(t2) / sqrt(N(t2) N(0)). Throws SimulationError on a vanishing denominator.
CorrelationSeries g1_normalized(const CorrelationSeries& G1, const EnsembleSeries& lead_population);

struct SpectrumSeries {
    Eigen::VectorXd detunings;  // omega - omega_L
    Eigen::VectorXd values;
    Eigen::VectorXd std_error;  // bound: per-delay errors added as if fully correlated
    Apodization window{Apodization::Exponential};
    double taper_time{0.0};
    double coherent_term{0.0};  // |<B0>_ss|^2 subtracted from G1
    bool plateau_reached{true};
};

/// Grid of `points` values spaced evenly over [-omega_max, omega_max].
Eigen::VectorXd symmetric_grid(double omega_max, Eigen::Index points);

/// 2 Re of the one-sided transform of [G1(t2) - |<B0>|^2] / dt with kernel e^{-i w t2},
/// so a line at detuning +delta in the rotating frame appears at omega - omega_L = +delta.
/// The exponential taper has time constant t2_max / 5.
SpectrumSeries incoherent_spectrum(const CorrelationSeries& G1, cd coherent_amplitude, double dt,
                                   const Eigen::VectorXd& detunings, Apodization window = Apodization::Exponential);

struct PhaseMatchPrediction {
    std::vector<double> destructive_phases;  // phi with Omega tau / 2 - phi = (2k-1) pi, both dressing signs
    std::vector<double> constructive_phases;
    bool complete_interference{false};       // Omega tau is a multiple of 2 pi
    std::vector<double> resonances_angular;  // (2 pi k + phi) / tau
    std::vector<double> resonances_ordinary; // (2 pi k + phi) / (2 pi tau)
};

PhaseMatchPrediction phase_match_predictor(const ModelParams& params, int max_order = 3);

/// Distance between two phases on the circle, in [0, pi].
double phase_distance(double a, double b) noexcept;

} // namespace fbqt
