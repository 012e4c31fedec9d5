// observables.hpp: bin populations, flux, loop photon statistics and waiting times

#pragma once

#include "fbqt/basis.hpp"
#include "fbqt/dynamics.hpp"
#include "fbqt/state.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>

namespace fbqt {

/// <B_j^dag B_j>: weight of every configuration with a photon in bin j.
double bin_population(const Basis& basis, const StateVector& psi, int j);

/// Flux through the output bin, bin_population(0) / dt.
double output_flux(const Propagator& prop, const StateVector& psi);

struct LoopProbabilities {
    double p0{0.0};
    double p1{0.0};
    double p2{0.0};
};

LoopProbabilities loop_photon_probabilities(const Basis& basis, const StateVector& psi);

/// <sigma^+ sigma^->.
double tls_population(const StateVector& psi);

/// <psi|B_0|psi>.
cd bin0_coherence(const Basis& basis, const StateVector& psi);

/// B_0 psi: one(0) -> vacuum, two(0,k) -> one(k); everything else is dropped.
StateVector annihilate_bin0(const Basis& basis, const StateVector& psi);

/// <bra| B_0^dag |ket>.
cd bin0_creation_element(const Basis& basis, const StateVector& bra, const StateVector& ket);

struct EnsembleSeries {
    Eigen::VectorXd times;
    Eigen::VectorXd mean;
    Eigen::VectorXd std_error;
    std::int64_t n_trajectories{0};

    Eigen::Index size() const noexcept { return times.size(); }
};

struct WtdHistogram {
    double bin_width{0.0};
    Eigen::VectorXd counts;
    Eigen::VectorXd normalized;  // sums to 1 when valid
    std::int64_t n_events{0};    // number of pooled waiting times
    bool valid{false};

    double bin_center(Eigen::Index i) const noexcept { return (static_cast<double>(i) + 0.5) * bin_width; }
};

/// Pools consecutive-detection delays over all records. `bin_width` must be a whole number of steps.
/// Fewer than two detections in total yields an empty histogram with valid == false.
WtdHistogram waiting_time_distribution(std::span<const EventRecord> records, double dt, double bin_width);

/// Earliest time after which the means of two consecutive windows of length `window`
/// differ by less than rel_tol (relative), and keep doing so for one more window.
/// The returned time is the boundary between the matching windows, rounded up to a step.
/// Throws SimulationError if the series never settles.
double detect_steady_state(const EnsembleSeries& series, double rel_tol, double window);

} // namespace fbqt
