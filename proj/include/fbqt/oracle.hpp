// oracle.hpp: deterministic references used only for validation
//
// A dense Lindblad solver for the TLS without feedback (with quantum-regression
// correlations), and an unconditional density-matrix version of the collision
// model for small loops.

#pragma once

#include "fbqt/basis.hpp"
#include "fbqt/params.hpp"
#include "fbqt/state.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace fbqt {

using DensityMatrix = Eigen::MatrixXcd;

/// Superoperator acting on column-stacked 2x2 density matrices, basis (g, e).
/// Channels: sqrt(gamma_L + gamma_R) sigma^-, sqrt(gamma0) sigma^-, sqrt(gamma') sigma^+ sigma^-.
Eigen::Matrix4cd tls_liouvillian(const ModelParams& params);

DensityMatrix lindblad_evolve(const DensityMatrix& rho0, const ModelParams& params, double t);

/// Null vector of the Liouvillian with unit trace.
DensityMatrix lindblad_steady_state(const ModelParams& params);

/// rho_ee at times k dt, k = 1..n_steps, from the ground state.
Eigen::VectorXd lindblad_excited_series(const ModelParams& params, double dt, std::int64_t n_steps);

struct RegressionCorrelations {
    Eigen::VectorXd delays;
    Eigen::VectorXcd dipole_G1;  // <sigma^+(t2) sigma^-(0)>_ss, the ordering the lead/follower pair samples
    Eigen::VectorXd dipole_G2;   // <sigma^+(0) sigma^+(t2) sigma^-(t2) sigma^-(0)>_ss
    Eigen::VectorXcd g1;
    Eigen::VectorXd g2;
    double excited{0.0};         // rho_ee at steady state
    cd coherence{0.0};           // <sigma^-> at steady state
};

/// Steady-state dipole correlations at delays k dt, k = 0..ceil(t2_max / dt). The output
/// field of the Markovian model is proportional to sigma^-, so g1 and g2 carry over directly.
RegressionCorrelations regression_correlations(const ModelParams& params, double t2_max, double dt);

inline constexpr int kOracleMaxBins = 8;

/// H_eff over the full truncated basis, assembled from ladder operators.
Eigen::MatrixXcd dense_effective_hamiltonian(const Basis& basis, const ModelParams& params);

/// Annihilator of bin j over the full truncated basis.
Eigen::MatrixXcd dense_bin_annihilator(const Basis& basis, int j);

struct CollisionOracleSeries {
    Eigen::VectorXd times;  // (s + 1) dt
    Eigen::VectorXd flux;   // after the coherent step, as in the trajectory engine
    Eigen::VectorXd tls_population;
    Eigen::VectorXd p0, p1, p2;
    Eigen::VectorXd purity;
};

/// Correlations regressed through the collision map itself: the lead/follower and
/// forced-detection protocols averaged exactly, at the engine's step size.
struct CollisionCorrelations {
    Eigen::VectorXd delays;
    Eigen::VectorXcd G1;  // <B0^dag(t2) B0(0)>
    Eigen::VectorXd G2;
    Eigen::VectorXd g2;
    Eigen::VectorXcd g1;
    Eigen::VectorXd lead_population;  // <B0^dag B0> at the same points
    double steady_population{0.0};
    cd coherence{0.0};                // <B0> at t_ss
};

/// Unconditional collision model on the TLS x loop density matrix. Per step: exp(-i H_eff dt)
/// plus dt C rho C^dag for the TLS channels, trace renormalization, bin-0 trace-out, relabel.
class CollisionOracle {
public:
    explicit CollisionOracle(const ModelParams& params);

    const Basis& basis() const noexcept { return basis_; }
    const DensityMatrix& state() const noexcept { return rho_; }

    /// Advances one step; returns <B0^dag B0> before the trace-out.
    double step();

    CollisionOracleSeries run(double t_end);

    /// Restarts from the initial state, runs to t_ss and regresses out to t2_max.
    CollisionCorrelations correlations(double t_ss, double t2_max);

private:
    DensityMatrix coherent_part(const DensityMatrix& x) const;  // step 1 without renormalization
    DensityMatrix relabel(const DensityMatrix& x) const;        // steps 2 and 3

    ModelParams params_;
    Basis basis_;
    Eigen::MatrixXcd u_;
    Eigen::MatrixXcd b0_;
    Eigen::MatrixXcd shift_empty_;     // relabel after the no-detection projection
    Eigen::MatrixXcd shift_detected_;  // relabel after B0
    Eigen::MatrixXcd lowering_;    // sigma^-
    Eigen::MatrixXcd excited_;     // sigma^+ sigma^-
    DensityMatrix rho_;
};

} // namespace fbqt
