// dynamics.hpp: one collision-model time step and whole-trajectory execution
//
// A step is: (1) non-Hermitian evolution or a stochastic TLS jump, (2) simulated
// measurement of the output bin 0, (3) shift of every bin one place toward the
// output, (4) renormalization.

#pragma once

#include "fbqt/basis.hpp"
#include "fbqt/params.hpp"
#include "fbqt/rng.hpp"
#include "fbqt/state.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace fbqt {

enum class EventKind : int {
    OffChipJump,
    DephasingJump,
    LoopDecayJump,  // Markovian mode only: the replaced loop channel
    OutputDetection,
};

struct Event {
    std::int64_t step{0};
    EventKind kind{EventKind::OutputDetection};

    friend bool operator==(const Event&, const Event&) = default;
};

using EventRecord = std::vector<Event>;

const char* to_string(EventKind kind);

enum class Integrator {
    BlockExponential,  // exact exp(-i H_eff dt) per spectator block
    RungeKutta4,       // four RK4 substeps per dt on the full vector
};

/// Deliberate defects for mutation testing of the validation suite.
enum class ShiftFault {
    None,
    OffByOne,  // moves every photon two bins per step
};

enum class SubstepBranch : int { NoJump, OffChip, Dephasing, LoopDecay };

struct JumpProbabilities {
    double off_chip{0.0};
    double dephasing{0.0};
    double loop_decay{0.0};

    double total() const noexcept { return off_chip + dephasing + loop_decay; }
};

/// Precomputed per-parameter-set evolution. Immutable after construction, safe to share.
class Propagator {
public:
    explicit Propagator(const ModelParams& params, Integrator integrator = Integrator::BlockExponential,
                        ShiftFault fault = ShiftFault::None);

    const ModelParams& params() const noexcept { return params_; }
    const Basis& basis() const noexcept { return basis_; }
    double dt() const noexcept { return dt_; }
    Integrator integrator() const noexcept { return integrator_; }
    ShiftFault shift_fault() const noexcept { return fault_; }

    /// psi <- exp(-i H_eff dt) psi (unnormalized). Throws SimulationError on non-finite output.
    void evolve_no_jump(StateVector& psi) const;

    /// H_eff restricted to the bins N-1 and 0 for a given number (0, 1, 2) of photons elsewhere.
    /// Local ordering is 2 * slot + tls with slots {empty, bin N-1, bin 0, both}.
    Eigen::MatrixXcd local_hamiltonian(int spectators) const;

private:
    void evolve_blocks(StateVector& psi) const;
    void evolve_rk4(StateVector& psi) const;

    ModelParams params_;
    Basis basis_;
    Integrator integrator_;
    ShiftFault fault_;
    double dt_;

    Eigen::Matrix<cd, 8, 8> u_empty_;
    Eigen::Matrix<cd, 6, 6> u_one_;
    Eigen::Matrix2cd u_two_;
    std::array<Eigen::Index, 8> empty_block_{};
    std::vector<std::array<Eigen::Index, 6>> one_blocks_;
};

/// Returns -i H_eff psi. H_eff holds the detuned drive, the bin couplings
/// sqrt(gamma_L/dt) sigma^+ B_{N-1} + e^{i phi} sqrt(gamma_R/dt) sigma^+ B_0 + h.c.,
/// and -(i/2) sum_j C_j^dag C_j. Terms leaving the truncated space are dropped.
StateVector apply_effective_hamiltonian(const Basis& basis, const ModelParams& params,
                                        const StateVector& psi);

/// Unnormalized exp(-i H_eff dt) psi.
StateVector evolve_no_jump(const Propagator& prop, StateVector psi);

JumpProbabilities jump_probabilities(const Propagator& prop, const StateVector& psi);

struct SubstepResult {
    SubstepBranch branch{SubstepBranch::NoJump};
    double scale{1.0};  // factor applied after the raw jump operator
};

/// Step 1 with a caller-provided uniform variate. Throws SimulationError when the total
/// jump probability reaches 1.
SubstepResult qt_substep(const Propagator& prop, StateVector& psi, double u);

/// Apply a branch chosen elsewhere (follower replay): raw operator, then `scale`.
void apply_substep_branch(const Propagator& prop, StateVector& psi, SubstepBranch branch, double scale);

/// Projects on the outcome of a bin-0 measurement. Detection also annihilates the photon.
void project_output_bin(const Basis& basis, StateVector& psi, bool detected);

/// Step 2: detection with Born probability <B0^dag B0> / <psi|psi>. No renormalization.
bool measure_output_bin(const Basis& basis, StateVector& psi, double u);

/// Step 3: one(j) -> one(j-1), two(j,k) -> two(j-1,k-1); bin N-1 enters empty.
/// Throws SimulationError if bin 0 still carries amplitude above 1e-12.
void shift_bins(const Basis& basis, StateVector& psi);

/// The shift used by the stepping code; honours the propagator's ShiftFault.
void shift_bins(const Propagator& prop, StateVector& psi);

/// Bookkeeping for one step, sufficient to replay it on a follower state.
struct StepTrace {
    SubstepBranch branch{SubstepBranch::NoJump};
    double jump_scale{1.0};
    double bin0_population{0.0};  // <B0^dag B0> after step 1, per unit norm
    bool detected{false};
    double final_scale{1.0};
};

/// Step 1: draws the jump variate and applies the TLS jump or the no-jump evolution.
StepTrace begin_step(const Propagator& prop, StateVector& psi, Rng& rng);

/// Steps 2-4: draws the measurement variate, projects, shifts and renormalizes.
void complete_step(const Propagator& prop, StateVector& psi, Rng& rng, StepTrace& trace);

/// Steps 3-4 only, used after a forced operation on bin 0 (which must already be empty).
void shift_and_normalize(const Propagator& prop, StateVector& psi, StepTrace& trace);

/// Full in-place step; appends events tagged with `step_index`.
StepTrace step(const Propagator& prop, StateVector& psi, Rng& rng, std::int64_t step_index,
               EventRecord& record);

/// Repeats the lead's step on another state with no fresh randomness.
void replay_step(const Propagator& prop, StateVector& follower, const StepTrace& lead);

struct StepOutcome {
    StateVector state;
    EventRecord events;
    StepTrace trace;
};

StepOutcome step(const Propagator& prop, StateVector psi, Rng& rng, std::int64_t step_index = 0);

struct ObservableSet {
    bool flux{true};
    bool tls_population{true};
    bool loop_probabilities{true};
};

/// Per-step series; index s holds the value for step s (time (s+1) dt).
/// Flux is taken after step 1, the rest after step 4.
struct TrajectoryResult {
    Eigen::VectorXd times;
    Eigen::VectorXd flux;
    Eigen::VectorXd tls_population;
    Eigen::VectorXd p0, p1, p2;
    EventRecord events;
};

std::int64_t steps_for(double t_end, double dt);

/// Deterministic in (params, seed). Throws ZeroNormError on an impossible projection.
TrajectoryResult run_trajectory(const Propagator& prop, std::uint64_t seed, double t_end,
                                const ObservableSet& observables = {});

} // namespace fbqt
