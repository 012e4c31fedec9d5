#include "fbqt/dynamics.hpp"

#include "fbqt/observables.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

namespace fbqt {

namespace {

// Slots of the two coupled bins (N-1, 0): occupation of bin N-1 is bit 0, of bin 0 is bit 1.
constexpr int kSlotEmpty = 0;
constexpr int kSlotLoopIn = 1;
constexpr int kSlotOutput = 2;
constexpr int kSlotBoth = 3;

constexpr int local_index(int slot, Tls tls) { return 2 * slot + static_cast<int>(tls); }

int slots_for(int spectators) {
    switch (spectators) {
    case 0: return 4;
    case 1: return 3;
    case 2: return 1;
    default: throw std::invalid_argument("spectator photons must be 0, 1 or 2");
    }
}

double nonhermitian_rate(const ModelParams& p) {
    double rate = p.gamma0 + p.gamma_prime;
    if (p.feedback == FeedbackMode::Markovian) rate += p.gamma_L;
    return rate;
}

Eigen::MatrixXcd build_local_hamiltonian(const ModelParams& p, int spectators) {
    const int slots = slots_for(spectators);
    const int n = 2 * slots;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    const cd e_diag{p.delta, -0.5 * nonhermitian_rate(p)};
    const double dt = p.dt();

    for (int s = 0; s < slots; ++s) {
        h(local_index(s, Tls::e), local_index(s, Tls::e)) = e_diag;
        h(local_index(s, Tls::e), local_index(s, Tls::g)) = 0.5 * p.Omega;
        h(local_index(s, Tls::g), local_index(s, Tls::e)) = 0.5 * p.Omega;
    }

    // sigma^+ B : (g, occupied) -> (e, emptied), plus the Hermitian conjugate.
    auto couple = [&](int occupied, int emptied, cd lambda) {
        if (occupied >= slots || emptied >= slots) return;
        h(local_index(emptied, Tls::e), local_index(occupied, Tls::g)) += lambda;
        h(local_index(occupied, Tls::g), local_index(emptied, Tls::e)) += std::conj(lambda);
    };

    if (p.feedback == FeedbackMode::Loop) {
        const cd lambda_loop{std::sqrt(p.gamma_L / dt), 0.0};
        couple(kSlotLoopIn, kSlotEmpty, lambda_loop);
        couple(kSlotBoth, kSlotOutput, lambda_loop);
    }
    const cd lambda_out = std::polar(std::sqrt(p.gamma_R / dt), p.phi);
    couple(kSlotOutput, kSlotEmpty, lambda_out);
    couple(kSlotBoth, kSlotLoopIn, lambda_out);
    return h;
}

template <int Size, typename Matrix, typename Indices>
inline void apply_block(const Matrix& u, const Indices& idx, StateVector& psi) {
    Eigen::Matrix<cd, Size, 1> local;
    for (int i = 0; i < Size; ++i) local(i) = psi(idx[i]);
    const Eigen::Matrix<cd, Size, 1> out = u * local;
    for (int i = 0; i < Size; ++i) psi(idx[i]) = out(i);
}

void check_finite(const StateVector& psi, const char* where) {
    if (!psi.allFinite()) throw SimulationError(std::string("non-finite amplitudes after ") + where);
}

} // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
    case EventKind::OffChipJump: return "off_chip";
    case EventKind::DephasingJump: return "dephasing";
    case EventKind::LoopDecayJump: return "loop_decay";
    case EventKind::OutputDetection: return "detection";
    }
    return "unknown";
}

Propagator::Propagator(const ModelParams& params, Integrator integrator, ShiftFault fault)
    : params_(validated(params)), basis_(params.n_bins), integrator_(integrator), fault_(fault),
      dt_(params_.dt()) {
    const cd minus_i_dt{0.0, -dt_};
    u_empty_ = (minus_i_dt * build_local_hamiltonian(params_, 0)).exp();
    u_one_ = (minus_i_dt * build_local_hamiltonian(params_, 1)).exp();
    u_two_ = (minus_i_dt * build_local_hamiltonian(params_, 2)).exp();

    const int n = basis_.n_bins();
    const Eigen::Index slot_sectors[4] = {basis_.vacuum_sector(), basis_.one_sector(n - 1),
                                          basis_.one_sector(0), basis_.two_sector(0, n - 1)};
    for (int s = 0; s < 4; ++s) {
        empty_block_[local_index(s, Tls::g)] = flat(slot_sectors[s], Tls::g);
        empty_block_[local_index(s, Tls::e)] = flat(slot_sectors[s], Tls::e);
    }
    for (int m = 1; m <= n - 2; ++m) {
        const Eigen::Index sectors[3] = {basis_.one_sector(m), basis_.two_sector(m, n - 1),
                                         basis_.two_sector(0, m)};
        std::array<Eigen::Index, 6> idx{};
        for (int s = 0; s < 3; ++s) {
            idx[local_index(s, Tls::g)] = flat(sectors[s], Tls::g);
            idx[local_index(s, Tls::e)] = flat(sectors[s], Tls::e);
        }
        one_blocks_.push_back(idx);
    }
}

Eigen::MatrixXcd Propagator::local_hamiltonian(int spectators) const {
    return build_local_hamiltonian(params_, spectators);
}

void Propagator::evolve_no_jump(StateVector& psi) const {
    if (integrator_ == Integrator::BlockExponential)
        evolve_blocks(psi);
    else
        evolve_rk4(psi);
    check_finite(psi, "no-jump evolution");
}

void Propagator::evolve_blocks(StateVector& psi) const {
    apply_block<8>(u_empty_, empty_block_, psi);
    for (const auto& idx : one_blocks_) apply_block<6>(u_one_, idx, psi);

    // Two spectators in the middle bins: only the drive acts, on contiguous (g, e) pairs.
    const int n = basis_.n_bins();
    const cd a = u_two_(0, 0), b = u_two_(0, 1), c = u_two_(1, 0), d = u_two_(1, 1);
    for (int j = 1; j <= n - 3; ++j) {
        const Eigen::Index first = basis_.two_sector(j, j + 1);
        const Eigen::Index last = basis_.two_sector(j, n - 2);
        for (Eigen::Index s = first; s <= last; ++s) {
            const cd g = psi(2 * s), e = psi(2 * s + 1);
            psi(2 * s) = a * g + b * e;
            psi(2 * s + 1) = c * g + d * e;
        }
    }
}

void Propagator::evolve_rk4(StateVector& psi) const {
    constexpr int substeps = 4;
    const double h = dt_ / substeps;
    for (int i = 0; i < substeps; ++i) {
        const StateVector k1 = apply_effective_hamiltonian(basis_, params_, psi);
        const StateVector k2 = apply_effective_hamiltonian(basis_, params_, psi + 0.5 * h * k1);
        const StateVector k3 = apply_effective_hamiltonian(basis_, params_, psi + 0.5 * h * k2);
        const StateVector k4 = apply_effective_hamiltonian(basis_, params_, psi + h * k3);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

StateVector apply_effective_hamiltonian(const Basis& basis, const ModelParams& params,
                                        const StateVector& psi) {
    if (psi.size() != basis.dim()) throw std::invalid_argument("state dimension does not match basis");
    const cd minus_i{0.0, -1.0};
    StateVector out = StateVector::Zero(psi.size());
    const int n = basis.n_bins();

    auto apply = [&](const Eigen::MatrixXcd& h, const auto& idx) {
        const int size = static_cast<int>(idx.size());
        for (int r = 0; r < size; ++r) {
            cd acc = 0.0;
            for (int c = 0; c < size; ++c) acc += h(r, c) * psi(idx[c]);
            out(idx[r]) += minus_i * acc;
        }
    };

    const Eigen::MatrixXcd h0 = build_local_hamiltonian(params, 0);
    const Eigen::MatrixXcd h1 = build_local_hamiltonian(params, 1);
    const Eigen::MatrixXcd h2 = build_local_hamiltonian(params, 2);

    const Eigen::Index slot_sectors[4] = {basis.vacuum_sector(), basis.one_sector(n - 1), basis.one_sector(0),
                                          basis.two_sector(0, n - 1)};
    std::array<Eigen::Index, 8> idx0{};
    for (int s = 0; s < 4; ++s) {
        idx0[local_index(s, Tls::g)] = flat(slot_sectors[s], Tls::g);
        idx0[local_index(s, Tls::e)] = flat(slot_sectors[s], Tls::e);
    }
    apply(h0, idx0);

    for (int m = 1; m <= n - 2; ++m) {
        const Eigen::Index sectors[3] = {basis.one_sector(m), basis.two_sector(m, n - 1), basis.two_sector(0, m)};
        std::array<Eigen::Index, 6> idx{};
        for (int s = 0; s < 3; ++s) {
            idx[local_index(s, Tls::g)] = flat(sectors[s], Tls::g);
            idx[local_index(s, Tls::e)] = flat(sectors[s], Tls::e);
        }
        apply(h1, idx);
    }
    for (int j = 1; j <= n - 3; ++j) {
        for (int k = j + 1; k <= n - 2; ++k) {
            const Eigen::Index s = basis.two_sector(j, k);
            const std::array<Eigen::Index, 2> idx{2 * s, 2 * s + 1};
            apply(h2, idx);
        }
    }
    return out;
}

StateVector evolve_no_jump(const Propagator& prop, StateVector psi) {
    prop.evolve_no_jump(psi);
    return psi;
}

JumpProbabilities jump_probabilities(const Propagator& prop, const StateVector& psi) {
    const ModelParams& p = prop.params();
    const double excited = tls_population(psi) / psi.squaredNorm();
    JumpProbabilities probs;
    probs.off_chip = prop.dt() * p.gamma0 * excited;
    probs.dephasing = prop.dt() * p.gamma_prime * excited;
    if (p.feedback == FeedbackMode::Markovian) probs.loop_decay = prop.dt() * p.gamma_L * excited;
    return probs;
}

namespace {

// Raw jump operator, including its sqrt(rate) prefactor.
void apply_jump_operator(const ModelParams& p, StateVector& psi, SubstepBranch branch) {
    const Eigen::Index sectors = psi.size() / 2;
    switch (branch) {
    case SubstepBranch::OffChip:
    case SubstepBranch::LoopDecay: {
        const double amp = std::sqrt(branch == SubstepBranch::OffChip ? p.gamma0 : p.gamma_L);
        for (Eigen::Index s = 0; s < sectors; ++s) {
            psi(2 * s) = amp * psi(2 * s + 1);
            psi(2 * s + 1) = 0.0;
        }
        break;
    }
    case SubstepBranch::Dephasing: {
        const double amp = std::sqrt(p.gamma_prime);
        for (Eigen::Index s = 0; s < sectors; ++s) {
            psi(2 * s) = 0.0;
            psi(2 * s + 1) *= amp;
        }
        break;
    }
    case SubstepBranch::NoJump:
        break;
    }
}

} // namespace

SubstepResult qt_substep(const Propagator& prop, StateVector& psi, double u) {
    const JumpProbabilities probs = jump_probabilities(prop, psi);
    if (!(probs.total() < 1.0)) {
        std::ostringstream os;
        os << "total jump probability " << probs.total() << " per step; dt is too large";
        throw SimulationError(os.str());
    }
    SubstepResult result;
    if (u < probs.off_chip)
        result.branch = SubstepBranch::OffChip;
    else if (u < probs.off_chip + probs.dephasing)
        result.branch = SubstepBranch::Dephasing;
    else if (u < probs.total())
        result.branch = SubstepBranch::LoopDecay;

    if (result.branch == SubstepBranch::NoJump) {
        prop.evolve_no_jump(psi);
        return result;
    }
    apply_jump_operator(prop.params(), psi, result.branch);
    result.scale = 1.0 / normalize(psi);
    return result;
}

void apply_substep_branch(const Propagator& prop, StateVector& psi, SubstepBranch branch, double scale) {
    if (branch == SubstepBranch::NoJump) {
        prop.evolve_no_jump(psi);
        return;
    }
    apply_jump_operator(prop.params(), psi, branch);
    psi *= scale;
}

void project_output_bin(const Basis& basis, StateVector& psi, bool detected) {
    const int n = basis.n_bins();
    const Eigen::Index one0 = flat(basis.one_sector(0), Tls::g);
    const Eigen::Index two0 = flat(basis.two_sector(0, 1), Tls::g);
    const Eigen::Index two0_len = 2 * (n - 1);
    if (!detected) {
        psi.segment(one0, 2).setZero();
        psi.segment(two0, two0_len).setZero();
        return;
    }
    // Keep only bin-0-occupied amplitudes and remove that photon.
    StateVector out = StateVector::Zero(psi.size());
    out.segment(flat(basis.vacuum_sector(), Tls::g), 2) = psi.segment(one0, 2);
    for (int k = 1; k < n; ++k)
        out.segment(flat(basis.one_sector(k), Tls::g), 2) = psi.segment(flat(basis.two_sector(0, k), Tls::g), 2);
    psi.swap(out);
}

bool measure_output_bin(const Basis& basis, StateVector& psi, double u) {
    const double total = psi.squaredNorm();
    const double occupied = bin_population(basis, psi, 0);
    const double p = total > 0.0 ? occupied / total : 0.0;
    if (!(p >= 0.0 && p <= 1.0 + 1e-12)) {
        std::ostringstream os;
        os << "output bin population " << p << " outside [0, 1]";
        throw SimulationError(os.str());
    }
    const bool detected = u < p;
    project_output_bin(basis, psi, detected);
    return detected;
}

void shift_bins(const Basis& basis, StateVector& psi) {
    const int n = basis.n_bins();
    const Eigen::Index one0 = flat(basis.one_sector(0), Tls::g);
    const Eigen::Index two0 = flat(basis.two_sector(0, 1), Tls::g);
    const double residual =
        std::max(psi.segment(one0, 2).cwiseAbs().maxCoeff(), psi.segment(two0, 2 * (n - 1)).cwiseAbs().maxCoeff());
    if (residual > 1e-12) throw SimulationError("shift_bins: output bin still occupied (measurement skipped?)");

    // one(j) -> one(j-1)
    for (int j = 1; j < n; ++j)
        psi.segment(flat(basis.one_sector(j - 1), Tls::g), 2) = psi.segment(flat(basis.one_sector(j), Tls::g), 2);
    psi.segment(flat(basis.one_sector(n - 1), Tls::g), 2).setZero();

    // two(j,k) -> two(j-1,k-1); destinations always precede sources in the layout.
    for (int j = 1; j < n - 1; ++j) {
        const Eigen::Index src = flat(basis.two_sector(j, j + 1), Tls::g);
        const Eigen::Index dst = flat(basis.two_sector(j - 1, j), Tls::g);
        const Eigen::Index len = 2 * (n - 1 - j);
        for (Eigen::Index i = 0; i < len; ++i) psi(dst + i) = psi(src + i);
    }
    for (int j = 0; j < n - 1; ++j) psi.segment(flat(basis.two_sector(j, n - 1), Tls::g), 2).setZero();
}

void shift_bins(const Propagator& prop, StateVector& psi) {
    shift_bins(prop.basis(), psi);
    if (prop.shift_fault() == ShiftFault::OffByOne) {
        project_output_bin(prop.basis(), psi, false);
        shift_bins(prop.basis(), psi);
    }
}

StepTrace begin_step(const Propagator& prop, StateVector& psi, Rng& rng) {
    StepTrace trace;
    const SubstepResult sub = qt_substep(prop, psi, rng.uniform());
    trace.branch = sub.branch;
    trace.jump_scale = sub.scale;
    trace.bin0_population = bin_population(prop.basis(), psi, 0) / psi.squaredNorm();
    return trace;
}

void shift_and_normalize(const Propagator& prop, StateVector& psi, StepTrace& trace) {
    shift_bins(prop, psi);
    trace.final_scale = 1.0 / normalize(psi);
}

void complete_step(const Propagator& prop, StateVector& psi, Rng& rng, StepTrace& trace) {
    trace.detected = measure_output_bin(prop.basis(), psi, rng.uniform());
    shift_and_normalize(prop, psi, trace);
}

StepTrace step(const Propagator& prop, StateVector& psi, Rng& rng, std::int64_t step_index,
               EventRecord& record) {
    StepTrace trace = begin_step(prop, psi, rng);
    switch (trace.branch) {
    case SubstepBranch::OffChip: record.push_back({step_index, EventKind::OffChipJump}); break;
    case SubstepBranch::Dephasing: record.push_back({step_index, EventKind::DephasingJump}); break;
    case SubstepBranch::LoopDecay: record.push_back({step_index, EventKind::LoopDecayJump}); break;
    case SubstepBranch::NoJump: break;
    }
    complete_step(prop, psi, rng, trace);
    if (trace.detected) record.push_back({step_index, EventKind::OutputDetection});
    return trace;
}

void replay_step(const Propagator& prop, StateVector& follower, const StepTrace& lead) {
    apply_substep_branch(prop, follower, lead.branch, lead.jump_scale);
    project_output_bin(prop.basis(), follower, lead.detected);
    shift_bins(prop, follower);
    follower *= lead.final_scale;
}

StepOutcome step(const Propagator& prop, StateVector psi, Rng& rng, std::int64_t step_index) {
    StepOutcome out;
    out.trace = step(prop, psi, rng, step_index, out.events);
    out.state = std::move(psi);
    return out;
}

std::int64_t steps_for(double t_end, double dt) {
    if (!(t_end > 0.0)) throw ConfigError("t_end must be > 0");
    const double ratio = t_end / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) < 1e-9 * std::max(1.0, ratio)) return static_cast<std::int64_t>(rounded);
    return static_cast<std::int64_t>(std::ceil(ratio));
}

TrajectoryResult run_trajectory(const Propagator& prop, std::uint64_t seed, double t_end,
                                const ObservableSet& observables) {
    const std::int64_t n_steps = steps_for(t_end, prop.dt());
    TrajectoryResult result;
    result.times = Eigen::VectorXd::LinSpaced(n_steps, prop.dt(), prop.dt() * n_steps);
    if (observables.flux) result.flux.resize(n_steps);
    if (observables.tls_population) result.tls_population.resize(n_steps);
    if (observables.loop_probabilities) {
        result.p0.resize(n_steps);
        result.p1.resize(n_steps);
        result.p2.resize(n_steps);
    }

    Rng rng(seed);
    StateVector psi = initial_state(prop.basis());
    for (std::int64_t s = 0; s < n_steps; ++s) {
        const StepTrace trace = step(prop, psi, rng, s, result.events);
        if (observables.flux) result.flux(s) = trace.bin0_population / prop.dt();
        if (observables.tls_population) result.tls_population(s) = tls_population(psi);
        if (observables.loop_probabilities) {
            const LoopProbabilities lp = loop_photon_probabilities(prop.basis(), psi);
            result.p0(s) = lp.p0;
            result.p1(s) = lp.p1;
            result.p2(s) = lp.p2;
        }
    }
    return result;
}

} // namespace fbqt
