#include "fbqt/dynamics.hpp"
#include "fbqt/observables.hpp"
#include "fbqt/oracle.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>

using namespace fbqt;

namespace {

constexpr double pi = std::numbers::pi;

StateVector random_state(const Basis& b, std::mt19937_64& gen) {
    std::normal_distribution<double> g;
    StateVector psi(b.dim());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = cd{g(gen), g(gen)};
    return normalized(psi);
}

ModelParams busy_params(int n_bins) {
    ModelParams p;
    p.Omega = 2.0 * pi;
    p.delta = 0.7;
    p.phi = 1.1;
    p.gamma0 = 0.2;
    p.gamma_prime = 0.3;
    p.gamma_L = 0.4;
    p.gamma_R = 0.6;
    p.tau = 0.3;
    p.n_bins = n_bins;
    return p;
}

} // namespace

TEST_CASE("H_eff vanishes without rates or drive") {
    ModelParams p;
    p.gamma_L = p.gamma_R = 0.0;
    p.n_bins = 4;
    const Basis b(4);
    std::mt19937_64 gen(1);
    const StateVector out = apply_effective_hamiltonian(b, p, random_state(b, gen));
    CHECK(out.norm() == 0.0);
}

TEST_CASE("drive alone moves ground vacuum to excited vacuum") {
    ModelParams p;
    p.Omega = 1.3;
    p.n_bins = 4;
    const Basis b(4);
    const StateVector out = apply_effective_hamiltonian(b, p, initial_state(b));
    CHECK(std::abs(out(1) - cd{0.0, -0.65}) < 1e-15);
    StateVector rest = out;
    rest(1) = 0.0;
    CHECK(rest.norm() == 0.0);
}

TEST_CASE("H_eff agrees with the dense ladder-operator matrix") {
    for (FeedbackMode mode : {FeedbackMode::Loop, FeedbackMode::Markovian}) {
        ModelParams p = busy_params(3);
        p.feedback = mode;
        const Basis b(3);
        const Eigen::MatrixXcd H = dense_effective_hamiltonian(b, p);
        Eigen::MatrixXcd applied(b.dim(), b.dim());
        for (Eigen::Index k = 0; k < b.dim(); ++k) {
            StateVector e = StateVector::Zero(b.dim());
            e(k) = 1.0;
            applied.col(k) = apply_effective_hamiltonian(b, p, e) * cd{0.0, 1.0};  // -i H e -> H e
        }
        CHECK((applied - H).norm() < 1e-12);

        const Eigen::MatrixXcd herm = 0.5 * (H + H.adjoint());
        const Eigen::MatrixXcd anti = (H - H.adjoint()) * cd{0.0, -0.5};  // H = herm + i anti
        CHECK((herm - herm.adjoint()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(anti);
        CHECK(es.eigenvalues().maxCoeff() < 1e-12);
    }
}

TEST_CASE("no-jump evolution") {
    SUBCASE("trivial generator leaves the state alone") {
        ModelParams p;
        p.gamma_L = p.gamma_R = 0.0;
        p.n_bins = 5;
        const Propagator prop(p);
        std::mt19937_64 gen(2);
        const StateVector psi = random_state(prop.basis(), gen);
        CHECK((evolve_no_jump(prop, psi) - psi).norm() < 1e-14);
    }
    SUBCASE("excited emitter loses the expected weight in one step") {
        ModelParams p;
        p.gamma0 = 0.2;
        p.tau = 0.1;
        p.n_bins = 50;
        const Propagator prop(p);
        StateVector psi = StateVector::Zero(prop.basis().dim());
        psi(1) = 1.0;
        psi = evolve_no_jump(prop, psi);
        const double dt = prop.dt();
        const double excited = std::norm(psi(1));
        CHECK(excited == doctest::Approx(1.0 - (p.gamma_L + p.gamma_R + p.gamma0) * dt).epsilon(dt * dt * 4));
        CHECK(psi.squaredNorm() == doctest::Approx(1.0 - p.gamma0 * dt).epsilon(dt * dt * 4));
    }
    SUBCASE("block exponential and RK4 agree") {
        const ModelParams p = busy_params(6);
        const Propagator exact(p, Integrator::BlockExponential);
        const Propagator rk4(p, Integrator::RungeKutta4);
        std::mt19937_64 gen(3);
        for (int trial = 0; trial < 10; ++trial) {
            const StateVector psi = random_state(exact.basis(), gen);
            CHECK((evolve_no_jump(exact, psi) - evolve_no_jump(rk4, psi)).norm() < 1e-6);
        }
    }
    SUBCASE("local blocks are Hermitian up to the loss term") {
        const Propagator prop(busy_params(4));
        const int sizes[3] = {8, 6, 2};
        for (int s = 0; s <= 2; ++s) {
            const Eigen::MatrixXcd h = prop.local_hamiltonian(s);
            CHECK(h.rows() == sizes[s]);
            const Eigen::MatrixXcd anti = (h - h.adjoint()) * cd{0.0, -0.5};
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(anti);
            CHECK(es.eigenvalues().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("halving dt barely moves the TLS population at t = 1") {
    ModelParams p;
    p.Omega = 0.4 * pi;
    p.tau = 0.1;
    p.n_bins = 4;
    CollisionOracle coarse(p);
    const double a = coarse.run(1.0).tls_population(9);
    p.n_bins = 8;
    CollisionOracle fine(p);
    const double b = fine.run(1.0).tls_population(19);
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("TLS jump probabilities") {
    ModelParams p;
    p.gamma0 = 0.3;
    p.gamma_prime = 0.2;
    p.n_bins = 10;
    const Propagator prop(p);
    const double dt = prop.dt();

    const JumpProbabilities ground = jump_probabilities(prop, initial_state(prop.basis()));
    CHECK(ground.total() == 0.0);
    StateVector psi = initial_state(prop.basis());
    const StateVector before = evolve_no_jump(prop, psi);
    CHECK(qt_substep(prop, psi, 0.0).branch == SubstepBranch::NoJump);
    CHECK((psi - before).norm() == 0.0);

    StateVector excited = StateVector::Zero(prop.basis().dim());
    excited(1) = 1.0;
    const JumpProbabilities ex = jump_probabilities(prop, excited);
    CHECK(ex.off_chip == doctest::Approx(p.gamma0 * dt));
    CHECK(ex.dephasing == doctest::Approx(p.gamma_prime * dt));
    CHECK(ex.loop_decay == 0.0);

    StateVector s = excited;
    CHECK(qt_substep(prop, s, 0.5 * ex.off_chip).branch == SubstepBranch::OffChip);
    s = excited;
    CHECK(qt_substep(prop, s, ex.off_chip + 0.5 * ex.dephasing).branch == SubstepBranch::Dephasing);
    s = excited;
    CHECK(qt_substep(prop, s, 0.999).branch == SubstepBranch::NoJump);
}

TEST_CASE("off-chip jump lowers the TLS and leaves the photons") {
    ModelParams p;
    p.gamma0 = 0.3;
    p.n_bins = 5;
    const Propagator prop(p);
    const Basis& b = prop.basis();
    StateVector psi = StateVector::Zero(b.dim());
    psi(b.index_of(Tls::e, Sector::one(2))) = cd{0.6, 0.0};
    psi(b.index_of(Tls::g, Sector::one(1))) = cd{0.0, 0.8};
    const SubstepResult r = qt_substep(prop, psi, 0.0);
    REQUIRE(r.branch == SubstepBranch::OffChip);
    CHECK(std::abs(psi(b.index_of(Tls::g, Sector::one(2))) - 1.0) < 1e-14);
    CHECK(psi.norm() == doctest::Approx(1.0));
    CHECK(r.scale == doctest::Approx(1.0 / (std::sqrt(p.gamma0) * 0.6)));
}

TEST_CASE("Markovian mode draws loop-channel jumps") {
    ModelParams p;
    p.feedback = FeedbackMode::Markovian;
    p.n_bins = 2;
    p.tau = 0.01;
    const Propagator prop(p);
    StateVector excited = StateVector::Zero(prop.basis().dim());
    excited(1) = 1.0;
    CHECK(jump_probabilities(prop, excited).loop_decay == doctest::Approx(p.gamma_L * prop.dt()));
}

TEST_CASE("oversized jump probability is refused") {
    ModelParams p;
    p.gamma0 = 150.0;
    p.n_bins = 10;
    p.tau = 0.1;
    const Propagator prop(p);
    StateVector excited = StateVector::Zero(prop.basis().dim());
    excited(1) = 1.0;
    CHECK_THROWS_AS(qt_substep(prop, excited, 0.5), SimulationError);
}

TEST_CASE("output-bin measurement") {
    const Basis b(5);
    SUBCASE("vacuum is never detected") {
        for (double u : {0.0, 0.5, 0.999}) {
            StateVector psi = initial_state(b);
            CHECK_FALSE(measure_output_bin(b, psi, u));
            CHECK(psi == initial_state(b));
        }
    }
    SUBCASE("a photon in bin 0 is always detected") {
        for (double u : {0.0, 0.5, 0.999}) {
            StateVector psi = StateVector::Zero(b.dim());
            psi(b.index_of(Tls::g, Sector::one(0))) = 1.0;
            CHECK(measure_output_bin(b, psi, u));
            CHECK(std::abs(psi(0) - 1.0) < 1e-15);
            CHECK(psi.norm() == doctest::Approx(1.0));
        }
    }
    SUBCASE("detection frequency follows the Born rule") {
        StateVector fixed = StateVector::Zero(b.dim());
        fixed(b.index_of(Tls::g, Sector::one(0))) = std::sqrt(0.3);
        fixed(b.index_of(Tls::e, Sector::vacuum())) = std::sqrt(0.7);
        Rng rng(42);
        int hits = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            StateVector psi = fixed;
            hits += measure_output_bin(b, psi, rng.uniform()) ? 1 : 0;
        }
        CHECK(std::abs(hits / static_cast<double>(draws) - 0.3) < 0.005);
    }
    SUBCASE("two-photon sector keeps the partner photon") {
        StateVector psi = StateVector::Zero(b.dim());
        psi(b.index_of(Tls::e, Sector::two(0, 3))) = 1.0;
        project_output_bin(b, psi, true);
        CHECK(std::abs(psi(b.index_of(Tls::e, Sector::one(3))) - 1.0) < 1e-15);
    }
}

TEST_CASE("bin shift") {
    const Basis b(5);
    SUBCASE("vacuum stays vacuum") {
        StateVector psi = initial_state(b);
        shift_bins(b, psi);
        CHECK(psi == initial_state(b));
    }
    SUBCASE("one photon moves one bin") {
        const cd a{0.3, -0.4};
        StateVector psi = StateVector::Zero(b.dim());
        psi(b.index_of(Tls::e, Sector::one(3))) = a;
        shift_bins(b, psi);
        CHECK(psi(b.index_of(Tls::e, Sector::one(2))) == a);
        CHECK(psi.norm() == doctest::Approx(std::abs(a)));
    }
    SUBCASE("two photons move together") {
        StateVector psi = StateVector::Zero(b.dim());
        psi(b.index_of(Tls::g, Sector::two(1, 4))) = 1.0;
        shift_bins(b, psi);
        CHECK(psi(b.index_of(Tls::g, Sector::two(0, 3))) == cd{1.0, 0.0});
    }
    SUBCASE("norm is preserved for random post-measurement states") {
        std::mt19937_64 gen(5);
        for (int trial = 0; trial < 100; ++trial) {
            StateVector psi = random_state(b, gen);
            project_output_bin(b, psi, trial % 2 == 0);
            const double before = psi.norm();
            shift_bins(b, psi);
            CHECK(psi.norm() == doctest::Approx(before).epsilon(1e-13));
        }
    }
    SUBCASE("an unmeasured output bin is an error") {
        StateVector psi = StateVector::Zero(b.dim());
        psi(b.index_of(Tls::g, Sector::one(0))) = 1.0;
        CHECK_THROWS_AS(shift_bins(b, psi), SimulationError);
    }
    SUBCASE("the injected fault moves photons twice") {
        ModelParams p;
        p.n_bins = 5;
        const Propagator faulty(p, Integrator::BlockExponential, ShiftFault::OffByOne);
        StateVector psi = StateVector::Zero(b.dim());
        psi(b.index_of(Tls::g, Sector::one(3))) = 1.0;
        shift_bins(faulty, psi);
        CHECK(psi(b.index_of(Tls::g, Sector::one(1))) == cd{1.0, 0.0});
    }
}

TEST_CASE("full steps") {
    SUBCASE("undriven vacuum is a fixed point") {
        ModelParams p;
        p.n_bins = 6;
        const Propagator prop(p);
        Rng rng(1);
        StateVector psi = initial_state(prop.basis());
        EventRecord record;
        for (int s = 0; s < 100; ++s) step(prop, psi, rng, s, record);
        CHECK((psi - initial_state(prop.basis())).norm() == 0.0);
        CHECK(record.empty());
    }
    SUBCASE("norm and photon-number closure along random walks") {
        const Propagator prop(busy_params(8));
        double worst_norm = 0.0, worst_prob = 0.0;
        for (std::uint64_t t = 0; t < 5; ++t) {
            Rng rng(trajectory_seed(9, t));
            StateVector psi = initial_state(prop.basis());
            EventRecord record;
            for (int s = 0; s < 2000; ++s) {
                step(prop, psi, rng, s, record);
                worst_norm = std::max(worst_norm, std::abs(psi.norm() - 1.0));
                const LoopProbabilities lp = loop_photon_probabilities(prop.basis(), psi);
                worst_prob = std::max(worst_prob, std::abs(lp.p0 + lp.p1 + lp.p2 - 1.0));
            }
        }
        CHECK(worst_norm < 1e-10);
        CHECK(worst_prob < 1e-10);
    }
    SUBCASE("a replayed step reproduces the lead") {
        const Propagator prop(busy_params(8));
        Rng rng(11);
        StateVector lead = initial_state(prop.basis());
        EventRecord record;
        for (int s = 0; s < 300; ++s) {
            StateVector follower = lead;
            const StepTrace trace = step(prop, lead, rng, s, record);
            replay_step(prop, follower, trace);
            REQUIRE((follower - lead).norm() < 1e-13);
        }
    }
}

TEST_CASE("run_trajectory") {
    const Propagator prop(busy_params(8));
    const TrajectoryResult a = run_trajectory(prop, 77, 5.0);
    const TrajectoryResult b = run_trajectory(prop, 77, 5.0);
    CHECK(a.events == b.events);
    CHECK(a.flux == b.flux);
    CHECK(a.p2 == b.p2);
    CHECK(a.times.size() == steps_for(5.0, prop.dt()));
    CHECK(a.times(0) == doctest::Approx(prop.dt()));
    CHECK_FALSE(a.events.empty());
    const TrajectoryResult c = run_trajectory(prop, 78, 5.0);
    CHECK_FALSE(a.events == c.events);

    ModelParams quiet;
    quiet.n_bins = 5;
    const Propagator dark(quiet);
    CHECK(run_trajectory(dark, 1, 10.0).events.empty());

    const TrajectoryResult lean = run_trajectory(prop, 77, 5.0, {.flux = true, .tls_population = false,
                                                                 .loop_probabilities = false});
    CHECK(lean.flux == a.flux);
    CHECK(lean.p0.size() == 0);
    CHECK_THROWS_AS(run_trajectory(prop, 1, 0.0), ConfigError);
}

TEST_CASE("steps_for rounds near-integers") {
    CHECK(steps_for(1.0, 0.1) == 10);
    CHECK(steps_for(1.05, 0.1) == 11);
    CHECK(steps_for(20.0, 0.01) == 2000);
}
