#include "fbqt/correlations.hpp"

#include "fbqt/parallel.hpp"

#include <cmath>
#include <numbers>

namespace fbqt {

const char* to_string(CorrelationKind kind) {
    switch (kind) {
    case CorrelationKind::G1: return "G1";
    case CorrelationKind::g1: return "g1";
    case CorrelationKind::G2: return "G2";
    case CorrelationKind::g2: return "g2";
    }
    return "unknown";
}

double find_steady_state(const Propagator& prop, const CorrelationSettings& settings) {
    EnsembleSettings pilot;
    pilot.n_trajectories = settings.pilot_trajectories;
    pilot.t_end = settings.pilot_t_end;
    pilot.master_seed = splitmix64(settings.master_seed ^ 0x706C696C6F74ull);
    pilot.threads = settings.threads;
    pilot.observables = {.flux = true, .tls_population = false, .loop_probabilities = false};
    pilot.abort_tolerance = settings.abort_tolerance;
    const EnsembleResult run = run_series_ensemble(prop, pilot);
    return detect_steady_state(run.flux, settings.rel_tol, settings.window);
}

namespace {

double resolve_t_ss(const Propagator& prop, const CorrelationSettings& settings) {
    if (settings.t_ss > 0.0) return settings.t_ss;
    return find_steady_state(prop, settings);
}

Eigen::VectorXd delay_grid(std::int64_t k_max, double dt) {
    return Eigen::VectorXd::LinSpaced(k_max + 1, 0.0, dt * static_cast<double>(k_max));
}

// Runs whole steps up to, but not including, the step that ends at t_ss.
void advance_to_final_step(const Propagator& prop, StateVector& psi, Rng& rng, std::int64_t k_ss) {
    for (std::int64_t s = 0; s + 1 < k_ss; ++s) {
        StepTrace trace = begin_step(prop, psi, rng);
        complete_step(prop, psi, rng, trace);
    }
}

} // namespace

G2Trajectory g2_trajectory(const Propagator& prop, double t_ss, double t2_max, std::uint64_t seed) {
    const std::int64_t k_ss = steps_for(t_ss, prop.dt());
    const std::int64_t k_max = steps_for(t2_max, prop.dt());
    const Basis& basis = prop.basis();

    G2Trajectory out;
    out.population = Eigen::VectorXd::Zero(k_max + 1);

    Rng rng(seed);
    StateVector psi = initial_state(basis);
    advance_to_final_step(prop, psi, rng, k_ss);

    StepTrace trace = begin_step(prop, psi, rng);
    out.weight = trace.bin0_population;
    (void)rng.uniform();  // measurement variate of the forced step, unused
    psi = annihilate_bin0(basis, psi);
    out.population(0) = bin_population(basis, psi, 0);
    try {
        shift_and_normalize(prop, psi, trace);
    } catch (const ZeroNormError&) {
        out.weight = 0.0;
        out.forced_detection_failed = true;
        return out;
    }

    for (std::int64_t k = 1; k <= k_max; ++k) {
        StepTrace t = begin_step(prop, psi, rng);
        out.population(k) = t.bin0_population;
        complete_step(prop, psi, rng, t);
    }
    return out;
}

namespace {

struct G2Partial {
    std::int64_t n{0}, n_ok{0};
    double s_w{0}, s_ww{0};
    Eigen::VectorXd s_x, s_xx, s_xw;  // x = weight * population
    Eigen::VectorXd s_g, s_gg, s_gw;  // g = population, successful trajectories only
    std::vector<std::uint64_t> seeds;
    std::int64_t aborted{0}, skipped{0};

    explicit G2Partial(Eigen::Index len = 0)
        : s_x(Eigen::VectorXd::Zero(len)), s_xx(Eigen::VectorXd::Zero(len)), s_xw(Eigen::VectorXd::Zero(len)),
          s_g(Eigen::VectorXd::Zero(len)), s_gg(Eigen::VectorXd::Zero(len)), s_gw(Eigen::VectorXd::Zero(len)) {}

    void add(const G2Trajectory& t) {
        ++n;
        s_w += t.weight;
        s_ww += t.weight * t.weight;
        const Eigen::VectorXd x = t.weight * t.population;
        s_x += x;
        s_xx += x.cwiseAbs2();
        s_xw += x * t.weight;
        if (t.forced_detection_failed) {
            ++skipped;
            return;
        }
        ++n_ok;
        s_g += t.population;
        s_gg += t.population.cwiseAbs2();
        s_gw += t.population * t.weight;
    }

    void merge(const G2Partial& o) {
        n += o.n;
        n_ok += o.n_ok;
        s_w += o.s_w;
        s_ww += o.s_ww;
        s_x += o.s_x;
        s_xx += o.s_xx;
        s_xw += o.s_xw;
        s_g += o.s_g;
        s_gg += o.s_gg;
        s_gw += o.s_gw;
        seeds.insert(seeds.end(), o.seeds.begin(), o.seeds.end());
        aborted += o.aborted;
        skipped += o.skipped;
    }
};

CorrelationSeries real_series(CorrelationKind kind, const Eigen::VectorXd& delays, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& se, std::int64_t n, std::int64_t skipped) {
    CorrelationSeries s;
    s.kind = kind;
    s.delays = delays;
    s.values = values.cast<cd>();
    s.std_error = se;
    s.n_trajectories = n;
    s.skipped = skipped;
    return s;
}

} // namespace

G2Result g2_ensemble(const Propagator& prop, const CorrelationSettings& settings) {
    if (settings.n_trajectories < 2) throw ConfigError("g2 needs at least 2 trajectories");
    const double t_ss = resolve_t_ss(prop, settings);
    const std::int64_t k_max = steps_for(settings.t2_max, prop.dt());
    const Eigen::Index len = k_max + 1;

    auto work = [&](std::int64_t begin, std::int64_t end) {
        G2Partial part(len);
        for (std::int64_t i = begin; i < end; ++i) {
            std::uint64_t seed = 0;
            const G2Trajectory t = run_with_retries(
                settings.master_seed, i, [&](std::uint64_t s) { return g2_trajectory(prop, t_ss, settings.t2_max, s); },
                seed, part.aborted);
            part.seeds.push_back(seed);
            part.add(t);
        }
        return part;
    };
    std::vector<G2Partial> parts = run_chunked<G2Partial>(settings.n_trajectories, settings.threads, work);
    G2Partial total(len);
    for (const G2Partial& p : parts) total.merge(p);
    check_abort_fraction(total.aborted, settings.n_trajectories, settings.abort_tolerance);

    const double n = static_cast<double>(total.n);
    const double w_mean = total.s_w / n;
    if (!(w_mean > 0.0)) throw SimulationError("zero steady-state output flux: g2 is undefined");
    const double var_w = std::max(0.0, (total.s_ww - total.s_w * total.s_w / n) / (n - 1.0));
    const Eigen::VectorXd x_mean = total.s_x / n;
    const Eigen::VectorXd var_x = ((total.s_xx - total.s_x.cwiseAbs2() / n) / (n - 1.0)).cwiseMax(0.0);
    const Eigen::VectorXd cov_xw = (total.s_xw - total.s_x * (total.s_w / n)) / (n - 1.0);

    G2Result result;
    result.t_ss = t_ss;
    result.steady_population = w_mean;
    const Eigen::VectorXd delays = delay_grid(k_max, prop.dt());
    result.G2 = real_series(CorrelationKind::G2, delays, x_mean, (var_x / n).cwiseSqrt(), total.n, total.skipped);

    Eigen::VectorXd g2, var_g2;
    if (settings.estimator == G2Estimator::Weighted) {
        const double w2 = w_mean * w_mean;
        g2 = x_mean / w2;
        var_g2 = var_x / (w2 * w2) - 4.0 * x_mean.cwiseProduct(cov_xw) / (w2 * w2 * w_mean) +
                 4.0 * x_mean.cwiseAbs2() * var_w / (w2 * w2 * w2);
    } else {
        const double m = static_cast<double>(std::max<std::int64_t>(total.n_ok, 1));
        const Eigen::VectorXd g_mean = total.s_g / m;
        const Eigen::VectorXd var_g = ((total.s_gg - total.s_g.cwiseAbs2() / m) / std::max(m - 1.0, 1.0)).cwiseMax(0.0);
        const Eigen::VectorXd cov_gw = (total.s_gw - total.s_g * (total.s_w / n)) / std::max(m - 1.0, 1.0);
        g2 = g_mean / w_mean;
        var_g2 = var_g / (w_mean * w_mean) - 2.0 * g_mean.cwiseProduct(cov_gw) / (w_mean * w_mean * w_mean) +
                 g_mean.cwiseAbs2() * var_w / (w_mean * w_mean * w_mean * w_mean);
    }
    result.g2 = real_series(CorrelationKind::g2, delays, g2, (var_g2.cwiseMax(0.0) / n).cwiseSqrt(), total.n,
                            total.skipped);
    result.bookkeeping.seeds = std::move(total.seeds);
    result.bookkeeping.aborted_attempts = total.aborted;
    return result;
}

G1Trajectory g1_trajectory(const Propagator& prop, double t_ss, double t2_max, std::uint64_t seed) {
    const std::int64_t k_ss = steps_for(t_ss, prop.dt());
    const std::int64_t k_max = steps_for(t2_max, prop.dt());
    const Basis& basis = prop.basis();

    G1Trajectory out;
    out.G1 = Eigen::VectorXcd::Zero(k_max + 1);
    out.lead_population = Eigen::VectorXd::Zero(k_max + 1);
    out.lead_coherence = Eigen::VectorXcd::Zero(k_max + 1);

    Rng rng(seed);
    StateVector lead = initial_state(basis);
    advance_to_final_step(prop, lead, rng, k_ss);

    auto record = [&](std::int64_t k, const StepTrace& trace, const StateVector& follower) {
        const double n2 = lead.squaredNorm();
        out.G1(k) = bin0_creation_element(basis, lead, follower) / n2;
        out.lead_population(k) = trace.bin0_population;
        out.lead_coherence(k) = bin0_coherence(basis, lead) / n2;
    };
    auto finish_follower = [&](StateVector& follower, const StepTrace& trace) {
        project_output_bin(basis, follower, trace.detected);
        shift_bins(prop, follower);
        follower *= trace.final_scale;
        if (!out.follower_vanished && follower.squaredNorm() == 0.0) out.follower_vanished = true;
    };

    StepTrace trace = begin_step(prop, lead, rng);
    StateVector follower = annihilate_bin0(basis, lead);
    record(0, trace, follower);
    complete_step(prop, lead, rng, trace);
    finish_follower(follower, trace);

    for (std::int64_t k = 1; k <= k_max; ++k) {
        StepTrace t = begin_step(prop, lead, rng);
        apply_substep_branch(prop, follower, t.branch, t.jump_scale);
        record(k, t, follower);
        complete_step(prop, lead, rng, t);
        finish_follower(follower, t);
    }
    return out;
}

namespace {

struct G1Partial {
    SeriesAccumulator re, im, population, coh_re, coh_im;
    std::vector<std::uint64_t> seeds;
    std::int64_t aborted{0}, vanished{0};

    void merge(const G1Partial& o) {
        re.merge(o.re);
        im.merge(o.im);
        population.merge(o.population);
        coh_re.merge(o.coh_re);
        coh_im.merge(o.coh_im);
        seeds.insert(seeds.end(), o.seeds.begin(), o.seeds.end());
        aborted += o.aborted;
        vanished += o.vanished;
    }
};

} // namespace

G1Result g1_ensemble(const Propagator& prop, const CorrelationSettings& settings) {
    if (settings.n_trajectories < 2) throw ConfigError("G1 needs at least 2 trajectories");
    const double t_ss = resolve_t_ss(prop, settings);
    const std::int64_t k_max = steps_for(settings.t2_max, prop.dt());

    auto work = [&](std::int64_t begin, std::int64_t end) {
        G1Partial part;
        for (std::int64_t i = begin; i < end; ++i) {
            std::uint64_t seed = 0;
            const G1Trajectory t = run_with_retries(
                settings.master_seed, i, [&](std::uint64_t s) { return g1_trajectory(prop, t_ss, settings.t2_max, s); },
                seed, part.aborted);
            part.seeds.push_back(seed);
            part.re.add(t.G1.real());
            part.im.add(t.G1.imag());
            part.population.add(t.lead_population);
            part.coh_re.add(t.lead_coherence.real());
            part.coh_im.add(t.lead_coherence.imag());
            if (t.follower_vanished) ++part.vanished;
        }
        return part;
    };
    std::vector<G1Partial> parts = run_chunked<G1Partial>(settings.n_trajectories, settings.threads, work);
    G1Partial total;
    for (const G1Partial& p : parts) total.merge(p);
    check_abort_fraction(total.aborted, settings.n_trajectories, settings.abort_tolerance);

    const Eigen::VectorXd delays = delay_grid(k_max, prop.dt());
    G1Result result;
    result.t_ss = t_ss;
    result.G1.kind = CorrelationKind::G1;
    result.G1.delays = delays;
    result.G1.values = total.re.mean().cast<cd>() + cd{0.0, 1.0} * total.im.mean().cast<cd>();
    result.G1.std_error = (total.re.std_error().cwiseAbs2() + total.im.std_error().cwiseAbs2()).cwiseSqrt();
    result.G1.n_trajectories = total.re.count();
    result.lead_population = total.population.finish(delays);
    result.coherent_amplitude = cd{total.coh_re.mean().mean(), total.coh_im.mean().mean()};
    result.follower_vanished = total.vanished;
    result.bookkeeping.seeds = std::move(total.seeds);
    result.bookkeeping.aborted_attempts = total.aborted;
    return result;
}

CorrelationSeries g1_normalized(const CorrelationSeries& G1, const EnsembleSeries& lead_population) {
    if (G1.values.size() != lead_population.mean.size())
        throw std::invalid_argument("G1 and lead population series differ in length");
    const double n0 = lead_population.mean(0);
    CorrelationSeries out = G1;
    out.kind = CorrelationKind::g1;
    for (Eigen::Index k = 0; k < G1.values.size(); ++k) {
        const double denom = std::sqrt(lead_population.mean(k) * n0);
        if (!(denom > 0.0)) throw SimulationError("g1 normalization: vanishing output population");
        out.values(k) = G1.values(k) / denom;
        out.std_error(k) = G1.std_error(k) / denom;
    }
    return out;
}

Eigen::VectorXd symmetric_grid(double omega_max, Eigen::Index points) {
    if (points < 2 || !(omega_max > 0.0)) throw ConfigError("spectrum grid needs >= 2 points and omega_max > 0");
    return Eigen::VectorXd::LinSpaced(points, -omega_max, omega_max);
}

SpectrumSeries incoherent_spectrum(const CorrelationSeries& G1, cd coherent_amplitude, double dt,
                                   const Eigen::VectorXd& detunings, Apodization window) {
    const Eigen::Index k_len = G1.values.size();
    if (k_len < 2) throw std::invalid_argument("G1 series too short for a spectrum");
    const double t_max = G1.delays(k_len - 1);

    SpectrumSeries out;
    out.detunings = detunings;
    out.window = window;
    out.taper_time = window == Apodization::Exponential ? t_max / 5.0 : 0.0;
    out.coherent_term = std::norm(coherent_amplitude);

    Eigen::VectorXcd f(k_len);
    double error_bound = 0.0;
    for (Eigen::Index k = 0; k < k_len; ++k) {
        const double taper = window == Apodization::Exponential ? std::exp(-G1.delays(k) / out.taper_time) : 1.0;
        const double weight = ((k == 0 || k == k_len - 1) ? 0.5 : 1.0) * taper;
        f(k) = weight * (G1.values(k) - out.coherent_term);
        error_bound += 2.0 * weight * G1.std_error(k);
    }
    out.std_error = Eigen::VectorXd::Constant(detunings.size(), error_bound);
    out.values.resize(detunings.size());
    for (Eigen::Index i = 0; i < detunings.size(); ++i) {
        cd acc = 0.0;
        const cd rot = std::polar(1.0, -detunings(i) * dt);
        cd phase = 1.0;
        for (Eigen::Index k = 0; k < k_len; ++k) {
            acc += f(k) * phase;
            phase *= rot;
        }
        out.values(i) = 2.0 * acc.real();
    }

    const Eigen::Index tail = std::max<Eigen::Index>(1, k_len / 10);
    double tail_mean = 0.0;
    for (Eigen::Index k = k_len - tail; k < k_len; ++k) tail_mean += std::abs(G1.values(k) - out.coherent_term);
    tail_mean /= static_cast<double>(tail);
    out.plateau_reached = tail_mean <= 0.05 * std::abs(G1.values(0) - out.coherent_term);
    return out;
}

double phase_distance(double a, double b) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double d = std::fmod(std::abs(a - b), two_pi);
    return std::min(d, two_pi - d);
}

PhaseMatchPrediction phase_match_predictor(const ModelParams& params, int max_order) {
    constexpr double pi = std::numbers::pi;
    const double half = params.Omega * params.tau / 2.0;
    PhaseMatchPrediction out;
    auto push_unique = [](std::vector<double>& v, double phi) {
        phi = reduce_phase(phi);
        for (double existing : v)
            if (phase_distance(existing, phi) < 1e-12) return;
        v.push_back(phi);
    };
    push_unique(out.destructive_phases, half + pi);
    push_unique(out.destructive_phases, -half + pi);
    push_unique(out.constructive_phases, half);
    push_unique(out.constructive_phases, -half);

    const double turns = params.Omega * params.tau / (2.0 * pi);
    out.complete_interference = std::abs(turns - std::round(turns)) < 1e-9;

    const double phi = reduce_phase(params.phi);
    for (int k = -max_order; k <= max_order; ++k) {
        const double numerator = 2.0 * pi * k + phi;
        out.resonances_angular.push_back(numerator / params.tau);
        out.resonances_ordinary.push_back(numerator / (2.0 * pi * params.tau));
    }
    return out;
}

} // namespace fbqt
