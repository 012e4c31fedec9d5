// acceptance: end-to-end checks at desk scale, one PASS/FAIL line each.
//
//   acceptance [--threads N] [--report FILE] [ids...]     ids: 1..13, fig4, fig5, fig8 (default: all)
//
// Exit status is 0 when every selected check passes and 1 otherwise.
#include "fbqt/commands.hpp"
#include "fbqt/correlations.hpp"
#include "fbqt/ensemble.hpp"
#include "fbqt/observables.hpp"
#include "fbqt/validate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace fbqt;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

int g_threads = 1;

std::string num(double x, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

struct Outcome {
    bool passed{false};
    std::string detail;
};

struct Check {
    std::string id;
    std::string name;
    std::function<Outcome()> run;
};

// ---- models

ModelParams no_feedback(double Omega) {
    ModelParams p;
    p.Omega = Omega;
    p.feedback = FeedbackMode::Markovian;
    p.tau = 0.02;
    p.n_bins = 2;
    return p;
}

ModelParams loop(double Omega, double phi, double tau, int n_bins) {
    ModelParams p;
    p.Omega = Omega;
    p.phi = phi;
    p.tau = tau;
    p.n_bins = n_bins;
    return p;
}

ModelParams short_loop(double Omega, double phi) { return loop(Omega, phi, 0.1, 10); }

// ---- ensembles

struct Steady {
    double flux{0.0}, flux_se{0.0};
    double p1{0.0}, p2{0.0}, p2_se{0.0};
    double t_ss{0.0};
    bool settled{true};
    EnsembleResult run;
};

double tail_mean(const EnsembleSeries& s, double from) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s.times(i) >= from) {
            sum += s.mean(i);
            ++n;
        }
    return n ? sum / static_cast<double>(n) : nan;
}

double tail_se(const EnsembleSeries& s, double from) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s.times(i) >= from) {
            sum += s.std_error(i);
            ++n;
        }
    return n ? sum / static_cast<double>(n) : nan;
}

// Steady values are averages over t >= t_ss, with t_ss detected on the flux. A flux that
// never settles (undamped coherent oscillation) is averaged over the second half instead.
Steady steady(const ModelParams& p, std::int64_t n, std::uint64_t seed, double t_end, bool keep_events = false) {
    EnsembleSettings s;
    s.n_trajectories = n;
    s.t_end = t_end;
    s.master_seed = seed;
    s.threads = g_threads;
    s.keep_events = keep_events;
    s.observables = {.flux = true, .tls_population = false, .loop_probabilities = true};
    Steady out;
    out.run = run_series_ensemble(Propagator(p), s);
    try {
        out.t_ss = detect_steady_state(out.run.flux, 0.02, 2.0);
    } catch (const SimulationError&) {
        out.t_ss = 0.5 * t_end;
        out.settled = false;
    }
    out.flux = tail_mean(out.run.flux, out.t_ss);
    out.flux_se = tail_se(out.run.flux, out.t_ss);
    out.p1 = tail_mean(out.run.p1, out.t_ss);
    out.p2 = tail_mean(out.run.p2, out.t_ss);
    out.p2_se = tail_se(out.run.p2, out.t_ss);
    return out;
}

struct Spectrum {
    Eigen::VectorXd w;
    Eigen::VectorXd s;
    double t_ss{0.0};
};

Spectrum spectrum(const ModelParams& p, std::int64_t n, std::uint64_t seed, double t2_max, double omega_max,
                  Eigen::Index points) {
    CorrelationSettings cs;
    cs.n_trajectories = n;
    cs.master_seed = seed;
    cs.threads = g_threads;
    cs.t2_max = t2_max;
    const G1Result g1 = g1_ensemble(Propagator(p), cs);
    const SpectrumSeries s =
        incoherent_spectrum(g1.G1, g1.coherent_amplitude, p.dt(), symmetric_grid(omega_max, points));
    return {s.detunings, s.values, g1.t_ss};
}

double g2_at_one_step(const ModelParams& p, std::int64_t n, std::uint64_t seed) {
    CorrelationSettings cs;
    cs.n_trajectories = n;
    cs.master_seed = seed;
    cs.threads = g_threads;
    cs.t2_max = p.dt();
    return g2_ensemble(Propagator(p), cs).g2.values(1).real();
}

// ---- spectral features

Eigen::Index argmax_in(const Spectrum& s, double lo, double hi) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < s.w.size(); ++i)
        if (s.w(i) >= lo && s.w(i) <= hi && (best < 0 || s.s(i) > s.s(best))) best = i;
    return best;
}

Eigen::Index nearest(const Spectrum& s, double w) {
    Eigen::Index i;
    (s.w.array() - w).abs().minCoeff(&i);
    return i;
}

// Distance from the peak to the half-maximum crossing on one side; NaN if the flank
// climbs back by more than 10% of the peak above its lowest point (a neighbouring peak)
// or runs off the grid. Smaller rises are treated as noise.
double half_width(const Spectrum& s, Eigen::Index peak, int dir) {
    const double half = 0.5 * s.s(peak);
    double lowest = s.s(peak);
    for (Eigen::Index j = peak + dir; j >= 0 && j < s.w.size(); j += dir) {
        const Eigen::Index prev = j - dir;
        if (s.s(j) <= half) {
            const double f = (s.s(prev) - half) / (s.s(prev) - s.s(j));
            return std::abs(s.w(prev) + f * (s.w(j) - s.w(prev)) - s.w(peak));
        }
        lowest = std::min(lowest, s.s(j));
        if (s.s(j) - lowest > 0.1 * s.s(peak)) return nan;
    }
    return nan;
}

// Full width at half maximum; with one flank blocked by a neighbour, twice the free half width.
double fwhm(const Spectrum& s, Eigen::Index peak) {
    const double l = half_width(s, peak, -1), r = half_width(s, peak, +1);
    if (std::isnan(l) && std::isnan(r)) return nan;
    if (std::isnan(l)) return 2.0 * r;
    if (std::isnan(r)) return 2.0 * l;
    return l + r;
}

// Local maxima whose topographic prominence exceeds k times the local noise.
std::vector<Eigen::Index> prominent_maxima(const Eigen::VectorXd& y, const Eigen::VectorXd& noise, double k) {
    std::vector<Eigen::Index> out;
    const Eigen::Index n = y.size();
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (!(y(i) > y(i - 1) && y(i) >= y(i + 1))) continue;
        double left = y(i), right = y(i);
        for (Eigen::Index j = i - 1; j >= 0 && y(j) <= y(i); --j) left = std::min(left, y(j));
        for (Eigen::Index j = i + 1; j < n && y(j) <= y(i); ++j) right = std::min(right, y(j));
        if (y(i) - std::max(left, right) > k * noise(i)) out.push_back(i);
    }
    return out;
}

// ---- checks backed by the validation suite

Outcome from_validation(const CheckResult& r, double max_seconds = 0.0) {
    Outcome o;
    o.passed = r.passed && (max_seconds <= 0.0 || r.seconds < max_seconds);
    o.detail = r.detail + " [" + num(r.seconds, 3) + " s";
    if (max_seconds > 0.0) o.detail += ", limit " + num(max_seconds, 3) + " s";
    o.detail += "]";
    return o;
}

ValidationOptions validation_options() {
    ValidationOptions v;
    v.threads = g_threads;
    return v;
}

// ---- individual checks

Outcome mollow_side_peaks() {
    const double Omega = 2.0 * pi;
    const Spectrum s = spectrum(no_feedback(Omega), 5000, 501, 30.0, 15.0, 1201);
    const double plus = s.w(argmax_in(s, 2.0, 15.0));
    const double minus = s.w(argmax_in(s, -15.0, -2.0));
    Outcome o;
    o.passed = std::abs(plus - Omega) <= 0.2 && std::abs(minus + Omega) <= 0.2;
    o.detail = "side peaks at " + num(minus) + " and " + num(plus) + " (expected +-" + num(Omega) + " +- 0.2)";
    return o;
}

Outcome feedback_filtering() {
    const double Omega = 2.0 * pi;
    const Spectrum none = spectrum(no_feedback(Omega), 5000, 601, 30.0, 15.0, 1201);
    const Spectrum destructive = spectrum(short_loop(Omega, pi), 5000, 602, 30.0, 15.0, 1201);
    const Spectrum constructive = spectrum(short_loop(Omega, 0.0), 5000, 603, 30.0, 15.0, 1201);
    // The no-feedback mode sends only gamma_R into the output. In the infinitely long loop
    // the gamma_L share comes back too, uncorrelated, so that output carries gamma / gamma_R
    // times this spectrum. Heights are compared against that; the raw ratio is reported too.
    const ModelParams base = no_feedback(Omega);
    const double full_output = base.gamma() / base.gamma_R;

    const double center_none = none.s(nearest(none, 0.0));
    const double center_pi = destructive.s(nearest(destructive, 0.0));
    const bool filtered = center_pi <= 0.2 * center_none;
    std::string detail = "phi=pi center " + num(center_pi) + " vs " + num(0.2 * center_none) +
                         " limit (output channel only)";

    // "comparable heights": each phi=0 peak within a factor 2 of its no-feedback counterpart
    bool broadened = true, comparable = true;
    const std::pair<double, double> windows[] = {{-1.5, 1.5}, {2.5, 12.0}, {-12.0, -2.5}};
    const char* labels[] = {"center", "upper", "lower"};
    for (int k = 0; k < 3; ++k) {
        const Eigen::Index a = argmax_in(none, windows[k].first, windows[k].second);
        const Eigen::Index b = argmax_in(constructive, windows[k].first, windows[k].second);
        const double wa = fwhm(none, a), wb = fwhm(constructive, b);
        const double raw = constructive.s(b) / none.s(a);
        const double ratio = raw / full_output;
        broadened = broadened && wb > wa;  // NaN compares false
        comparable = comparable && ratio >= 0.5 && ratio <= 2.0;
        detail += std::string("; ") + labels[k] + " fwhm " + num(wa) + " -> " + num(wb) + ", height ratio " +
                  num(ratio) + " (output channel only: " + num(raw) + ")";
    }
    Outcome o;
    o.passed = filtered && broadened && comparable;
    o.detail = detail;
    return o;
}

Outcome bunching_switch() {
    const double g0 = g2_at_one_step(short_loop(2.0 * pi, 0.0), 2000, 701);
    const double gpi = g2_at_one_step(short_loop(2.0 * pi, pi), 2000, 702);
    Outcome o;
    o.passed = g0 < 0.5 && gpi > 1.5;
    o.detail = "g2(dt): phi=0 " + num(g0) + " (< 0.5), phi=pi " + num(gpi) + " (> 1.5)";
    return o;
}

Outcome loop_occupancy() {
    // dt = 0.05; halving it moved p2 by less than the ensemble noise in a pilot study
    const Steady weak = steady(loop(0.4 * pi, 0.0, 2.5, 50), 2000, 801, 30.0);
    const Steady strong = steady(loop(2.0 * pi, 0.0, 2.5, 50), 2000, 802, 30.0);
    Outcome o;
    o.passed = std::abs(weak.p2 - 0.03) <= 0.01 && std::abs(strong.p2 - 0.11) <= 0.02;
    o.detail = "p2: Omega=0.4pi " + num(weak.p2) + " (0.03 +- 0.01, t_ss " + num(weak.t_ss) + "), Omega=2pi " +
               num(strong.p2) + " (0.11 +- 0.02, t_ss " + num(strong.t_ss) + ")";
    return o;
}

ModelParams dephased(ModelParams p, double gamma_prime) {
    p.gamma_prime = gamma_prime;
    return p;
}

Outcome dephasing_flux() {
    const ModelParams c = short_loop(0.4 * pi, 0.0), d = short_loop(0.4 * pi, pi);
    const Steady c0 = steady(c, 2000, 901, 30.0), c1 = steady(dephased(c, 1.0), 2000, 902, 30.0);
    const Steady d0 = steady(d, 2000, 903, 40.0), d1 = steady(dephased(d, 1.0), 2000, 904, 40.0);
    const double ratio = d1.flux / d0.flux;
    const auto mark = [](const Steady& s) { return s.settled ? std::string() : std::string(" unsettled"); };
    Outcome o;
    o.passed = std::abs(c0.flux - 0.45) <= 0.03 && std::abs(c1.flux - 0.34) <= 0.03 && ratio >= 10.0 && ratio <= 40.0;
    o.detail = "phi=0 flux " + num(c0.flux) + " (0.45 +- 0.03), with dephasing " + num(c1.flux) +
               " (0.34 +- 0.03); phi=pi ratio " + num(ratio) + " = " + num(d1.flux) + mark(d1) + " / " +
               num(d0.flux) + mark(d0) + " (in [10, 40])";
    return o;
}

Outcome wtd_shapes() {
    const double bin = 0.05;
    const ModelParams plain = no_feedback(2.0 * pi), filtered = short_loop(2.0 * pi, pi);
    const Steady a = steady(plain, 2000, 1001, 100.0, true);
    const Steady b = steady(filtered, 2000, 1002, 100.0, true);
    const WtdHistogram ha = waiting_time_distribution(a.run.events, plain.dt(), bin);
    const WtdHistogram hb = waiting_time_distribution(b.run.events, filtered.dt(), bin);
    Outcome o;
    if (!ha.valid || !hb.valid) {
        o.detail = "too few detections for a histogram";
        return o;
    }
    Eigen::Index peak_a, peak_b;
    ha.counts.maxCoeff(&peak_a);
    hb.counts.maxCoeff(&peak_b);
    const double first_fraction = ha.counts(0) / ha.counts(peak_a);
    double beyond = 0.0;
    for (Eigen::Index i = 0; i < hb.counts.size(); ++i)
        if (hb.bin_center(i) > 20.0) beyond += hb.counts(i);
    const double peak_time = hb.bin_center(peak_b);
    const bool max_inside = peak_time + 0.5 * bin <= filtered.tau + 1e-12;
    o.passed = first_fraction < 0.1 && max_inside && beyond > 0.0;
    o.detail = "no feedback: first bin / peak bin = " + num(first_fraction) + " (< 0.1); phi=pi: peak bin centered at " +
               num(peak_time) + " (bin inside t' < " + num(filtered.tau) + "), " + num(beyond, 6) +
               " waiting times beyond 20 (of " + std::to_string(hb.n_events) + ")";
    return o;
}

Outcome phase_matching() {
    bool all = true;
    std::string detail;
    struct Case {
        double tau;
        int n_bins;
        std::uint64_t seed;
    };
    for (const Case c : {Case{0.5, 20, 1101}, Case{1.0, 40, 1102}}) {
        RunConfig rc;
        rc.model = loop(0.4 * pi, 0.0, c.tau, c.n_bins);
        rc.n_trajectories = 1000;
        rc.t_end = 25.0;
        rc.master_seed = c.seed;
        rc.threads = g_threads;
        rc.t2_max = 0.1;
        rc.sweep.parameter = "phi";
        for (int k = 0; k < 20; ++k) rc.sweep.values.push_back(0.1 * pi * k);
        const std::vector<SweepPoint> pts = run_sweep(rc);
        const std::vector<double> predicted = phase_match_predictor(rc.model).destructive_phases;

        const std::size_t n = pts.size();
        std::vector<double> g(n);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            ok = ok && pts[i].ok;
            g[i] = pts[i].ok ? pts[i].g2_dt : nan;
        }
        std::string unsettled;
        for (const SweepPoint& pt : pts)
            if (pt.ok && !pt.settled) unsettled += num(pt.value / pi, 3) + "pi ";
        std::vector<double> maxima;  // circular local maxima
        for (std::size_t i = 0; i < n; ++i)
            if (g[i] > g[(i + n - 1) % n] && g[i] >= g[(i + 1) % n]) maxima.push_back(pts[i].value);
        const std::size_t top = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
        const auto near_prediction = [&](double phi) {
            return std::any_of(predicted.begin(), predicted.end(),
                               [&](double q) { return phase_distance(phi, q) <= 0.15 * pi + 1e-9; });
        };
        bool each = true;
        for (double q : predicted)
            each = each && std::any_of(maxima.begin(), maxima.end(),
                                       [&](double m) { return phase_distance(m, q) <= 0.15 * pi + 1e-9; });
        const bool pass = ok && near_prediction(pts[top].value) && each;
        all = all && pass;

        detail += (detail.empty() ? "" : "; ") + std::string("tau=") + num(c.tau) + ": predicted {";
        for (double q : predicted) detail += num(q / pi, 3) + "pi ";
        detail += "}, maxima {";
        for (double m : maxima) detail += num(m / pi, 3) + "pi ";
        detail += "}, global max at " + num(pts[top].value / pi, 3) + "pi (g2 " + num(g[top]) + ")";
        if (!unsettled.empty()) detail += ", second-half averages at {" + unsettled + "}";
        if (!ok) detail += ", failed points";
    }
    Outcome o;
    o.passed = all;
    o.detail = detail;
    return o;
}

Outcome loop_resonances() {
    const ModelParams p = loop(2.0 * pi, 0.0, 2.0, 40);
    // two independent halves: their difference estimates the noise of the combined spectrum
    const Spectrum a = spectrum(p, 2500, 1201, 20.0, 12.0, 961);
    const Spectrum b = spectrum(p, 2500, 1202, 20.0, 12.0, 961);
    Spectrum s = a;
    s.s = 0.5 * (a.s + b.s);
    const Eigen::VectorXd diff = 0.5 * (a.s - b.s).cwiseAbs();
    const Eigen::Index n = diff.size(), half = 20;
    Eigen::VectorXd noise(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half), hi = std::min(n - 1, i + half);
        noise(i) = std::sqrt(diff.segment(lo, hi - lo + 1).cwiseAbs2().mean());
    }
    std::vector<double> peaks;
    for (Eigen::Index i : prominent_maxima(s.s, noise, 3.0))
        if (s.w(i) >= -1e-9) peaks.push_back(s.w(i));

    const double angular = 2.0 * pi / p.tau, ordinary = 1.0 / p.tau;
    bool extra = false;
    for (double w : peaks) extra = extra || (std::abs(w) > 0.5 && std::abs(std::abs(w) - p.Omega) > 0.5);

    std::string detail = "peaks at {";
    for (double w : peaks) detail += num(w) + " ";
    detail += "}";
    Outcome o;
    if (peaks.size() < 3) {
        o.detail = detail + ", fewer than three peaks";
        return o;
    }
    std::vector<double> gaps;
    for (std::size_t i = 1; i < peaks.size(); ++i) gaps.push_back(peaks[i] - peaks[i - 1]);
    double mean = 0.0;
    for (double d : gaps) mean += d;
    mean /= static_cast<double>(gaps.size());
    bool uniform = true;
    for (double d : gaps) uniform = uniform && std::abs(d - mean) <= 0.1 * mean;
    const bool match_angular = std::abs(mean - angular) <= 0.1 * angular;
    const bool match_ordinary = std::abs(mean - ordinary) <= 0.1 * ordinary;
    o.passed = extra && uniform && (match_angular || match_ordinary);
    o.detail = detail + ", mean spacing " + num(mean) + (uniform ? " (uniform)" : " (not uniform)") +
               "; angular reading " + num(angular) + (match_angular ? " matches" : " does not match") +
               ", ordinary reading " + num(ordinary) + (match_ordinary ? " matches" : " does not match") +
               (extra ? "" : "; no peaks beyond the triplet");
    return o;
}

Outcome invariants() {
    const ValidationOptions v = validation_options();
    const CheckResult results[] = {check_norm_closure(v),        check_probability_closure(v),
                                   check_counting_identity(v),   check_shift_norm(v),
                                   check_dt_refinement(v, 500),  check_threaded_determinism(v)};
    Outcome o;
    o.passed = true;
    for (const CheckResult& r : results) {
        o.passed = o.passed && r.passed;
        o.detail += (o.detail.empty() ? "" : "; ") + r.name + (r.passed ? " ok" : " FAILED: " + r.detail);
    }
    return o;
}

Outcome lossy_flux() {
    const ModelParams p = short_loop(0.4 * pi, pi);
    ModelParams lossy = p;
    lossy.gamma0 = 0.1;
    const Steady base = steady(p, 2000, 903, 40.0);
    const Steady off_chip = steady(lossy, 2000, 1301, 40.0);
    const Steady deph = steady(dephased(p, 1.0), 2000, 904, 40.0);
    const double change = std::abs(off_chip.flux / base.flux - 1.0);
    const double gain = deph.flux / base.flux;
    Outcome o;
    o.passed = change < 0.1 && gain > 5.0;
    o.detail = "phi=pi flux " + num(base.flux) + (base.settled ? "" : " (unsettled)") + "; off-chip decay changes it by " + num(100.0 * change, 3) +
               "% (< 10%), dephasing multiplies it by " + num(gain) + " (> 5)";
    return o;
}

Outcome detuned_dephased_triplet() {
    ModelParams p = short_loop(2.0 * pi, 0.0);
    p.delta = 5.0;
    p.gamma_prime = 0.5;
    ModelParams q = p;
    q.phi = pi;
    const Spectrum c = spectrum(p, 2000, 1401, 10.0, 20.0, 801);
    const Spectrum d = spectrum(q, 2000, 1402, 10.0, 20.0, 801);
    const double side = std::hypot(p.Omega, p.delta);
    const auto features = [&](const Spectrum& s) {
        const Eigen::Index up = argmax_in(s, 0.5 * side, 20.0), down = argmax_in(s, -20.0, -0.5 * side);
        const Eigen::Index tall = s.s(up) >= s.s(down) ? up : down;
        const double center = s.s(argmax_in(s, -1.5, 1.5));
        return std::make_pair(fwhm(s, tall), center / s.s(tall));
    };
    const auto [width_c, ratio_c] = features(c);
    const auto [width_d, ratio_d] = features(d);
    Outcome o;
    o.passed = width_c > width_d && ratio_d < ratio_c;
    o.detail = "taller side peak fwhm: phi=0 " + num(width_c) + " > phi=pi " + num(width_d) +
               "; center/side height: phi=pi " + num(ratio_d) + " < phi=0 " + num(ratio_c);
    return o;
}

Outcome loop_traces() {
    const double weak = 0.4 * pi;
    const auto window_mean = [](const EnsembleSeries& s) { return tail_mean(s, 10.0); };
    const auto swing = [](const EnsembleSeries& s) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s.times(i) >= 5.0) {
                lo = std::min(lo, s.mean(i));
                hi = std::max(hi, s.mean(i));
            }
        return hi - lo;
    };
    const auto traces = [](const ModelParams& p, std::uint64_t seed) {
        EnsembleSettings s;
        s.n_trajectories = 2000;
        s.t_end = 20.0;
        s.master_seed = seed;
        s.threads = g_threads;
        s.observables = {.flux = false, .tls_population = false, .loop_probabilities = true};
        return run_series_ensemble(Propagator(p), s);
    };
    std::vector<std::string> notes;
    bool pass = true;
    const auto expect = [&](bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back((ok ? "" : "NOT ") + what);
    };

    const EnsembleResult a0 = traces(loop(weak, 0.0, 0.5, 20), 1501), api = traces(loop(weak, pi, 0.5, 20), 1502);
    expect(swing(api.p1) > swing(a0.p1),
           "p1 oscillates more at phi=pi (" + num(swing(api.p1)) + " vs " + num(swing(a0.p1)) + ")");

    const EnsembleResult b2 = traces(loop(weak, 0.0, 2.0, 40), 1503);
    expect(window_mean(b2.p1) > window_mean(a0.p1) && window_mean(b2.p2) > window_mean(a0.p2),
           "longer loop holds more photons (p1 " + num(window_mean(a0.p1)) + " -> " + num(window_mean(b2.p1)) +
               ", p2 " + num(window_mean(a0.p2)) + " -> " + num(window_mean(b2.p2)) + ")");

    const ModelParams long_pi = loop(weak, pi, 2.0, 40);
    const EnsembleResult c_weak = traces(long_pi, 1504), c_strong = traces(loop(2.0 * pi, pi, 2.0, 40), 1505);
    expect(window_mean(c_strong.p2) > window_mean(c_weak.p2),
           "p2 grows with the drive (" + num(window_mean(c_weak.p2)) + " -> " + num(window_mean(c_strong.p2)) + ")");

    ModelParams lossy = long_pi;
    lossy.gamma0 = 0.1;
    lossy.gamma_prime = 0.5;
    const EnsembleResult d = traces(lossy, 1506);
    expect(window_mean(d.p1) < window_mean(c_weak.p1) && window_mean(d.p2) < window_mean(c_weak.p2),
           "loss channels lower p1 and p2 (" + num(window_mean(c_weak.p1)) + " -> " + num(window_mean(d.p1)) + ", " +
               num(window_mean(c_weak.p2)) + " -> " + num(window_mean(d.p2)) + ")");

    Outcome o;
    o.passed = pass;
    for (const std::string& s : notes) o.detail += (o.detail.empty() ? "" : "; ") + s;
    return o;
}

std::vector<Check> all_checks() {
    return {
        {"1", "markovian_limit", [] { return from_validation(check_markovian_population(validation_options(), 2000), 120.0); }},
        {"2", "collision_oracle", [] { return from_validation(check_collision_oracle(validation_options(), 20000), 600.0); }},
        {"3", "g2_zero_delay", [] { return from_validation(check_g2_zero(validation_options())); }},
        {"4", "g2_regression", [] { return from_validation(check_g2_regression(validation_options(), 2000)); }},
        {"5", "mollow_side_peaks", mollow_side_peaks},
        {"6", "feedback_filtering", feedback_filtering},
        {"7", "bunching_switch", bunching_switch},
        {"8", "loop_occupancy", loop_occupancy},
        {"9", "dephasing_flux", dephasing_flux},
        {"10", "wtd_shapes", wtd_shapes},
        {"11", "phase_matching", phase_matching},
        {"12", "loop_resonances", loop_resonances},
        {"13", "invariants", invariants},
        {"fig4", "lossy_flux", lossy_flux},
        {"fig5", "detuned_dephased_triplet", detuned_dephased_triplet},
        {"fig8", "loop_traces", loop_traces},
    };
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"end-to-end acceptance checks"};
    std::vector<std::string> selected;
    std::string report_path;
    app.add_option("--threads", g_threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--report", report_path, "also write the result lines to this file");
    app.add_option("ids", selected, "checks to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Check> checks = all_checks();
    for (const std::string& id : selected)
        if (std::none_of(checks.begin(), checks.end(), [&](const Check& c) { return c.id == id; })) {
            std::fprintf(stderr, "unknown check '%s'\n", id.c_str());
            return 2;
        }

    std::ofstream report;
    if (!report_path.empty()) report.open(report_path);
    const auto emit = [&](const std::string& line) {
        std::fputs(line.c_str(), stdout);
        std::fflush(stdout);
        if (report) report << line << std::flush;
    };

    int failed = 0;
    for (const Check& c : checks) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += o.passed ? 0 : 1;
        char head[160];
        std::snprintf(head, sizeof head, "%s [%s] %s (%.1f s): ", o.passed ? "PASS" : "FAIL", c.id.c_str(),
                      c.name.c_str(), secs);
        emit(head + o.detail + "\n");
    }
    emit(std::to_string(failed) + " check(s) failed\n");
    return failed == 0 ? 0 : 1;
}
