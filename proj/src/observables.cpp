#include "fbqt/observables.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fbqt {

namespace {

double sector_weight(const StateVector& psi, Eigen::Index sector) {
    return std::norm(psi(2 * sector)) + std::norm(psi(2 * sector + 1));
}

} // namespace

double bin_population(const Basis& basis, const StateVector& psi, int j) {
    const int n = basis.n_bins();
    if (j < 0 || j >= n) throw std::out_of_range("bin index outside loop");
    double total = sector_weight(psi, basis.one_sector(j));
    for (int i = 0; i < j; ++i) total += sector_weight(psi, basis.two_sector(i, j));
    if (j + 1 < n) {
        const Eigen::Index first = flat(basis.two_sector(j, j + 1), Tls::g);
        total += psi.segment(first, 2 * (n - 1 - j)).squaredNorm();
    }
    return total;
}

double output_flux(const Propagator& prop, const StateVector& psi) {
    return bin_population(prop.basis(), psi, 0) / prop.dt();
}

LoopProbabilities loop_photon_probabilities(const Basis& basis, const StateVector& psi) {
    LoopProbabilities lp;
    lp.p0 = sector_weight(psi, basis.vacuum_sector());
    lp.p1 = psi.segment(flat(basis.one_sector(0), Tls::g), 2 * basis.n_bins()).squaredNorm();
    lp.p2 = psi.segment(flat(basis.two_begin(), Tls::g), 2 * basis.two_count()).squaredNorm();
    return lp;
}

double tls_population(const StateVector& psi) {
    double total = 0.0;
    for (Eigen::Index i = 1; i < psi.size(); i += 2) total += std::norm(psi(i));
    return total;
}

cd bin0_coherence(const Basis& basis, const StateVector& psi) {
    // <psi|B0|psi> = sum over sources c of conj(psi[B0 c]) psi[c]
    const StateVector lowered = annihilate_bin0(basis, psi);
    return psi.dot(lowered);
}

StateVector annihilate_bin0(const Basis& basis, const StateVector& psi) {
    StateVector out = StateVector::Zero(psi.size());
    const int n = basis.n_bins();
    out.segment(flat(basis.vacuum_sector(), Tls::g), 2) = psi.segment(flat(basis.one_sector(0), Tls::g), 2);
    for (int k = 1; k < n; ++k)
        out.segment(flat(basis.one_sector(k), Tls::g), 2) = psi.segment(flat(basis.two_sector(0, k), Tls::g), 2);
    return out;
}

cd bin0_creation_element(const Basis& basis, const StateVector& bra, const StateVector& ket) {
    // <bra|B0^dag|ket> = <B0 bra|ket>
    return annihilate_bin0(basis, bra).dot(ket);
}

WtdHistogram waiting_time_distribution(std::span<const EventRecord> records, double dt, double bin_width) {
    if (!(dt > 0.0) || !(bin_width > 0.0)) throw ConfigError("waiting_time_distribution needs dt, bin_width > 0");
    const double ratio = bin_width / dt;
    const auto steps_per_bin = static_cast<std::int64_t>(std::llround(ratio));
    if (steps_per_bin < 1 || std::abs(ratio - static_cast<double>(steps_per_bin)) > 1e-6 * ratio) {
        std::ostringstream os;
        os << "WTD bin width " << bin_width << " is not a whole number of steps of " << dt;
        throw ConfigError(os.str());
    }

    WtdHistogram hist;
    hist.bin_width = static_cast<double>(steps_per_bin) * dt;
    std::vector<double> counts;
    for (const EventRecord& record : records) {
        std::int64_t previous = -1;
        for (const Event& ev : record) {
            if (ev.kind != EventKind::OutputDetection) continue;
            if (previous >= 0) {
                const auto bin = static_cast<std::size_t>((ev.step - previous) / steps_per_bin);
                if (bin >= counts.size()) counts.resize(bin + 1, 0.0);
                counts[bin] += 1.0;
                ++hist.n_events;
            }
            previous = ev.step;
        }
    }
    hist.counts = Eigen::Map<const Eigen::VectorXd>(counts.data(), static_cast<Eigen::Index>(counts.size()));
    hist.valid = hist.n_events > 0;
    hist.normalized = hist.valid ? Eigen::VectorXd(hist.counts / static_cast<double>(hist.n_events))
                                 : Eigen::VectorXd();
    return hist;
}

double detect_steady_state(const EnsembleSeries& series, double rel_tol, double window) {
    const Eigen::Index n = series.size();
    if (n < 2) throw SimulationError("steady-state detection needs a series with at least two points");
    const double dt = series.times(1) - series.times(0);
    const auto w = static_cast<Eigen::Index>(std::llround(window / dt));
    if (w < 1) throw ConfigError("steady-state window shorter than one step");
    if (2 * w > n) throw SimulationError("series shorter than two steady-state windows; increase t_end");

    // prefix sums for window means
    Eigen::VectorXd prefix(n + 1);
    prefix(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + series.mean(i);
    auto settled = [&](Eigen::Index end) {  // windows [end-2w, end-w) and [end-w, end)
        const double later = (prefix(end) - prefix(end - w)) / static_cast<double>(w);
        const double earlier = (prefix(end - w) - prefix(end - 2 * w)) / static_cast<double>(w);
        const double scale = std::max(std::abs(later), std::abs(earlier));
        return std::abs(later - earlier) <= rel_tol * scale;
    };

    for (Eigen::Index end = 2 * w; end <= n; ++end) {
        if (!settled(end)) continue;
        bool holds = true;
        for (Eigen::Index later = end + 1; later <= std::min(n, end + w) && holds; ++later) holds = settled(later);
        if (holds) {
            // times(i) is the end of step i, so the window boundary end-w sits at times(end-w-1).
            return series.times(end - w - 1);
        }
    }
    throw SimulationError("flux never reached steady state within the series; increase t_end");
}

} // namespace fbqt
