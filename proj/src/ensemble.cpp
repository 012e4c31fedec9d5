#include "fbqt/ensemble.hpp"

#include "fbqt/parallel.hpp"

#include <cmath>
#include <sstream>

namespace fbqt {

void SeriesAccumulator::add(const Eigen::VectorXd& x) {
    if (n_ == 0 && mean_.size() == 0) {
        mean_ = Eigen::VectorXd::Zero(x.size());
        m2_ = Eigen::VectorXd::Zero(x.size());
    }
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
}

void SeriesAccumulator::merge(const SeriesAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / n);
    n_ += other.n_;
}

Eigen::VectorXd SeriesAccumulator::std_error() const {
    if (n_ < 2) return Eigen::VectorXd::Zero(mean_.size());
    const double n = static_cast<double>(n_);
    return (m2_.cwiseMax(0.0) / (n - 1.0)).cwiseSqrt() / std::sqrt(n);
}

EnsembleSeries SeriesAccumulator::finish(const Eigen::VectorXd& times) const {
    EnsembleSeries s;
    s.times = times;
    s.mean = mean_.size() ? mean_ : Eigen::VectorXd::Zero(times.size());
    s.std_error = mean_.size() ? std_error() : Eigen::VectorXd::Zero(times.size());
    s.n_trajectories = n_;
    return s;
}

void check_abort_fraction(std::int64_t aborted, std::int64_t n, double tolerance) {
    if (n <= 0) return;
    const double fraction = static_cast<double>(aborted) / static_cast<double>(n);
    if (fraction > tolerance) {
        std::ostringstream os;
        os << aborted << " trajectory aborts out of " << n << " exceed the tolerance fraction " << tolerance;
        throw SimulationError(os.str());
    }
}

namespace {

struct SeriesPartial {
    SeriesAccumulator flux, detections, tls, p0, p1, p2;
    std::vector<EventRecord> events;
    std::vector<std::uint64_t> seeds;
    std::int64_t aborted{0};
};

} // namespace

EnsembleResult run_series_ensemble(const Propagator& prop, const EnsembleSettings& settings) {
    if (settings.n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
    const std::int64_t n_steps = steps_for(settings.t_end, prop.dt());
    const ObservableSet& obs = settings.observables;

    auto work = [&](std::int64_t begin, std::int64_t end) {
        SeriesPartial part;
        for (std::int64_t i = begin; i < end; ++i) {
            std::uint64_t seed = 0;
            TrajectoryResult traj = run_with_retries(
                settings.master_seed, i, [&](std::uint64_t s) { return run_trajectory(prop, s, settings.t_end, obs); },
                seed, part.aborted);
            part.seeds.push_back(seed);
            if (obs.flux) {
                part.flux.add(traj.flux);
                Eigen::VectorXd det = Eigen::VectorXd::Zero(n_steps);
                for (const Event& ev : traj.events)
                    if (ev.kind == EventKind::OutputDetection) det(ev.step) = 1.0 / prop.dt();
                part.detections.add(det);
            }
            if (obs.tls_population) part.tls.add(traj.tls_population);
            if (obs.loop_probabilities) {
                part.p0.add(traj.p0);
                part.p1.add(traj.p1);
                part.p2.add(traj.p2);
            }
            if (settings.keep_events) part.events.push_back(std::move(traj.events));
        }
        return part;
    };

    std::vector<SeriesPartial> parts = run_chunked<SeriesPartial>(settings.n_trajectories, settings.threads, work);

    SeriesPartial total;
    for (SeriesPartial& part : parts) {
        total.flux.merge(part.flux);
        total.detections.merge(part.detections);
        total.tls.merge(part.tls);
        total.p0.merge(part.p0);
        total.p1.merge(part.p1);
        total.p2.merge(part.p2);
        total.aborted += part.aborted;
        total.seeds.insert(total.seeds.end(), part.seeds.begin(), part.seeds.end());
        for (auto& ev : part.events) total.events.push_back(std::move(ev));
    }
    check_abort_fraction(total.aborted, settings.n_trajectories, settings.abort_tolerance);

    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n_steps, prop.dt(), prop.dt() * n_steps);
    EnsembleResult result;
    result.flux = total.flux.finish(times);
    result.detection_rate = total.detections.finish(times);
    result.tls_population = total.tls.finish(times);
    result.p0 = total.p0.finish(times);
    result.p1 = total.p1.finish(times);
    result.p2 = total.p2.finish(times);
    result.events = std::move(total.events);
    result.bookkeeping.seeds = std::move(total.seeds);
    result.bookkeeping.aborted_attempts = total.aborted;
    return result;
}

} // namespace fbqt
