// ensemble.hpp: trajectory ensembles with index-ordered reduction

#pragma once

#include "fbqt/dynamics.hpp"
#include "fbqt/observables.hpp"
#include "fbqt/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace fbqt {

/// Running mean and sum of squared deviations (Welford), mergeable in a fixed order.
class SeriesAccumulator {
public:
    SeriesAccumulator() = default;
    explicit SeriesAccumulator(Eigen::Index length)
        : mean_(Eigen::VectorXd::Zero(length)), m2_(Eigen::VectorXd::Zero(length)) {}

    void add(const Eigen::VectorXd& x);
    void merge(const SeriesAccumulator& other);

    std::int64_t count() const noexcept { return n_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    /// Sample standard deviation / sqrt(n); zero for n < 2.
    Eigen::VectorXd std_error() const;

    EnsembleSeries finish(const Eigen::VectorXd& times) const;

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd m2_;
    std::int64_t n_{0};
};

/// Maximum reseeding attempts for a single trajectory before the run is declared failed.
inline constexpr std::uint32_t kMaxAttempts = 16;

struct TrajectoryBookkeeping {
    std::vector<std::uint64_t> seeds;  // seed actually used, by trajectory index
    std::int64_t aborted_attempts{0};
};

/// Runs fn(seed) for trajectory `index`, reseeding after ZeroNormError. Records the seed used.
template <typename Fn>
auto run_with_retries(std::uint64_t master_seed, std::int64_t index, Fn&& fn, std::uint64_t& seed_used,
                      std::int64_t& aborted) {
    for (std::uint32_t attempt = 0;; ++attempt) {
        const std::uint64_t seed = trajectory_seed(master_seed, static_cast<std::uint64_t>(index), attempt);
        try {
            auto result = fn(seed);
            seed_used = seed;
            return result;
        } catch (const ZeroNormError&) {
            ++aborted;
            if (attempt + 1 >= kMaxAttempts) throw;
        }
    }
}

/// Throws SimulationError when aborted / n exceeds the tolerance fraction.
void check_abort_fraction(std::int64_t aborted, std::int64_t n, double tolerance);

struct EnsembleSettings {
    std::int64_t n_trajectories{1000};
    double t_end{10.0};
    std::uint64_t master_seed{1};
    int threads{1};
    ObservableSet observables{};
    bool keep_events{false};
    double abort_tolerance{1e-3};
};

struct EnsembleResult {
    EnsembleSeries flux;
    EnsembleSeries detection_rate;  // detections per step / dt
    EnsembleSeries tls_population;
    EnsembleSeries p0, p1, p2;
    std::vector<EventRecord> events;  // by trajectory index, when kept
    TrajectoryBookkeeping bookkeeping;
};

EnsembleResult run_series_ensemble(const Propagator& prop, const EnsembleSettings& settings);

} // namespace fbqt
