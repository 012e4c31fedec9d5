// validate.hpp: oracle comparisons and invariant checks
//
// Statistical checks compare |engine - reference| with k standard errors plus
// the deterministic gap between the reference and the exactly averaged
// collision map at the same dt (zero when the reference is that map).
// The sample standard error is widened by a one-trajectory resolution R / n
// (R bounds the per-trajectory swing of the observable): branches with
// probability below 1/n are usually absent from the sample and leave its
// spread at zero, while shifting the true mean by up to R / n.

#pragma once

#include "fbqt/dynamics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbqt {

struct CheckResult {
    std::string name;
    bool passed{false};
    std::string detail;
    double seconds{0.0};
};

struct ValidationOptions {
    std::uint64_t seed{20240917};
    int threads{1};
    ShiftFault fault{ShiftFault::None};
    double trajectory_scale{1.0};  // multiplies every trajectory count
};

struct ComparisonStats {
    double max_abs_z{0.0};  // worst |diff| / se where se > 0
    double worst_excess{0.0};  // max of |diff| - k se - gap; <= 0 means pass
    Eigen::Index worst_index{-1};
    Eigen::Index points{0};
};

/// Pointwise |value - reference| <= k * sqrt(se^2 + resolution^2) + gap + floor.
ComparisonStats compare_pointwise(const Eigen::VectorXd& value, const Eigen::VectorXd& se,
                                  const Eigen::VectorXd& reference, const Eigen::VectorXd& gap, double k,
                                  double floor, double resolution = 0.0);

// Oracle comparisons.
CheckResult check_markovian_population(const ValidationOptions& opt, std::int64_t n_trajectories);
CheckResult check_collision_oracle(const ValidationOptions& opt, std::int64_t n_trajectories);
CheckResult check_g2_zero(const ValidationOptions& opt);
CheckResult check_g2_regression(const ValidationOptions& opt, std::int64_t n_trajectories);
CheckResult check_g1_regression(const ValidationOptions& opt, std::int64_t n_trajectories);

// Invariants.
CheckResult check_norm_closure(const ValidationOptions& opt);
CheckResult check_probability_closure(const ValidationOptions& opt);
CheckResult check_counting_identity(const ValidationOptions& opt);
CheckResult check_shift_norm(const ValidationOptions& opt);
CheckResult check_dt_refinement(const ValidationOptions& opt, std::int64_t n_trajectories);
CheckResult check_threaded_determinism(const ValidationOptions& opt);
CheckResult check_large_dt_rejected();

/// Everything above at validation scale.
std::vector<CheckResult> run_validation(const ValidationOptions& opt);

} // namespace fbqt
