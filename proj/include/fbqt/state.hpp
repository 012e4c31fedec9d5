// state.hpp: dense state vector over the truncated basis

#pragma once

#include "fbqt/basis.hpp"

#include <Eigen/Core>

#include <complex>

namespace fbqt {

using cd = std::complex<double>;
using StateVector = Eigen::VectorXcd;

/// TLS in |g>, empty loop.
StateVector initial_state(const Basis& basis);

double norm(const StateVector& psi);

/// In-place; returns the norm the state had. Throws ZeroNormError on a zero or non-finite norm.
double normalize(StateVector& psi);

StateVector normalized(StateVector psi);

bool all_finite(const StateVector& psi);

} // namespace fbqt
