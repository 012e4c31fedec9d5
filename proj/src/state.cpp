#include "fbqt/state.hpp"

#include "fbqt/params.hpp"

#include <cmath>

namespace fbqt {

StateVector initial_state(const Basis& basis) {
    StateVector psi = StateVector::Zero(basis.dim());
    psi(flat(basis.vacuum_sector(), Tls::g)) = 1.0;
    return psi;
}

double norm(const StateVector& psi) {
    return psi.norm();
}

double normalize(StateVector& psi) {
    const double n = psi.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw ZeroNormError("cannot normalize a state with norm " + std::to_string(n));
    psi /= n;
    return n;
}

StateVector normalized(StateVector psi) {
    normalize(psi);
    return psi;
}

bool all_finite(const StateVector& psi) {
    return psi.allFinite();
}

} // namespace fbqt
