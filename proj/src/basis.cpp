#include "fbqt/basis.hpp"

#include <stdexcept>
#include <string>

namespace fbqt {

Basis::Basis(int n_bins) : n_(n_bins), sectors_(dimension(n_bins) / 2) {
    if (n_bins < 2) throw std::invalid_argument("Basis needs at least 2 bins");
}

Eigen::Index Basis::index_of(Tls tls, Sector sector) const {
    auto check_bin = [this](int b) {
        if (b < 0 || b >= n_)
            throw std::out_of_range("bin index " + std::to_string(b) + " outside [0, " +
                                    std::to_string(n_) + ")");
    };
    switch (sector.photons) {
    case 0:
        return flat(vacuum_sector(), tls);
    case 1:
        check_bin(sector.j);
        return flat(one_sector(sector.j), tls);
    case 2:
        check_bin(sector.j);
        check_bin(sector.k);
        if (sector.j >= sector.k)
            throw std::invalid_argument("two-photon sector requires j < k");
        return flat(two_sector(sector.j, sector.k), tls);
    default:
        throw std::invalid_argument("sector must hold 0, 1 or 2 photons");
    }
}

BasisIndex Basis::at(Eigen::Index index) const {
    if (index < 0 || index >= dim()) throw std::out_of_range("flat index outside basis");
    const Tls tls = (index % 2 == 0) ? Tls::g : Tls::e;
    Eigen::Index s = index / 2;
    if (s == 0) return {tls, Sector::vacuum()};
    if (s <= n_) return {tls, Sector::one(static_cast<int>(s - 1))};
    Eigen::Index r = s - two_begin();
    for (int j = 0; j < n_ - 1; ++j) {
        const Eigen::Index row = n_ - 1 - j;
        if (r < row) return {tls, Sector::two(j, j + 1 + static_cast<int>(r))};
        r -= row;
    }
    throw std::logic_error("unreachable basis index");
}

} // namespace fbqt
