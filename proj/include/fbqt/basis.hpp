// basis.hpp: truncated TLS x loop basis with at most two photons, one per bin

#pragma once

#include <Eigen/Core>

#include <compare>

namespace fbqt {

enum class Tls : int { g = 0, e = 1 };

/// Photon configuration of the loop: vacuum, one photon in bin j, or photons in bins j < k.
struct Sector {
    int photons{0};
    int j{-1};
    int k{-1};

    static constexpr Sector vacuum() noexcept { return {0, -1, -1}; }
    static constexpr Sector one(int j) noexcept { return {1, j, -1}; }
    static constexpr Sector two(int j, int k) noexcept { return {2, j, k}; }

    bool occupies(int bin) const noexcept {
        return (photons >= 1 && j == bin) || (photons == 2 && k == bin);
    }

    friend constexpr auto operator<=>(const Sector&, const Sector&) = default;
};

struct BasisIndex {
    Tls tls{Tls::g};
    Sector sector{};

    friend constexpr bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

/// Flat layout is sector-major: flat = 2 * sector + tls, with sectors ordered
/// vacuum, one(0..N-1), then two(j,k) lexicographically in (j,k).
class Basis {
public:
    explicit Basis(int n_bins);

    int n_bins() const noexcept { return n_; }
    Eigen::Index sector_count() const noexcept { return sectors_; }
    Eigen::Index dim() const noexcept { return 2 * sectors_; }

    /// Checked lookup; throws std::out_of_range for bad bins and std::invalid_argument for j >= k.
    Eigen::Index index_of(Tls tls, Sector sector) const;
    BasisIndex at(Eigen::Index flat) const;

    // Unchecked sector offsets used on the hot path.
    Eigen::Index vacuum_sector() const noexcept { return 0; }
    Eigen::Index one_sector(int j) const noexcept { return 1 + j; }
    Eigen::Index two_sector(int j, int k) const noexcept {
        return 1 + n_ + pair_offset(j) + (k - j - 1);
    }
    /// First two-photon sector and the number of them.
    Eigen::Index two_begin() const noexcept { return 1 + n_; }
    Eigen::Index two_count() const noexcept { return static_cast<Eigen::Index>(n_) * (n_ - 1) / 2; }

    static Eigen::Index dimension(int n_bins) noexcept {
        const Eigen::Index n = n_bins;
        return 2 * (1 + n + n * (n - 1) / 2);
    }

private:
    Eigen::Index pair_offset(int j) const noexcept {
        return static_cast<Eigen::Index>(j) * n_ - static_cast<Eigen::Index>(j) * (j + 1) / 2;
    }

    int n_;
    Eigen::Index sectors_;
};

constexpr Eigen::Index flat(Eigen::Index sector, Tls tls) noexcept {
    return 2 * sector + static_cast<int>(tls);
}

} // namespace fbqt
