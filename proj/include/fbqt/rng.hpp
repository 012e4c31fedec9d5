// rng.hpp: per-trajectory random streams

#pragma once

#include <cstdint>
#include <random>

namespace fbqt {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stream seed for trajectory `index` of a run; `attempt` > 0 after a zero-norm abort.
constexpr std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index,
                                        std::uint32_t attempt = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ index) + attempt);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

} // namespace fbqt
