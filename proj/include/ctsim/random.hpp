#ifndef CTSIM_RANDOM_HPP
#define CTSIM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ctsim {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for one (patient zero, replicate) task. Depends only on its arguments,
/// so results do not depend on scheduling order or worker count.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t patient_zero, std::uint64_t rep) noexcept
{
    return splitmix64(splitmix64(splitmix64(base) ^ patient_zero) ^ (rep + 0x632be59bd9b4e019ULL));
}

// Distribution helpers are written out rather than taken from <random> because
// the standard distributions are implementation-defined and would break
// bitwise reproducibility across toolchains. mt19937_64 itself is fully specified.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    /// Standard normal via Box-Muller (one draw per call, the sine branch is discarded).
    double normal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Poisson variate by Knuth's multiplication method; fine for small means.
    std::uint32_t poisson(double mean)
    {
        const double limit = std::exp(-mean);
        std::uint32_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    /// Uniform index in [0, n), n > 0.
    std::size_t index(std::size_t n)
    {
        const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

private:
    engine_type engine_;
};

} // namespace ctsim

#endif
