#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfra {

using Rng = std::mt19937_64;

/// Independent random streams. Each (seed, trial, purpose) triple gets its own
/// generator so that e.g. channel draws do not shift when pilot choices change.
enum class Stream : std::uint64_t {
    topology = 1,
    activation,
    reattempt,
    pilots,
    channel,
    noise,
    training,
    calibration,
    bench_setup,
};

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

inline Rng make_stream(std::uint64_t seed, std::uint64_t trial, Stream purpose) {
    const std::uint64_t a = detail::splitmix64(seed);
    const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(trial + 0x632be59bd9b4e019ULL));
    const std::uint64_t c = detail::splitmix64(b ^ static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

/// Circularly-symmetric complex Gaussian CN(0, variance).
inline std::complex<double> complex_normal(Rng& rng, double variance) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double s = std::sqrt(variance / 2.0);
    const double re = n01(rng);
    const double im = n01(rng);
    return {s * re, s * im};
}

inline bool bernoulli(Rng& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace cfra
