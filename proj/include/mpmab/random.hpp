#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace mpmab {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds any number of words into one key. Order-sensitive.
template <typename... Words>
constexpr std::uint64_t hash_words(std::uint64_t seed, Words... words) noexcept {
    std::uint64_t h = mix64(seed);
    ((h = mix64(h ^ static_cast<std::uint64_t>(words))), ...);
    return h;
}

/// Tags for the independent sub-streams spawned from one master seed.
enum class StreamTag : std::uint64_t {
    Instance = 0x11,
    Schedule = 0x22,
    Reward = 0x33,
    Policy = 0x44,
    Episode = 0x55,
};

inline std::uint64_t substream_seed(std::uint64_t master, StreamTag tag) noexcept {
    return hash_words(master, static_cast<std::uint64_t>(tag));
}

/// Counter-based generator: the i-th output depends only on (key, i).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Uniform in [0,1) from the top 53 bits of one draw.
template <typename Urbg>
double uniform01(Urbg& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in the open interval (0,1); safe to feed to a quantile function.
inline double open_uniform(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal quantile via Acklam's rational approximation (relative
/// error below 1.2e-9 over the whole open interval).
inline double normal_quantile(double u) noexcept {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double low = 0.02425;

    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    if (u >= 1.0) return std::numeric_limits<double>::infinity();

    if (u < low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u <= 1.0 - low) {
        const double q = u - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

/// Source of per-decision uniforms keyed by (round, player, slot). Slots
/// 0..K-1 are arms; slot K is reserved for random tie-breaking.
class DecisionNoise {
public:
    virtual ~DecisionNoise() = default;
    virtual double uniform(std::int64_t round, int player, int slot) const = 0;

    double standard_normal(std::int64_t round, int player, int slot) const {
        return normal_quantile(uniform(round, player, slot));
    }
};

/// Production noise: a pure function of (seed, round, player, slot).
class KeyedNoise final : public DecisionNoise {
public:
    explicit KeyedNoise(std::uint64_t seed) noexcept : seed_(seed) {}

    double uniform(std::int64_t round, int player, int slot) const override {
        return open_uniform(hash_words(seed_, round, player, slot));
    }

private:
    std::uint64_t seed_;
};

/// Returns the same value for every key. Used to pin samples at a posterior
/// mean (value 0.5) or to script decisions in tests.
class ConstantNoise final : public DecisionNoise {
public:
    explicit ConstantNoise(double value) noexcept : value_(value) {}
    double uniform(std::int64_t, int, int) const override { return value_; }

private:
    double value_;
};

}  // namespace mpmab
