#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace lavg {

namespace detail {
inline std::uint64_t splitmix64_step(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Mixes (base_seed, a, b) into one 64-bit stream seed. This is the documented
/// splitting rule used by the harness: each (tuple_index, replication_index)
/// pair gets an independent stream, and the mixing is a plain splitmix64
/// absorption so it is reproducible from the three integers alone.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = base;
    (void)detail::splitmix64_step(state);
    state ^= 0x2545f4914f6cdd1dULL * (a + 1);
    (void)detail::splitmix64_step(state);
    state ^= 0x9e3779b97f4a7c15ULL * (b + 1);
    return detail::splitmix64_step(state);
}

/// Deterministic pseudo-random generator: xoshiro256++ state, seeded by
/// splitmix64 expansion of a 64-bit seed. Gaussian variates come from the
/// Marsaglia polar transform (the second variate of each pair is cached), so
/// a given seed reproduces the identical sample sequence bit-for-bit within
/// one build. `describe()` is recorded in run metadata.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64_step(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal variate (Marsaglia polar method).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double gaussian(double stddev) { return stddev * gaussian(); }

    void fill_gaussian(std::span<double> out, double stddev) {
        for (double& x : out) x = stddev * gaussian();
    }

    static std::string describe() { return "xoshiro256++ / splitmix64 seeding / Marsaglia polar gaussians"; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lavg
