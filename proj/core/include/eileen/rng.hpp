#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace eileen {

/// Seeded generator whose output is identical across compilers and platforms.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so the uniform, integer and normal draws are done
/// here. Every model artifact that depends on randomness (forests, LSH
/// hyperplanes, user splits, simulators) goes through this type.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// SplitMix64 finaliser; derives independent stream seeds from (seed, stream).
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t const threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t const r = next();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        double const u2 = uniform();
        double const radius = std::sqrt(-2.0 * std::log(u1));
        double const angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t const j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace eileen
