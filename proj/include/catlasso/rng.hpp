#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace catlasso {

/**
 * Seedable, cross-platform deterministic random generator.
 *
 * Wraps std::mt19937_64 (whose output sequence is fully specified by the
 * standard) and implements its own uniform/normal/shuffle primitives, since
 * the standard distribution classes are implementation-defined and would
 * break bit-for-bit reproducibility across toolchains.
 *
 * Stream splitting: child(k) derives an independent stream from the parent
 * seed via SplitMix64 mixing. The simulation harness assigns replication r
 * the stream child(r), so runs are reproducible regardless of how many
 * worker threads execute the replications.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent child stream; deterministic function of (seed, stream).
    Rng child(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw = gen_();
        while (draw >= limit) draw = gen_();
        return draw % bound;
    }

    /// Fisher-Yates shuffle using below(); deterministic given the stream.
    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// k distinct indices drawn uniformly from {0, ..., pool - 1}.
    std::vector<int> distinct(int k, int pool) {
        std::vector<int> all(static_cast<std::size_t>(pool));
        for (int i = 0; i < pool; ++i) all[static_cast<std::size_t>(i)] = i;
        shuffle(all);
        all.resize(static_cast<std::size_t>(k));
        return all;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace catlasso
