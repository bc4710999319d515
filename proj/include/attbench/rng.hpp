#pragma once

#include <cstdint>
#include <random>

namespace attbench {

// splitmix64, used only to derive well-separated seeds for sub-streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

// Deterministic random source. Each logical consumer (simulator, net init,
// epoch shuffling, ...) gets its own fork so draws in one place never shift
// the sequence seen by another.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }

    double gauss(double mean = 0.0, double stddev = 1.0) {
        if (stddev <= 0.0) return mean;
        std::normal_distribution<double> d(mean, stddev);
        return d(engine_);
    }

    // uniform integer in [0, n)
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(engine_);
    }

    std::uint64_t next_u64() { return engine_(); }

    std::uint64_t seed() const { return seed_; }

    // Pure function of (seed, stream): fork order does not matter.
    Rng fork(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace attbench
