#pragma once

#include <cstdint>
#include <random>

namespace vseg {

// splitmix64 step; used to derive independent sub-stream seeds from one root
// seed so that parallel consumers (patch i of volume v at epoch e, ...) never
// share or reorder a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
    std::uint64_t s = splitmix64(root ^ 0x5851f42d4c957f2dULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    s = splitmix64(s ^ d);
    return s;
}

// Seeded generator handed to every randomized operation. Wraps mt19937_64 so
// draw order is explicit and replayable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    // inclusive bounds
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    Rng fork(std::uint64_t tag) { return Rng(splitmix64(engine_() ^ tag)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace vseg
