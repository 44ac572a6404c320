#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace voxseg {

// Counter-based generator built on the splitmix64 mixing function.
// A draw is a pure function of (key, counter), so any consumer can replay a
// stream from its key alone and parallel consumers cannot reorder randomness.
// Documented in docs/determinism.md.
namespace rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-sensitive combination of key components into one 64-bit key.
inline uint64_t mix(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

class Stream {
public:
    explicit Stream(uint64_t key) : key_(key) {}
    Stream(std::initializer_list<uint64_t> parts) : key_(mix(parts)) {}

    uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_)); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Box-Muller; draws two uniforms per call.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Fisher-Yates. Shuffling a sorted sequence gives the canonical seeded
    // permutation used for partition splits and fold assignment.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

}  // namespace rng
}  // namespace voxseg
