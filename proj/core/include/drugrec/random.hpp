#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace drugrec {

// Seed for a named pipeline stage, derived from the master seed so each
// stage can be rerun on its own and still see the same stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage);

// 64-bit FNV-1a, used for stage seeds and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

// Portable random source. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so the ones needed here are
// implemented on top of the raw engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    double normal(double mean = 0.0, double stddev = 1.0);
    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace drugrec
