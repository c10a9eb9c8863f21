#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace treekit {

// All randomized operations in the toolkit draw from this wrapper so that a
// fixed seed reproduces byte-identical outputs. The engine (mt19937_64) is
// fully specified by the standard; the distributions below are hand-rolled
// because the std:: ones are implementation-defined.

/// Per-item seed for indexed work (series entries, augment stages, sweep
/// levels): base XOR item index. The engine's seeding scrambles the state,
/// so adjacent indices give uncorrelated streams.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return base ^ index;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Zero-mean Gaussian, Box-Muller with a cached spare.
    double gaussian(double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = 1.0 - next_unit();  // (0, 1], keeps log finite
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta) * sigma;
    }

    /// Uniform index in [0, n), unbiased via rejection.
    size_t index(size_t n) {
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<size_t>(x % n);
    }

    bool bernoulli(double p) { return next_unit() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace treekit
