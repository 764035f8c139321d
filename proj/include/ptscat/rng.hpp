#pragma once

// Deterministic random streams on top of mt19937_64, which the standard pins
// bit-for-bit; the distributions are hand-rolled so seeded runs reproduce
// across platforms and standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace ptscat {

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : rng_(seed) {}

    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double gaussian() { // Box-Muller
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        have_ = true;
        spare_ = r * std::sin(2.0 * M_PI * u2);
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 rng_;
    bool have_ = false;
    double spare_ = 0.0;
};

} // namespace ptscat
