#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace polarcod {

// Seeded generator with platform-independent distributions (the standard
// library's distributions are implementation-defined).
class Rng {
   public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    // Standard normal via Box-Muller (no cached second variate).
    double normal();

    std::string state() const;
    void set_state(const std::string& text);

   private:
    std::mt19937_64 engine_;
};

}  // namespace polarcod
