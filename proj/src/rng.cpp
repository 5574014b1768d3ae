#include "polarcod/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "polarcod/error.hpp"

namespace polarcod {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (is.fail()) throw DataError("corrupt RNG state");
}

}  // namespace polarcod
