#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "nloch/field.hpp"
#include "nloch/setup.hpp"

namespace nloch::test {

inline Field random_field(const Grid2D& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    Field f(g);
    for (auto& v : f.values()) v = U(rng);
    return f;
}

// Reference physics on a coarser grid over the same horizon T = 0.2.
inline Scenario small_scenario(int n = 24, int nt = 40) {
    Scenario s = reference_scenario();
    s.grid.nx = n;
    s.grid.ny = n;
    s.grid.dt = s.grid.T() / nt;
    s.grid.nt = nt;
    return s;
}

inline double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

inline double max_abs(const Field& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

} // namespace nloch::test
