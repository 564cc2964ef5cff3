#pragma once

#include <array>
#include <vector>

#include "nloch/calibration.hpp"
#include "nloch/sensitivity.hpp"

namespace nloch {

// Taylor remainder |phi(c + s h) - phi(c) - s xi| in L2(Q) for a decreasing list of s.
struct TaylorReport {
    std::vector<double> steps;
    std::vector<double> remainder;
    std::vector<double> slopes;  // log2-type slope between consecutive steps, size steps - 1
    double min_slope = 0;
    double max_slope = 0;
};

TaylorReport taylor_test(const ModelConfig& cfg, const ControlVector& ctrl, const Increment& h,
                         const std::vector<double>& steps = {1e-2, 5e-3, 2.5e-3});

// Reduced gradient against central differences of the reduced cost, componentwise.
// Masked components are skipped (free = false, rel_error = 0).
struct FdComponent {
    bool free = true;
    double gradient = 0;
    double fd = 0;
    double step = 0;
    double rel_error = 0;
};

struct FdReport {
    std::array<FdComponent, 4> comp{};
    double max_rel_error = 0;
};

// Step for component k is rel_step * max(1, |c_k|).
FdReport fd_gradient_check(const ModelConfig& cfg, const CostSpec& cost, const ControlVector& ctrl,
                           const AdjointRegime& regime, double rel_step = 1e-4);

// Default perturbation direction for the tangent and duality checks; eta is zeroed when masked.
Increment default_direction(const ModelConfig& cfg, const AdjointRegime& regime);

} // namespace nloch
