#pragma once

// Operators shared by the forward step, its tangent and its transpose.

#include <memory>

#include "nloch/linalg.hpp"
#include "nloch/state.hpp"

namespace nloch::detail {

struct StepKit {
    const ModelConfig& cfg;
    ControlVector ctrl;
    double dt;
    std::shared_ptr<const NeumannSpectral> spec;
    Field D;         // tau/dt + a + S
    Field Dinv;
    ShiftedLaplacianSolver phi_solver;  // (eps + 1/D)/dt - Lap

    StepKit(const ModelConfig& cfg, const ControlVector& ctrl, double dt,
            std::shared_ptr<const NeumannSpectral> spec);

    // 1/dt + B + C f(phi^n) - Lap
    ShiftedLaplacianSolver sigma_solver(const Field& fn) const;
};

std::shared_ptr<const NeumannSpectral> spectral_for(const Grid2D& g);

// All fine levels of a trajectory in time order, without copies.
struct FineLevels {
    std::vector<const Field*> phi, mu, sigma;
    std::vector<double> dt;  // dt[l] is the length of the step from level l to l+1
    std::vector<int> macro;  // macro index of each level, -1 for inner levels
};

FineLevels flatten(const StateTrajectory& st);

// Caches one kit per distinct step length.
class KitCache {
public:
    KitCache(const ModelConfig& cfg, const ControlVector& ctrl) : cfg_(cfg), ctrl_(ctrl), spec_(spectral_for(cfg.grid)) {}
    const StepKit& get(double dt);

private:
    const ModelConfig& cfg_;
    ControlVector ctrl_;
    std::shared_ptr<const NeumannSpectral> spec_;
    std::vector<std::pair<double, std::unique_ptr<StepKit>>> kits_;
};

} // namespace nloch::detail
