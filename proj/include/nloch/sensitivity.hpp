#pragma once

#include <array>
#include <memory>

#include "nloch/cost.hpp"
#include "nloch/field.hpp"
#include "nloch/state.hpp"

namespace nloch {

struct Increment {
    double hP = 0.0;
    double hchi = 0.0;
    double heta = 0.0;
    double hC = 0.0;

    std::array<double, 4> as_array() const { return {hP, hchi, heta, hC}; }
};

// Which asymptotic family an adjoint belongs to and whether the adapted cost is in force.
// For adapted runs the state is a rung (eps, tau > 0) and `anchor` is the limit minimizer;
// tau_zero additionally needs the limit trajectory as `reference`.
struct AdjointRegime {
    Regime kind = Regime::full;
    bool adapted = false;
    ControlVector anchor{};
    std::shared_ptr<const StateTrajectory> reference;
};

// Default regime for a state: the regime implied by cfg, no adaptation.
AdjointRegime plain_regime(const ModelConfig& cfg);

// Throws RegimeViolation when the regime hypotheses fail.
void check_regime(const ModelConfig& cfg, const ControlVector& ctrl, const CostSpec& cost,
                  const AdjointRegime& regime);

// eta is frozen at zero in the eps = 0 and joint families.
bool eta_masked(const ModelConfig& cfg, const AdjointRegime& regime);

struct TangentTrajectory : Trajectory {
    std::vector<Field>& xi() { return comp[0]; }
    std::vector<Field>& nu() { return comp[1]; }
    std::vector<Field>& zeta() { return comp[2]; }
    const std::vector<Field>& xi() const { return comp[0]; }
    const std::vector<Field>& nu() const { return comp[1]; }
    const std::vector<Field>& zeta() const { return comp[2]; }
};

// Derivative of the discrete forward map in direction h, with zero initial data.
TangentTrajectory solve_tangent(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                                const Increment& h);

struct AdjointTrajectory : Trajectory {
    // Control pairings (P, chi, eta, C) of the state-dependent part of the gradient:
    // int sigma f p, int sigma q, -int Lap(phi) r, -int sigma f r.
    std::array<double, 4> pairings{};
    // |q(T)| / |beta_Omega (phi(T) - phi_Omega)|, the 1/tau amplification of the full regime.
    double qT_amplification = 0.0;

    std::vector<Field>& p() { return comp[0]; }
    std::vector<Field>& q() { return comp[1]; }
    std::vector<Field>& r() { return comp[2]; }
    const std::vector<Field>& p() const { return comp[0]; }
    const std::vector<Field>& q() const { return comp[1]; }
    const std::vector<Field>& r() const { return comp[2]; }
};

// Backward sweep; the stencil is the transpose of the forward IMEX step, so the pairings are the
// exact gradient of the discrete cost. Level 0 repeats level 1.
AdjointTrajectory solve_adjoint(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                                const CostSpec& cost, const AdjointRegime& regime);

// Both sides of the tangent/adjoint duality identity for direction h.
struct DualityReport {
    double lhs = 0;               // cost derivative paired with the tangent
    double rhs_colocated = 0;     // continuous pairings, adjoint piecewise constant in time
    double rhs_discrete = 0;      // pairings as produced by the backward sweep
    double residual_colocated = 0;
    double residual_discrete = 0;
};

DualityReport duality_check(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                            const CostSpec& cost, const AdjointRegime& regime, const Increment& h);

} // namespace nloch
