#pragma once

#include <array>
#include <vector>

#include "nloch/field.hpp"
#include "nloch/state.hpp"

namespace nloch {

struct AdjointRegime;

struct CostSpec {
    Field phi_Omega;
    std::vector<Field> phi_Q;  // one field (constant in time) or one per macro level
    double beta_Omega = 0.0;
    double beta_Q = 0.0;
    ControlVector alpha{};
    ControlVector prior{};

    const Field& phi_Q_at(std::size_t n) const { return phi_Q.size() == 1 ? phi_Q[0] : phi_Q[n]; }
    // C1/C2 and shape checks against a trajectory layout; throws ShapeMismatch or ConfigInvalid.
    void validate(const Grid2D& g, std::size_t levels) const;
};

struct CostBreakdown {
    double tracking_T = 0;
    double tracking_Q = 0;
    double tikhonov = 0;
    double adapted_penalty = 0;
    double adapted_correction = 0;  // sign-indefinite terminal term of the joint adapted cost
    double total = 0;
};

// Components entering the adapted control penalty; eta is dropped in the eps and joint families.
std::array<bool, 4> adapted_penalty_mask(const AdjointRegime& r);

CostBreakdown eval_cost(const StateTrajectory& traj, const ControlVector& ctrl, const CostSpec& cost,
                        const AdjointRegime* adapted = nullptr);

// Partial derivatives of the cost with respect to the state at macro levels, as L2(Omega) gradients.
struct CostStateDerivative {
    std::vector<Field> dphi;  // per macro level
    Field dmu_T;              // terminal mu, empty when zero
};

CostStateDerivative cost_state_derivative(const StateTrajectory& traj, const CostSpec& cost,
                                          const AdjointRegime* adapted);

} // namespace nloch
