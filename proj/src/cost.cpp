#include "nloch/cost.hpp"

#include <cmath>

#include "nloch/errors.hpp"
#include "nloch/sensitivity.hpp"

namespace nloch {

std::array<bool, 4> adapted_penalty_mask(const AdjointRegime& r) {
    if (r.kind == Regime::tau_zero) return {true, true, true, true};
    return {true, true, false, true};
}

namespace {

double sq_dist(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s * a.grid().cell_area();
}

} // namespace

void CostSpec::validate(const Grid2D& g, std::size_t levels) const {
    if (!(beta_Omega >= 0.0) || !(beta_Q >= 0.0)) throw ConfigInvalid("C2: cost weights must be nonnegative");
    const auto a = alpha.as_array();
    for (double v : a)
        if (!(v >= 0.0)) throw ConfigInvalid("C2: cost weights must be nonnegative");
    if (beta_Omega == 0.0 && beta_Q == 0.0 && a[0] == 0.0 && a[1] == 0.0 && a[2] == 0.0 && a[3] == 0.0)
        throw ConfigInvalid("C2: cost weights must not all vanish");
    if (!phi_Omega.grid().same_space(g) || phi_Omega.size() != g.cells())
        throw ShapeMismatch("cost: phi_Omega not on the state grid");
    if (!(phi_Q.size() == 1 || phi_Q.size() == levels))
        throw ShapeMismatch("cost: phi_Q must hold one field or one per time level");
    for (const auto& f : phi_Q)
        if (!f.grid().same_space(g) || f.size() != g.cells()) throw ShapeMismatch("cost: phi_Q not on the state grid");
    if (!phi_Omega.finite()) throw ConfigInvalid("C1: phi_Omega must be finite");
    for (const auto& f : phi_Q)
        if (!f.finite()) throw ConfigInvalid("C1: phi_Q must be finite");
}

CostBreakdown eval_cost(const StateTrajectory& traj, const ControlVector& ctrl, const CostSpec& cost,
                        const AdjointRegime* adapted) {
    cost.validate(traj.grid, traj.levels());
    const std::size_t N = traj.levels() - 1;
    CostBreakdown c;
    c.tracking_T = 0.5 * cost.beta_Omega * sq_dist(traj.phi()[N], cost.phi_Omega);
    const auto w = trapezoid_weights(traj.times);
    if (cost.beta_Q != 0.0) {
        double s = 0.0;
        for (std::size_t n = 0; n <= N; ++n) s += w[n] * sq_dist(traj.phi()[n], cost.phi_Q_at(n));
        c.tracking_Q = 0.5 * cost.beta_Q * s;
    }
    const auto x = ctrl.as_array(), a = cost.alpha.as_array(), p = cost.prior.as_array();
    for (int k = 0; k < 4; ++k) c.tikhonov += 0.5 * a[k] * (x[k] - p[k]) * (x[k] - p[k]);
    if (adapted && adapted->adapted) {
        const auto mask = adapted_penalty_mask(*adapted);
        const auto anc = adapted->anchor.as_array();
        for (int k = 0; k < 4; ++k)
            if (mask[k]) c.adapted_penalty += 0.5 * (x[k] - anc[k]) * (x[k] - anc[k]);
        if (adapted->kind == Regime::tau_zero) {
            if (!adapted->reference || adapted->reference->levels() != traj.levels())
                throw ShapeMismatch("adapted tau cost: reference trajectory missing or of another length");
            double s = 0.0;
            for (std::size_t n = 0; n <= N; ++n) s += w[n] * sq_dist(traj.phi()[n], adapted->reference->phi()[n]);
            c.adapted_penalty += 0.5 * s;
        }
        if (adapted->kind == Regime::joint_zero) {
            const Field d = traj.phi()[N] - cost.phi_Omega;
            c.adapted_correction = traj.eps * cost.beta_Omega * dot(traj.mu()[N], d);
        }
    }
    c.total = c.tracking_T + c.tracking_Q + c.tikhonov + c.adapted_penalty + c.adapted_correction;
    return c;
}

CostStateDerivative cost_state_derivative(const StateTrajectory& traj, const CostSpec& cost,
                                          const AdjointRegime* adapted) {
    cost.validate(traj.grid, traj.levels());
    const std::size_t N = traj.levels() - 1;
    const auto w = trapezoid_weights(traj.times);
    CostStateDerivative d;
    d.dphi.assign(N + 1, Field(traj.grid));
    for (std::size_t n = 1; n <= N; ++n) {
        Field& g = d.dphi[n];
        if (cost.beta_Q != 0.0) g.axpy(cost.beta_Q * w[n], traj.phi()[n] - cost.phi_Q_at(n));
        if (adapted && adapted->adapted && adapted->kind == Regime::tau_zero)
            g.axpy(w[n], traj.phi()[n] - adapted->reference->phi()[n]);
    }
    const Field diffT = traj.phi()[N] - cost.phi_Omega;
    d.dphi[N].axpy(cost.beta_Omega, diffT);
    if (adapted && adapted->adapted && adapted->kind == Regime::joint_zero && traj.eps != 0.0 &&
        cost.beta_Omega != 0.0) {
        d.dphi[N].axpy(traj.eps * cost.beta_Omega, traj.mu()[N]);
        d.dmu_T = (traj.eps * cost.beta_Omega) * diffT;
    }
    return d;
}

} // namespace nloch
