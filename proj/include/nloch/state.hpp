#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "nloch/field.hpp"
#include "nloch/kernel.hpp"
#include "nloch/potential.hpp"

namespace nloch {

struct ControlVector {
    double P = 0.0;
    double chi = 0.0;
    double eta = 0.0;
    double C = 0.0;

    std::array<double, 4> as_array() const { return {P, chi, eta, C}; }
    static ControlVector from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
};

struct ControlBounds {
    double P_max = 1.0;
    double chi_max = 1.0;
    double eta_max = 1.0;
    double C_max = 1.0;

    std::array<double, 4> as_array() const { return {P_max, chi_max, eta_max, C_max}; }
    bool contains(const ControlVector& c) const;
    double diameter() const;
};

enum class Regime { full, eps_zero, tau_zero, joint_zero };

std::string to_string(Regime r);

struct ModelConfig {
    Grid2D grid{};
    double A = 0.0;
    double B = 0.0;
    Field sigma_S;
    double eps = 0.0;
    double tau = 0.0;
    KernelSpec kernel{};
    std::shared_ptr<const KernelOp> kop;
    PotentialSpec potential{};
    ProliferationSpec f{};
    Field phi0, mu0, sigma0;
    double S_stab = 0.0;
    double lin_tol = 1e-12;
    int max_halvings = 8;

    // Regime implied by which of eps, tau vanish.
    Regime regime() const;
    // Shape and sign checks; throws ConfigInvalid.
    void check() const;
};

struct StepFields {
    Field phi, mu, sigma;
};

struct StepDiagnostics {
    double mass_before = 0;  // integral of eps*mu + phi
    double mass_after = 0;
    double source = 0;       // dt * integral of (P sigma - A) f(phi)
    double mass_rel_residual = 0;
    double phi_inf = 0;
    double sigma_min = 0;
    double sigma_max = 0;
    int substeps = 1;
    int cg_iterations = 0;
};

// Forward trajectory. Macro levels live in the base; macro steps that needed dt halving keep
// their intermediate fine levels in `inner` so that tangent and adjoint can retrace them.
struct StateTrajectory : Trajectory {
    double eps = 0.0;
    double tau = 0.0;
    double dt = 0.0;  // macro step
    std::vector<int> substeps;
    std::vector<std::vector<StepFields>> inner;
    std::vector<StepDiagnostics> diagnostics;

    std::vector<Field>& phi() { return comp[0]; }
    std::vector<Field>& mu() { return comp[1]; }
    std::vector<Field>& sigma() { return comp[2]; }
    const std::vector<Field>& phi() const { return comp[0]; }
    const std::vector<Field>& mu() const { return comp[1]; }
    const std::vector<Field>& sigma() const { return comp[2]; }

    double max_phi_inf() const;
    double min_sigma() const;
    double max_sigma() const;
    double max_mass_residual() const;
};

// One IMEX step of length dt. Throws StepRejected.
StepFields step_state(const ModelConfig& cfg, const ControlVector& ctrl, const Field& phi, const Field& mu,
                      const Field& sigma, double dt, StepDiagnostics* diag = nullptr);

// Full forward solve on cfg.grid. Throws RegimeViolation, StepRejected.
StateTrajectory solve_state(const ModelConfig& cfg, const ControlVector& ctrl);

// Smallness condition of the tau = 0 regime: (chi+eta+4 c_a chi)^2 < 8 c_a C0 + 4 chi eta.
struct TauZeroSmallness {
    double lhs = 0, rhs = 0;
    bool ok = false;
};
TauZeroSmallness tau_zero_smallness(const ModelConfig& cfg, const ControlVector& ctrl);

} // namespace nloch
