#pragma once

#include <string>
#include <vector>

#include "nloch/calibration.hpp"
#include "nloch/cost.hpp"
#include "nloch/sensitivity.hpp"
#include "nloch/state.hpp"

namespace nloch {

enum class SweepFamily { eps_to_zero, tau_to_zero, joint };

std::string to_string(SweepFamily f);
// Accepts eps, eps0, tau, tau0, joint.
SweepFamily parse_sweep_family(const std::string& s);
// Regime of the limit problem of a family.
Regime limit_regime(SweepFamily f);

struct Rung {
    double eps = 0.0;
    double tau = 0.0;
};

struct SweepPlan {
    SweepFamily family = SweepFamily::eps_to_zero;
    ModelConfig cfg;  // the parameter that does not vanish is taken from here
    ControlVector ctrl{};
    ControlBounds bounds{};
    CostSpec cost;
    std::vector<Rung> rungs;
    double rho = 1.0;  // joint family: eps/tau <= rho on every rung
    int threads = 1;
    bool floor = true;  // estimate the discretization floor from a dt/2 rerun of the last rung

    // Throws ConfigInvalid on a bad ladder and RegimeViolation when eta > 0 where it must vanish.
    void validate() const;
};

// start, start*ratio, ..., n values.
std::vector<double> geometric_ladder(double start, int n = 6, double ratio = 0.5);

// Ladder starting at min(eps0, tau0)/2; the joint family moves eps = tau together.
SweepPlan make_plan(SweepFamily family, const ModelConfig& base, const ControlVector& ctrl,
                    const ControlBounds& bounds, const CostSpec& cost, int rungs = 6, double ratio = 0.5);

// Tracking cost against a run of `base` at a perturbed control; beta_Omega = 0 for the tau family.
CostSpec default_sweep_cost(SweepFamily family, const ModelConfig& base, const ControlVector& ctrl);

// Per-level linear interpolation of a cost to a time grid refined by `factor`.
CostSpec refine_cost_in_time(const CostSpec& cost, int factor);

struct TableColumn {
    enum class Kind { enforced, vanishing, info };
    std::string name;
    Kind kind = Kind::info;
    std::vector<double> values;
};

struct ColumnCheck {
    std::string column;
    bool pass = false;
    std::string detail;
};

struct ConvergenceTable {
    std::string family;
    std::string object;  // state, adjoint or adapted-identify
    std::vector<Rung> rungs;
    std::vector<TableColumn> columns;
    double floor = 0.0;  // 0 when not estimated
    std::vector<std::string> notes;

    const TableColumn* column(const std::string& name) const;
    // Enforced columns nonincreasing within `slack` per rung; vanishing columns additionally end at or
    // below floor_factor * floor.
    std::vector<ColumnCheck> check(double slack = 0.05, double floor_factor = 10.0) const;
    bool passes(double slack = 0.05, double floor_factor = 10.0) const;
    void write_csv(const std::string& path) const;
};

ConvergenceTable sweep_states(const SweepPlan& plan);
ConvergenceTable sweep_adjoints(const SweepPlan& plan);
// Anchors on a limit-regime identify run, then identifies each rung with the adapted cost.
ConvergenceTable sweep_adapted_identify(const SweepPlan& plan, const IdentifyOptions& opts = {});

} // namespace nloch
