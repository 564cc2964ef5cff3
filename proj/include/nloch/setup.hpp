#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "nloch/kernel.hpp"
#include "nloch/state.hpp"

namespace nloch {

// Recipe for a field on any grid.
// kinds: constant(value), disk(inside, outside, cx, cy, radius, width) with a tanh profile,
// linear_x(value + amplitude*(x/lx - 1/2)), cosine(value + amplitude*cos(kx pi x/lx)cos(ky pi y/ly)),
// random(value + amplitude*U(-1,1), seeded), file(NLF1 path).
struct FieldRecipe {
    std::string kind = "constant";
    double value = 0.0;
    double inside = 1.0;
    double outside = -1.0;
    double cx = 0.5, cy = 0.5;
    double radius = 0.25;
    double width = 0.05;
    double amplitude = 0.0;
    int kx = 1, ky = 1;
    std::uint64_t seed = 1;
    std::string path;
};

Field make_field(const FieldRecipe& r, const Grid2D& g);

// Grid-independent description of a model; instantiated on any resolution by build_model.
struct Scenario {
    Grid2D grid{};
    double A = 0.0;
    double B = 0.0;
    double eps = 0.0;
    double tau = 0.0;
    KernelSpec kernel{};
    PotentialSpec potential{};
    ProliferationSpec f{};
    FieldRecipe phi0{}, sigma0{}, sigma_S{};
    // "consistent": mu0 = a phi0 - J*phi0 + F'(phi0); otherwise the recipe below.
    std::string mu0_mode = "consistent";
    FieldRecipe mu0{};
    double S_stab = -1.0;  // negative selects max(0, -min F'')
    double lin_tol = 1e-12;
    ControlVector ctrl{};
    ControlBounds bounds{};
};

ModelConfig build_model(const Scenario& s);
ModelConfig build_model(const Scenario& s, std::shared_ptr<const KernelOp> kop);

// Polynomial well, gaussian kernel, disk-shaped tumor in a nutrient gradient.
Scenario reference_scenario();
// Same geometry with the logarithmic potential.
Scenario reference_log_scenario();
// Settings for the relaxation sweeps: eta = 0, bounds inside the tau -> 0 smallness region.
Scenario relaxation_scenario();

// Longer horizon and a larger, faster-growing tumor so that all four controls leave a visible
// imprint on phi; the reference case barely separates P from C.
Scenario twin_scenario();

} // namespace nloch
