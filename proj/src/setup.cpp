#include "nloch/setup.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nloch/errors.hpp"
#include "nloch/io.hpp"

namespace nloch {

Field make_field(const FieldRecipe& r, const Grid2D& g) {
    using std::numbers::pi;
    if (r.kind == "constant") return Field(g, r.value);
    if (r.kind == "disk")
        return Field::from_function(g, [&](double x, double y) {
            const double d = std::hypot(x - r.cx * g.lx, y - r.cy * g.ly) - r.radius;
            const double s = 0.5 * (1.0 - std::tanh(d / (std::sqrt(2.0) * r.width)));
            return r.outside + (r.inside - r.outside) * s;
        });
    if (r.kind == "linear_x")
        return Field::from_function(g, [&](double x, double) { return r.value + r.amplitude * (x / g.lx - 0.5); });
    if (r.kind == "cosine")
        return Field::from_function(g, [&](double x, double y) {
            return r.value + r.amplitude * std::cos(r.kx * pi * x / g.lx) * std::cos(r.ky * pi * y / g.ly);
        });
    if (r.kind == "random") {
        std::mt19937_64 rng(r.seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Field f(g);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = r.value + r.amplitude * u(rng);
        return f;
    }
    if (r.kind == "file") {
        Field f = read_nlf1(r.path).field;
        if (!f.grid().same_space(g)) throw ConfigInvalid("field file " + r.path + " is on another grid");
        Field out(g);
        out.values() = f.values();
        return out;
    }
    throw ConfigInvalid("unknown field recipe kind '" + r.kind + "'");
}

ModelConfig build_model(const Scenario& s) { return build_model(s, build_kernel(s.kernel, s.grid)); }

ModelConfig build_model(const Scenario& s, std::shared_ptr<const KernelOp> kop) {
    ModelConfig m;
    m.grid = s.grid;
    m.grid.validate();
    m.A = s.A;
    m.B = s.B;
    m.eps = s.eps;
    m.tau = s.tau;
    m.kernel = s.kernel;
    m.kop = std::move(kop);
    m.potential = s.potential;
    m.f = s.f;
    m.phi0 = make_field(s.phi0, m.grid);
    m.sigma0 = make_field(s.sigma0, m.grid);
    m.sigma_S = make_field(s.sigma_S, m.grid);
    if (s.mu0_mode == "consistent") {
        const Field J = m.kop->convolve(m.phi0);
        const Field F1 = eval_F(m.potential, m.phi0, 1);
        m.mu0 = Field(m.grid);
        for (std::size_t k = 0; k < m.mu0.size(); ++k) m.mu0[k] = m.kop->a()[k] * m.phi0[k] - J[k] + F1[k];
    } else {
        m.mu0 = make_field(s.mu0, m.grid);
    }
    m.S_stab = s.S_stab >= 0.0 ? s.S_stab : default_stabilization(m.potential);
    m.lin_tol = s.lin_tol;
    m.check();
    return m;
}

Scenario reference_scenario() {
    Scenario s;
    s.grid = Grid2D{48, 48, 1.0, 1.0, 0.002, 100};
    s.A = 0.5;
    s.B = 1.0;
    s.eps = 1e-3;
    s.tau = 0.05;
    s.kernel = KernelSpec{KernelFamily::gaussian, 8.0, 0.5, 0.0};
    s.potential = PotentialSpec{};
    s.f = ProliferationSpec{};
    s.phi0.kind = "disk";
    s.phi0.radius = 0.25;
    s.phi0.width = 0.05;
    s.sigma0.kind = "linear_x";
    s.sigma0.value = 0.7;
    s.sigma0.amplitude = 0.5;
    s.sigma_S.kind = "constant";
    s.sigma_S.value = 1.0;
    s.ctrl = ControlVector{2.0, 0.5, 0.2, 1.0};
    s.bounds = ControlBounds{5.0, 2.0, 1.0, 5.0};
    return s;
}

Scenario reference_log_scenario() {
    Scenario s = reference_scenario();
    s.potential = PotentialSpec{PotentialFamily::logarithmic, 0.5, 1.0, 1e-4};
    s.phi0.inside = 0.8;
    s.phi0.outside = -0.8;
    return s;
}

Scenario relaxation_scenario() {
    Scenario s = reference_scenario();
    s.ctrl = ControlVector{2.0, 0.3, 0.0, 1.0};
    s.bounds = ControlBounds{5.0, 0.5, 0.3, 5.0};
    return s;
}

Scenario twin_scenario() {
    Scenario s = reference_scenario();
    s.grid.dt = 0.005;
    s.B = 0.1;
    s.phi0.radius = 0.35;
    s.ctrl = ControlVector{4.0, 1.5, 0.2, 3.0};
    return s;
}

} // namespace nloch
