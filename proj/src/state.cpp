#include "nloch/state.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "nloch/errors.hpp"
#include "step_kit.hpp"

namespace nloch {

bool ControlBounds::contains(const ControlVector& c) const {
    const auto x = c.as_array();
    const auto u = as_array();
    for (int k = 0; k < 4; ++k)
        if (!(x[k] >= 0.0 && x[k] <= u[k])) return false;
    return true;
}

double ControlBounds::diameter() const {
    double s = 0.0;
    for (double u : as_array()) s += u * u;
    return std::sqrt(s);
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::full: return "full";
    case Regime::eps_zero: return "eps0";
    case Regime::tau_zero: return "tau0";
    default: return "joint";
    }
}

Regime ModelConfig::regime() const {
    if (eps == 0.0 && tau == 0.0) return Regime::joint_zero;
    if (eps == 0.0) return Regime::eps_zero;
    if (tau == 0.0) return Regime::tau_zero;
    return Regime::full;
}

void ModelConfig::check() const {
    grid.validate();
    if (!kop || !kop->grid().same_space(grid)) throw ConfigInvalid("model: kernel operator missing or on another grid");
    for (const Field* f : {&sigma_S, &phi0, &mu0, &sigma0})
        if (!f->grid().same_space(grid) || f->size() != grid.cells() || !f->finite())
            throw ConfigInvalid("model: initial data or sigma_S not a finite field on the model grid");
    if (!(A >= 0.0) || !(B >= 0.0)) throw ConfigInvalid("A1: A and B must be nonnegative");
    if (!(eps >= 0.0) || !(tau >= 0.0)) throw ConfigInvalid("eps and tau must be nonnegative");
    if (!(S_stab >= 0.0)) throw ConfigInvalid("S_stab must be nonnegative");
    if (sigma_S.min() < 0.0 || sigma_S.max() > 1.0) throw ConfigInvalid("A3: sigma_S must lie in [0,1]");
    potential.validate();
    f.validate();
}

double StateTrajectory::max_phi_inf() const {
    double m = 0.0;
    for (const auto& f : phi())
        for (double v : f.values()) m = std::max(m, std::abs(v));
    for (const auto& step : inner)
        for (const auto& s : step)
            for (double v : s.phi.values()) m = std::max(m, std::abs(v));
    return m;
}

double StateTrajectory::min_sigma() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : sigma()) m = std::min(m, f.min());
    return m;
}

double StateTrajectory::max_sigma() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& f : sigma()) m = std::max(m, f.max());
    return m;
}

double StateTrajectory::max_mass_residual() const {
    double m = 0.0;
    for (const auto& d : diagnostics) m = std::max(m, d.mass_rel_residual);
    return m;
}

namespace detail {

std::shared_ptr<const NeumannSpectral> spectral_for(const Grid2D& g) {
    return std::make_shared<const NeumannSpectral>(g);
}

StepKit::StepKit(const ModelConfig& c, const ControlVector& u, double h, std::shared_ptr<const NeumannSpectral> s)
    : cfg(c), ctrl(u), dt(h), spec(std::move(s)), D(c.grid), Dinv(c.grid),
      phi_solver(spec, Field(c.grid, 1.0), c.lin_tol) {
    const Field& a = cfg.kop->a();
    Field coef(cfg.grid);
    for (std::size_t k = 0; k < D.size(); ++k) {
        D[k] = cfg.tau / dt + a[k] + cfg.S_stab;
        if (!(D[k] > 0.0))
            throw RegimeViolation("tau/dt + a + S_stab must be positive; raise S_stab or use a kernel with a > 0");
        Dinv[k] = 1.0 / D[k];
        coef[k] = (cfg.eps + Dinv[k]) / dt;
    }
    phi_solver = ShiftedLaplacianSolver(spec, std::move(coef), cfg.lin_tol);
}

ShiftedLaplacianSolver StepKit::sigma_solver(const Field& fn) const {
    Field c(cfg.grid);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = 1.0 / dt + cfg.B + ctrl.C * fn[k];
    return ShiftedLaplacianSolver(spec, std::move(c), cfg.lin_tol);
}

FineLevels flatten(const StateTrajectory& st) {
    FineLevels fl;
    const std::size_t nt = st.levels() - 1;
    auto push = [&](const Field& p, const Field& m, const Field& s, int macro) {
        fl.phi.push_back(&p);
        fl.mu.push_back(&m);
        fl.sigma.push_back(&s);
        fl.macro.push_back(macro);
    };
    push(st.phi()[0], st.mu()[0], st.sigma()[0], 0);
    for (std::size_t n = 0; n < nt; ++n) {
        const int s = n < st.substeps.size() ? st.substeps[n] : 1;
        const double h = (st.dt > 0.0 ? st.dt : st.times[n + 1] - st.times[n]) / s;
        if (n < st.inner.size())
            for (const auto& lv : st.inner[n]) push(lv.phi, lv.mu, lv.sigma, -1);
        push(st.phi()[n + 1], st.mu()[n + 1], st.sigma()[n + 1], static_cast<int>(n + 1));
        for (int k = 0; k < s; ++k) fl.dt.push_back(h);
    }
    return fl;
}

const StepKit& KitCache::get(double dt) {
    for (const auto& [h, kit] : kits_)
        if (h == dt) return *kit;
    kits_.emplace_back(dt, std::make_unique<StepKit>(cfg_, ctrl_, dt, spec_));
    return *kits_.back().second;
}

} // namespace detail

namespace {

StepFields step_with_kit(const detail::StepKit& kit, const Field& phi, const Field& mu, const Field& sigma,
                         StepDiagnostics* diag) {
    const ModelConfig& cfg = kit.cfg;
    const ControlVector& u = kit.ctrl;
    const double dt = kit.dt;
    StepFields out;
    try {
        const Field fn = eval_f(cfg.f, phi, 0);
        const Field F1 = eval_F(cfg.potential, phi, 1);
        const Field lap_phi = laplacian_neumann(phi);
        const Field Jphi = cfg.kop->convolve(phi);

        CgResult info_s, info_p;
        Field rhs_s(cfg.grid);
        for (std::size_t k = 0; k < rhs_s.size(); ++k)
            rhs_s[k] = sigma[k] / dt + cfg.B * cfg.sigma_S[k] - u.eta * lap_phi[k];
        out.sigma = kit.sigma_solver(fn).solve(rhs_s, &info_s);

        Field g(cfg.grid), src(cfg.grid);
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] = -(cfg.tau / dt + cfg.S_stab) * phi[k] - Jphi[k] + F1[k] - u.chi * out.sigma[k];
            src[k] = (u.P * out.sigma[k] - cfg.A) * fn[k];
        }
        const Field lap_g = laplacian_neumann(g);
        Field rhs(cfg.grid);
        for (std::size_t k = 0; k < rhs.size(); ++k)
            rhs[k] = src[k] + phi[k] / dt + (cfg.eps / dt) * (mu[k] - g[k]) + lap_g[k];
        const Field w = kit.phi_solver.solve(rhs, &info_p);
        out.mu = w + g;
        out.phi = hadamard(w, kit.Dinv);

        if (!out.phi.finite() || !out.mu.finite() || !out.sigma.finite())
            throw StepRejected("non-finite values after step");
        if (cfg.potential.family == PotentialFamily::logarithmic) {
            const double lim = 1.0 - cfg.potential.delta_clip;
            for (double v : out.phi.values())
                if (!(std::abs(v) < lim)) throw StepRejected("separation lost: |phi| reached 1 - delta_clip");
        }
        if (diag) {
            diag->mass_before = cfg.eps * integrate(mu) + integrate(phi);
            diag->mass_after = cfg.eps * integrate(out.mu) + integrate(out.phi);
            diag->source = dt * integrate(src);
            double l1 = 0.0;
            for (std::size_t k = 0; k < out.phi.size(); ++k) l1 += std::abs(cfg.eps * out.mu[k] + out.phi[k]);
            l1 *= cfg.grid.cell_area();
            diag->mass_rel_residual =
                std::abs(diag->mass_after - diag->mass_before - diag->source) / std::max(l1, 1e-300);
            diag->phi_inf = std::max(std::abs(out.phi.min()), std::abs(out.phi.max()));
            diag->sigma_min = out.sigma.min();
            diag->sigma_max = out.sigma.max();
            diag->cg_iterations = info_s.iterations + info_p.iterations;
        }
    } catch (const DomainViolation& e) {
        throw StepRejected(e.what());
    } catch (const NonConvergence& e) {
        throw StepRejected(e.what());
    }
    return out;
}

void check_controls(const ModelConfig& cfg, const ControlVector& u) {
    for (double v : u.as_array())
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigInvalid("controls must be finite and nonnegative");
    if (cfg.eps == 0.0 && u.eta != 0.0)
        throw RegimeViolation("eps = 0 requires eta = 0 (eta_tau = 0 hypothesis of the eps -> 0 limit)");
}

} // namespace

StepFields step_state(const ModelConfig& cfg, const ControlVector& ctrl, const Field& phi, const Field& mu,
                      const Field& sigma, double dt, StepDiagnostics* diag) {
    check_controls(cfg, ctrl);
    detail::StepKit kit(cfg, ctrl, dt, detail::spectral_for(cfg.grid));
    return step_with_kit(kit, phi, mu, sigma, diag);
}

TauZeroSmallness tau_zero_smallness(const ModelConfig& cfg, const ControlVector& ctrl) {
    TauZeroSmallness s;
    const double ca = cfg.kop->c_a();
    const double C0 = coercivity_check(*cfg.kop, cfg.potential).C0;
    const double t = ctrl.chi + ctrl.eta + 4.0 * ca * ctrl.chi;
    s.lhs = t * t;
    s.rhs = 8.0 * ca * C0 + 4.0 * ctrl.chi * ctrl.eta;
    s.ok = s.lhs < s.rhs && ctrl.chi < std::sqrt(ca);
    return s;
}

StateTrajectory solve_state(const ModelConfig& cfg, const ControlVector& ctrl) {
    cfg.check();
    check_controls(cfg, ctrl);
    if (cfg.tau == 0.0) {
        const auto s = tau_zero_smallness(cfg, ctrl);
        if (!s.ok)
            spdlog::warn("tau = 0 smallness condition fails: {:.6g} >= {:.6g}", s.lhs, s.rhs);
    }
    const Grid2D& g = cfg.grid;
    StateTrajectory st;
    st.resize(g, static_cast<std::size_t>(g.nt) + 1);
    st.roles = {"phi", "mu", "sigma"};
    st.eps = cfg.eps;
    st.tau = cfg.tau;
    st.dt = g.dt;
    st.substeps.assign(g.nt, 1);
    st.inner.assign(g.nt, {});
    st.diagnostics.assign(g.nt, {});
    for (int n = 0; n <= g.nt; ++n) st.times[n] = n * g.dt;
    st.phi()[0] = cfg.phi0;
    st.mu()[0] = cfg.mu0;
    st.sigma()[0] = cfg.sigma0;

    auto spec = detail::spectral_for(g);
    std::vector<std::unique_ptr<detail::StepKit>> kits;  // kits[h] for dt / 2^h
    auto kit_for = [&](int h) -> const detail::StepKit& {
        while (static_cast<int>(kits.size()) <= h)
            kits.push_back(std::make_unique<detail::StepKit>(cfg, ctrl, g.dt / std::ldexp(1.0, static_cast<int>(kits.size())), spec));
        return *kits[h];
    };

    for (int n = 0; n < g.nt; ++n) {
        bool done = false;
        std::string last_error;
        for (int h = 0; h <= cfg.max_halvings && !done; ++h) {
            const int s = 1 << h;
            try {
                std::vector<StepFields> levels;
                StepFields cur{st.phi()[n], st.mu()[n], st.sigma()[n]};
                StepDiagnostics agg, d;
                agg.mass_before = cfg.eps * integrate(cur.mu) + integrate(cur.phi);
                for (int k = 0; k < s; ++k) {
                    cur = step_with_kit(kit_for(h), cur.phi, cur.mu, cur.sigma, &d);
                    agg.source += d.source;
                    agg.cg_iterations += d.cg_iterations;
                    if (k + 1 < s) levels.push_back(cur);
                }
                agg.mass_after = d.mass_after;
                double l1 = 0.0;
                for (std::size_t k = 0; k < cur.phi.size(); ++k) l1 += std::abs(cfg.eps * cur.mu[k] + cur.phi[k]);
                l1 *= g.cell_area();
                agg.mass_rel_residual = std::abs(agg.mass_after - agg.mass_before - agg.source) / std::max(l1, 1e-300);
                agg.phi_inf = d.phi_inf;
                agg.sigma_min = d.sigma_min;
                agg.sigma_max = d.sigma_max;
                agg.substeps = s;
                st.phi()[n + 1] = std::move(cur.phi);
                st.mu()[n + 1] = std::move(cur.mu);
                st.sigma()[n + 1] = std::move(cur.sigma);
                st.inner[n] = std::move(levels);
                st.substeps[n] = s;
                st.diagnostics[n] = agg;
                done = true;
                if (h > 0) spdlog::info("step {} accepted with {} substeps", n, s);
            } catch (const StepRejected& e) {
                last_error = e.what();
                spdlog::debug("step {} rejected at {} substeps: {}", n, s, last_error);
            }
        }
        if (!done)
            throw StepRejected("step " + std::to_string(n) + " failed after " + std::to_string(cfg.max_halvings) +
                               " dt halvings: " + last_error);
        spdlog::trace("step {} mass {:.17g} source {:.3e} |phi|inf {:.6g} sigma [{:.6g}, {:.6g}]", n,
                      st.diagnostics[n].mass_after, st.diagnostics[n].source, st.diagnostics[n].phi_inf,
                      st.diagnostics[n].sigma_min, st.diagnostics[n].sigma_max);
    }
    return st;
}

} // namespace nloch
