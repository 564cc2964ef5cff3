#include "nloch/sensitivity.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "nloch/errors.hpp"
#include "step_kit.hpp"

namespace nloch {

AdjointRegime plain_regime(const ModelConfig& cfg) {
    AdjointRegime r;
    r.kind = cfg.regime();
    return r;
}

bool eta_masked(const ModelConfig& cfg, const AdjointRegime& regime) {
    return cfg.eps == 0.0 || regime.kind == Regime::eps_zero || regime.kind == Regime::joint_zero;
}

void check_regime(const ModelConfig& cfg, const ControlVector& ctrl, const CostSpec& cost,
                  const AdjointRegime& regime) {
    const Regime state = cfg.regime();
    if (state != Regime::full && state != regime.kind)
        throw RegimeViolation("adjoint regime " + to_string(regime.kind) + " does not match the " +
                              to_string(state) + " state");
    if (eta_masked(cfg, regime) && ctrl.eta != 0.0)
        throw RegimeViolation("the eps -> 0 and joint families require eta = 0");
    if (regime.kind == Regime::tau_zero && cost.beta_Omega != 0.0)
        throw RegimeViolation("the tau -> 0 family requires beta_Omega = 0");
    if (regime.adapted) {
        if (regime.kind == Regime::full) throw RegimeViolation("adapted costs need a limit family");
        if (regime.kind == Regime::tau_zero && !regime.reference)
            throw RegimeViolation("adapted tau -> 0 cost needs the limit trajectory");
        if (regime.kind == Regime::joint_zero && !cost.phi_Omega.finite())
            throw RegimeViolation("adapted joint cost needs beta_Omega phi_Omega in V");
    }
}

TangentTrajectory solve_tangent(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                                const Increment& h) {
    const auto fl = detail::flatten(state);
    detail::KitCache kits(cfg, ctrl);
    TangentTrajectory tg;
    tg.resize(state.grid, state.levels());
    tg.roles = {"xi", "nu", "zeta"};
    tg.times = state.times;
    const Grid2D& g = state.grid;
    Field xi(g), nu(g), zeta(g);
    const std::size_t L = fl.dt.size();
    for (std::size_t l = 0; l < L; ++l) {
        const double dt = fl.dt[l];
        const auto& kit = kits.get(dt);
        const Field& phi = *fl.phi[l];
        const Field& sig1 = *fl.sigma[l + 1];
        const Field fn = eval_f(cfg.f, phi, 0);
        const Field f1 = eval_f(cfg.f, phi, 1);
        const Field F2 = eval_F(cfg.potential, phi, 2);
        const Field lap_xi = laplacian_neumann(xi);
        const Field lap_phi = laplacian_neumann(phi);

        Field rhs_s(g);
        for (std::size_t k = 0; k < rhs_s.size(); ++k)
            rhs_s[k] = zeta[k] / dt - ctrl.eta * lap_xi[k] - h.heta * lap_phi[k] -
                       (h.hC * fn[k] + ctrl.C * f1[k] * xi[k]) * sig1[k];
        const Field zeta1 = kit.sigma_solver(fn).solve(rhs_s);

        const Field Jxi = cfg.kop->convolve(xi);
        Field gl(g), src(g);
        for (std::size_t k = 0; k < gl.size(); ++k) {
            gl[k] = -(cfg.tau / dt + cfg.S_stab) * xi[k] - Jxi[k] + F2[k] * xi[k] - ctrl.chi * zeta1[k] -
                    h.hchi * sig1[k];
            src[k] = (ctrl.P * zeta1[k] + h.hP * sig1[k]) * fn[k] + (ctrl.P * sig1[k] - cfg.A) * f1[k] * xi[k];
        }
        const Field lap_g = laplacian_neumann(gl);
        Field rhs(g);
        for (std::size_t k = 0; k < rhs.size(); ++k)
            rhs[k] = src[k] + xi[k] / dt + (cfg.eps / dt) * (nu[k] - gl[k]) + lap_g[k];
        const Field w = kit.phi_solver.solve(rhs);
        nu = w + gl;
        xi = hadamard(w, kit.Dinv);
        zeta = zeta1;
        const int m = fl.macro[l + 1];
        if (m >= 0) {
            tg.xi()[m] = xi;
            tg.nu()[m] = nu;
            tg.zeta()[m] = zeta;
        }
    }
    return tg;
}

AdjointTrajectory solve_adjoint(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                                const CostSpec& cost, const AdjointRegime& regime) {
    check_regime(cfg, ctrl, cost, regime);
    const auto fl = detail::flatten(state);
    detail::KitCache kits(cfg, ctrl);
    const auto dj = cost_state_derivative(state, cost, &regime);
    const Grid2D& g = state.grid;
    const std::size_t L = fl.dt.size();

    AdjointTrajectory adj;
    adj.resize(g, state.levels());
    adj.roles = {"p", "q", "r"};
    adj.times = state.times;

    Field p1(g), q1(g), r1(g);  // level m+1, zero beyond the final level
    for (std::size_t m = L; m >= 1; --m) {
        const double dt = fl.dt[m - 1];
        const auto& kit = kits.get(dt);
        const int macro = fl.macro[m];
        const Field zero(g);
        const Field& gphi = macro >= 0 ? dj.dphi[macro] : zero;
        const bool terminal_mu = macro == static_cast<int>(state.levels() - 1) && !dj.dmu_T.empty();

        Field Rb = gphi;
        if (m < L) {
            const double dtn = fl.dt[m];
            const Field& phim = *fl.phi[m];
            const Field& sig_next = *fl.sigma[m + 1];
            const Field f1 = eval_f(cfg.f, phim, 1);
            const Field F2 = eval_F(cfg.potential, phim, 2);
            const Field Jq = cfg.kop->convolve(q1);
            const Field lap_r = laplacian_neumann(r1);
            for (std::size_t k = 0; k < Rb.size(); ++k) {
                const double X = -cfg.S_stab * q1[k] - Jq[k] + F2[k] * q1[k] + ctrl.eta * lap_r[k] +
                                 ctrl.C * f1[k] * sig_next[k] * r1[k] -
                                 (ctrl.P * sig_next[k] - cfg.A) * f1[k] * p1[k];
                Rb[k] += p1[k] + cfg.tau * q1[k] - dtn * X;
            }
        }
        Rb *= 1.0 / dt;

        Field rhs_p(g);
        for (std::size_t k = 0; k < rhs_p.size(); ++k)
            rhs_p[k] = cfg.eps * p1[k] / dt + Rb[k] * kit.Dinv[k] + (terminal_mu ? dj.dmu_T[k] / dt : 0.0);
        Field p = kit.phi_solver.solve(rhs_p);
        Field q(g);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] = (Rb[k] - p[k] / dt) * kit.Dinv[k];

        const Field& phi_prev = *fl.phi[m - 1];
        const Field& sig = *fl.sigma[m];
        const Field fn = eval_f(cfg.f, phi_prev, 0);
        Field rhs_r(g);
        for (std::size_t k = 0; k < rhs_r.size(); ++k)
            rhs_r[k] = r1[k] / dt + ctrl.P * fn[k] * p[k] + ctrl.chi * q[k];
        Field r = kit.sigma_solver(fn).solve(rhs_r);

        const Field lap_phi_prev = laplacian_neumann(phi_prev);
        double sP = 0, sX = 0, sE = 0, sC = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            sP += p[k] * sig[k] * fn[k];
            sX += q[k] * sig[k];
            sE -= r[k] * lap_phi_prev[k];
            sC -= r[k] * fn[k] * sig[k];
        }
        const double w = dt * g.cell_area();
        adj.pairings[0] += w * sP;
        adj.pairings[1] += w * sX;
        adj.pairings[2] += w * sE;
        adj.pairings[3] += w * sC;

        if (macro >= 0) {
            adj.p()[macro] = p;
            adj.q()[macro] = q;
            adj.r()[macro] = r;
        }
        p1 = std::move(p);
        q1 = std::move(q);
        r1 = std::move(r);
    }
    if (state.levels() > 1) {
        adj.p()[0] = adj.p()[1];
        adj.q()[0] = adj.q()[1];
        adj.r()[0] = adj.r()[1];
    }
    const std::size_t N = state.levels() - 1;
    const double ref = cost.beta_Omega * std::sqrt(dot(state.phi()[N] - cost.phi_Omega, state.phi()[N] - cost.phi_Omega));
    adj.qT_amplification = ref > 0.0 ? std::sqrt(dot(adj.q()[N], adj.q()[N])) / ref : 0.0;
    if (regime.kind == Regime::full && cfg.regime() == Regime::full)
        spdlog::debug("adjoint q(T) amplification {:.6g} (1/tau = {:.6g})", adj.qT_amplification,
                      cfg.tau > 0 ? 1.0 / cfg.tau : 0.0);
    return adj;
}

DualityReport duality_check(const ModelConfig& cfg, const StateTrajectory& state, const ControlVector& ctrl,
                            const CostSpec& cost, const AdjointRegime& regime, const Increment& h) {
    const auto tg = solve_tangent(cfg, state, ctrl, h);
    const auto adj = solve_adjoint(cfg, state, ctrl, cost, regime);
    const auto dj = cost_state_derivative(state, cost, &regime);
    const std::size_t N = state.levels() - 1;
    DualityReport rep;
    for (std::size_t n = 1; n <= N; ++n) rep.lhs += dot(dj.dphi[n], tg.xi()[n]);
    if (!dj.dmu_T.empty()) rep.lhs += dot(dj.dmu_T, tg.nu()[N]);
    const auto hv = h.as_array();
    for (int k = 0; k < 4; ++k) rep.rhs_discrete += hv[k] * adj.pairings[k];

    // Continuous pairings: the backward-implicit adjoint is constant on (t_{n-1}, t_n], the state
    // integrand is averaged over the two endpoints of the interval.
    const Grid2D& g = state.grid;
    std::vector<Field> fsig(N + 1), lap(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        fsig[n] = hadamard(eval_f(cfg.f, state.phi()[n], 0), state.sigma()[n]);
        lap[n] = laplacian_neumann(state.phi()[n]);
    }
    for (std::size_t n = 1; n <= N; ++n) {
        const double dt = state.times[n] - state.times[n - 1];
        double s = 0.0;
        for (std::size_t k = 0; k < g.cells(); ++k) {
            const double fs = 0.5 * (fsig[n - 1][k] + fsig[n][k]);
            const double sig = 0.5 * (state.sigma()[n - 1][k] + state.sigma()[n][k]);
            const double lp = 0.5 * (lap[n - 1][k] + lap[n][k]);
            s += h.hP * fs * adj.p()[n][k] + h.hchi * sig * adj.q()[n][k] - h.heta * lp * adj.r()[n][k] -
                 h.hC * fs * adj.r()[n][k];
        }
        rep.rhs_colocated += dt * g.cell_area() * s;
    }
    const double scale = std::max({std::abs(rep.lhs), std::abs(rep.rhs_discrete), 1e-300});
    rep.residual_colocated = std::abs(rep.lhs - rep.rhs_colocated) / scale;
    rep.residual_discrete = std::abs(rep.lhs - rep.rhs_discrete) / scale;
    return rep;
}

} // namespace nloch
