#include "nloch/calibration.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nloch/errors.hpp"

namespace nloch {

namespace {

double norm2(const Vec4& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot4(const Vec4& a, const Vec4& b) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += a[k] * b[k];
    return s;
}

void attach_gradient(const ModelConfig& cfg, const CostSpec& cost, const AdjointRegime& regime, Evaluation& e) {
    auto adj = std::make_shared<AdjointTrajectory>(solve_adjoint(cfg, *e.state, e.ctrl, cost, regime));
    e.grad = reduced_gradient(cfg, *adj, e.ctrl, cost, regime);
    e.adjoint = std::move(adj);
}

} // namespace

std::array<bool, 4> free_components(const ModelConfig& cfg, const AdjointRegime& regime) {
    return {true, true, !eta_masked(cfg, regime), true};
}

Vec4 reduced_gradient(const ModelConfig& cfg, const AdjointTrajectory& adjoint, const ControlVector& ctrl,
                      const CostSpec& cost, const AdjointRegime& regime) {
    const auto x = ctrl.as_array();
    const auto a = cost.alpha.as_array();
    const auto prior = cost.prior.as_array();
    Vec4 g{};
    for (int k = 0; k < 4; ++k) g[k] = adjoint.pairings[k] + a[k] * (x[k] - prior[k]);
    if (regime.adapted) {
        const auto mask = adapted_penalty_mask(regime);
        const auto anc = regime.anchor.as_array();
        for (int k = 0; k < 4; ++k)
            if (mask[k]) g[k] += x[k] - anc[k];
    }
    const auto free = free_components(cfg, regime);
    for (int k = 0; k < 4; ++k) {
        if (!free[k]) g[k] = 0.0;
        if (!std::isfinite(g[k])) throw NonConvergence("reduced gradient is not finite");
    }
    return g;
}

ControlVector project_box(const ControlVector& c, const ControlBounds& b) {
    auto x = c.as_array();
    const auto u = b.as_array();
    for (int k = 0; k < 4; ++k) x[k] = std::clamp(x[k], 0.0, u[k]);
    return ControlVector::from_array(x);
}

double stationarity(const ControlVector& c, const Vec4& g, const ControlBounds& b) {
    const auto x = c.as_array();
    Vec4 t{};
    for (int k = 0; k < 4; ++k) t[k] = x[k] - g[k];
    const auto p = project_box(ControlVector::from_array(t), b).as_array();
    Vec4 d{};
    for (int k = 0; k < 4; ++k) d[k] = x[k] - p[k];
    return norm2(d);
}

Evaluation evaluate(const ModelConfig& cfg, const CostSpec& cost, const ControlVector& ctrl,
                    const AdjointRegime& regime, bool with_gradient) {
    Evaluation e;
    e.ctrl = ctrl;
    e.state = std::make_shared<StateTrajectory>(solve_state(cfg, ctrl));
    e.cost = eval_cost(*e.state, ctrl, cost, &regime);
    if (with_gradient) attach_gradient(cfg, cost, regime, e);
    return e;
}

IdentifyReport identify(const ModelConfig& cfg, const CostSpec& cost, const ControlBounds& bounds,
                        const ControlVector& ctrl0, const AdjointRegime& regime, const IdentifyOptions& opts) {
    if (!bounds.contains(ctrl0)) throw ConfigInvalid("identify: initial control outside the admissible box");
    check_regime(cfg, ctrl0, cost, regime);

    IdentifyReport rep;
    Evaluation cur;
    try {
        cur = evaluate(cfg, cost, ctrl0, regime);
    } catch (const Error& e) {
        rep.error = e.what();
        rep.ctrl = ctrl0;
        return rep;
    }
    rep.grad0_norm = norm2(cur.grad);
    rep.tol = opts.tol > 0 ? opts.tol : 1e-6 * (1.0 + rep.grad0_norm);
    double stat = stationarity(cur.ctrl, cur.grad, bounds);
    rep.history.push_back({0, cur.ctrl, cur.cost.total, stat, 0.0, 0});

    double step = std::clamp(rep.grad0_norm > 0 ? 1.0 / rep.grad0_norm : opts.step_max, opts.step_min, opts.step_max);
    int k = 0;
    while (true) {
        if (stat <= rep.tol) {
            rep.converged = true;
            break;
        }
        if (k >= opts.k_max) {
            rep.max_iterations = true;
            break;
        }
        ++k;
        const auto x = cur.ctrl.as_array();
        double s = step;
        bool accepted = false;
        int backtracks = 0;
        Evaluation trial;
        Vec4 d{};
        try {
            for (; backtracks <= opts.max_backtracks; ++backtracks, s *= opts.backtrack) {
                Vec4 t{};
                for (int i = 0; i < 4; ++i) t[i] = x[i] - s * cur.grad[i];
                const ControlVector c = project_box(ControlVector::from_array(t), bounds);
                const auto ca = c.as_array();
                for (int i = 0; i < 4; ++i) d[i] = ca[i] - x[i];
                const double slope = dot4(cur.grad, d);
                if (!(slope < 0.0)) break;
                trial = evaluate(cfg, cost, c, regime, false);
                if (trial.cost.total <= cur.cost.total + opts.armijo_c * slope &&
                    trial.cost.total < cur.cost.total) {
                    accepted = true;
                    break;
                }
            }
            if (accepted) attach_gradient(cfg, cost, regime, trial);
        } catch (const Error& e) {
            rep.error = e.what();
            break;
        }
        if (!accepted) {
            spdlog::warn("identify: line search stalled at iteration {} (stationarity {:.3e}, tol {:.3e})", k, stat,
                         rep.tol);
            break;
        }
        Vec4 y{};
        for (int i = 0; i < 4; ++i) y[i] = trial.grad[i] - cur.grad[i];
        const double sy = dot4(d, y);
        step = sy > 0.0 ? dot4(d, d) / sy : opts.step_max;
        step = std::clamp(step, opts.step_min, opts.step_max);
        cur = std::move(trial);
        stat = stationarity(cur.ctrl, cur.grad, bounds);
        rep.history.push_back({k, cur.ctrl, cur.cost.total, stat, s, backtracks});
        spdlog::debug("identify k={} J={:.10g} stat={:.3e} step={:.3e}", k, cur.cost.total, stat, s);
    }
    rep.ctrl = cur.ctrl;
    rep.cost = cur.cost.total;
    rep.grad = cur.grad;
    rep.stationarity = stat;
    rep.final_eval = std::move(cur);
    return rep;
}

double vi_tolerance(double grad0_norm, const ControlBounds& b) {
    return 1e-5 * (1.0 + grad0_norm) * b.diameter();
}

ViAudit vi_audit(const ControlVector& c, const Vec4& g, const ControlBounds& b, const std::array<bool, 4>& free,
                 double tol, std::uint64_t seed, int random_points) {
    ViAudit a;
    a.tol = tol;
    a.min_value = std::numeric_limits<double>::infinity();
    const auto x = c.as_array();
    const auto u = b.as_array();
    auto consider = [&](Vec4 theta) {
        for (int k = 0; k < 4; ++k)
            if (!free[k]) theta[k] = x[k];
        Vec4 d{};
        for (int k = 0; k < 4; ++k) d[k] = theta[k] - x[k];
        const double v = dot4(g, d);
        ++a.directions;
        if (v < a.min_value) {
            a.min_value = v;
            a.worst = ControlVector::from_array(theta);
        }
    };
    for (int mask = 0; mask < 16; ++mask) {
        Vec4 t{};
        for (int k = 0; k < 4; ++k) t[k] = (mask >> k) & 1 ? u[k] : 0.0;
        consider(t);
    }
    for (int k = 0; k < 4; ++k)
        for (double end : {0.0, u[k]}) {
            Vec4 t = x;
            t[k] = end;
            consider(t);
        }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int n = 0; n < random_points; ++n) {
        Vec4 t{};
        for (int k = 0; k < 4; ++k) t[k] = unit(rng) * u[k];
        consider(t);
    }
    a.pass = a.min_value >= -tol;
    return a;
}

TwinResult twin_experiment(const ModelConfig& cfg, const ControlVector& truth, const ControlBounds& bounds,
                           const TwinOptions& opts) {
    TwinResult res;
    res.truth = truth;
    const auto t = truth.as_array();
    const auto u = bounds.as_array();
    for (int k = 0; k < 4; ++k)
        if (!(t[k] >= 0.0 && t[k] <= u[k])) throw ConfigInvalid("twin: true control outside the admissible box");

    const AdjointRegime regime = plain_regime(cfg);
    const auto free = free_components(cfg, regime);
    const StateTrajectory sim = solve_state(cfg, truth);

    CostSpec& cost = res.cost;
    cost.beta_Omega = regime.kind == Regime::tau_zero ? 0.0 : opts.beta_Omega;
    cost.beta_Q = opts.beta_Q;
    cost.phi_Q = sim.phi();
    if (opts.noise > 0.0) {
        double amp = 0.0;
        for (const Field& f : sim.phi())
            for (double v : f.values()) amp = std::max(amp, std::abs(v));
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> gauss(0.0, opts.noise * amp);
        for (Field& f : cost.phi_Q)
            for (double& v : f.values()) v += gauss(rng);
    }
    cost.phi_Omega = cost.phi_Q.back();
    cost.alpha = {opts.alpha, opts.alpha, free[2] ? opts.alpha : 0.0, opts.alpha};
    Vec4 prior{}, start{};
    for (int k = 0; k < 4; ++k) {
        prior[k] = std::clamp(t[k] * (1.0 + opts.prior_offset), 0.0, u[k]);
        start[k] = free[k] ? std::clamp(t[k] * (1.0 - opts.start_offset), 0.0, u[k]) : t[k];
    }
    cost.prior = ControlVector::from_array(prior);
    res.start = ControlVector::from_array(start);

    res.report = identify(cfg, cost, bounds, res.start, regime, opts.identify);
    const auto c = res.report.ctrl.as_array();
    for (int k = 0; k < 4; ++k) {
        const double err = std::abs(c[k] - t[k]);
        res.rel_error[k] = t[k] != 0.0 ? err / std::abs(t[k]) : err;
    }
    res.audit = vi_audit(res.report.ctrl, res.report.grad, bounds, free,
                         vi_tolerance(res.report.grad0_norm, bounds), opts.seed);
    return res;
}

} // namespace nloch
