#include "nloch/verification.hpp"

#include <algorithm>
#include <cmath>

#include "nloch/errors.hpp"

namespace nloch {

TaylorReport taylor_test(const ModelConfig& cfg, const ControlVector& ctrl, const Increment& h,
                         const std::vector<double>& steps) {
    if (steps.size() < 2) throw ConfigInvalid("taylor_test: need at least two steps");
    const StateTrajectory base = solve_state(cfg, ctrl);
    const TangentTrajectory tg = solve_tangent(cfg, base, ctrl, h);
    TaylorReport rep;
    rep.steps = steps;
    for (double s : steps) {
        const ControlVector cs{ctrl.P + s * h.hP, ctrl.chi + s * h.hchi, ctrl.eta + s * h.heta, ctrl.C + s * h.hC};
        const StateTrajectory pert = solve_state(cfg, cs);
        std::vector<Field> rem;
        rem.reserve(base.levels());
        for (std::size_t n = 0; n < base.levels(); ++n) {
            Field r = pert.phi()[n] - base.phi()[n];
            r.axpy(-s, tg.xi()[n]);
            rem.push_back(std::move(r));
        }
        rep.remainder.push_back(norms(rem, base.times).L2_Q);
    }
    for (std::size_t k = 1; k < steps.size(); ++k)
        rep.slopes.push_back(std::log(rep.remainder[k - 1] / rep.remainder[k]) / std::log(steps[k - 1] / steps[k]));
    rep.min_slope = *std::min_element(rep.slopes.begin(), rep.slopes.end());
    rep.max_slope = *std::max_element(rep.slopes.begin(), rep.slopes.end());
    return rep;
}

FdReport fd_gradient_check(const ModelConfig& cfg, const CostSpec& cost, const ControlVector& ctrl,
                           const AdjointRegime& regime, double rel_step) {
    const Evaluation e = evaluate(cfg, cost, ctrl, regime, true);
    const auto fr = free_components(cfg, regime);
    const auto c = ctrl.as_array();
    FdReport rep;
    for (int k = 0; k < 4; ++k) {
        FdComponent& fc = rep.comp[k];
        fc.free = fr[k];
        fc.gradient = e.grad[k];
        if (!fc.free) continue;
        fc.step = rel_step * std::max(1.0, std::abs(c[k]));
        auto a = c, b = c;
        a[k] += fc.step;
        b[k] -= fc.step;
        const double ja = evaluate(cfg, cost, ControlVector::from_array(a), regime, false).cost.total;
        const double jb = evaluate(cfg, cost, ControlVector::from_array(b), regime, false).cost.total;
        fc.fd = (ja - jb) / (2.0 * fc.step);
        fc.rel_error = std::abs(fc.gradient - fc.fd) / std::max({std::abs(fc.fd), std::abs(fc.gradient), 1e-300});
        rep.max_rel_error = std::max(rep.max_rel_error, fc.rel_error);
    }
    return rep;
}

Increment default_direction(const ModelConfig& cfg, const AdjointRegime& regime) {
    Increment h{0.7, -0.4, 0.5, 0.3};
    if (eta_masked(cfg, regime)) h.heta = 0.0;
    return h;
}

} // namespace nloch
