#include "nloch/relaxation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "nloch/errors.hpp"
#include "nloch/io.hpp"
#include "nloch/kernel.hpp"

namespace nloch {

namespace {

using Kind = TableColumn::Kind;

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    const int workers = std::clamp(threads, 1, std::max(n, 1));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    // Lowest failing rung wins so that errors do not depend on scheduling.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ModelConfig with_params(const ModelConfig& base, double eps, double tau) {
    ModelConfig c = base;
    c.eps = eps;
    c.tau = tau;
    return c;
}

ModelConfig rung_cfg(const SweepPlan& p, const Rung& r) { return with_params(p.cfg, r.eps, r.tau); }

ModelConfig limit_cfg(const SweepPlan& p) {
    switch (p.family) {
    case SweepFamily::eps_to_zero: return with_params(p.cfg, 0.0, p.cfg.tau);
    case SweepFamily::tau_to_zero: return with_params(p.cfg, p.cfg.eps, 0.0);
    case SweepFamily::joint: return with_params(p.cfg, 0.0, 0.0);
    }
    return p.cfg;
}

// With eta > 0 the tau -> 0 limit is only known along subsequences.
bool compare_to_finest(const SweepPlan& p) { return p.family == SweepFamily::tau_to_zero && p.ctrl.eta > 0.0; }

ModelConfig time_refined(const ModelConfig& c) {
    ModelConfig r = c;
    r.grid = c.grid.refined(1, 2);
    return r;
}

std::vector<Field> every(const std::vector<Field>& u, int stride) {
    std::vector<Field> out;
    for (std::size_t n = 0; n < u.size(); n += stride) out.push_back(u[n]);
    return out;
}

TrajectoryNorms diff_norms(const std::vector<Field>& a, const std::vector<Field>& b, const std::vector<double>& t) {
    return norms(difference(a, b), t);
}

std::vector<Rung> ladder_rungs(SweepFamily f, const ModelConfig& base, const std::vector<double>& ladder) {
    std::vector<Rung> r;
    for (double v : ladder) {
        switch (f) {
        case SweepFamily::eps_to_zero: r.push_back({v, base.tau}); break;
        case SweepFamily::tau_to_zero: r.push_back({base.eps, v}); break;
        case SweepFamily::joint: r.push_back({v, v}); break;
        }
    }
    return r;
}

double vanishing_param(SweepFamily f, const Rung& r) { return f == SweepFamily::tau_to_zero ? r.tau : r.eps; }

AdjointRegime adjoint_regime(const SweepPlan& p, std::shared_ptr<const StateTrajectory> reference) {
    AdjointRegime reg;
    reg.kind = limit_regime(p.family);
    reg.anchor = p.ctrl;
    if (p.family != SweepFamily::eps_to_zero) {
        reg.adapted = true;
        reg.reference = std::move(reference);
    }
    return reg;
}

void add(ConvergenceTable& t, const std::string& name, Kind kind) {
    t.columns.push_back({name, kind, std::vector<double>(t.rungs.size(), 0.0)});
}

void set(ConvergenceTable& t, const std::string& name, int k, double v) {
    for (auto& c : t.columns)
        if (c.name == name) c.values[k] = v;
}

} // namespace

std::string to_string(SweepFamily f) {
    switch (f) {
    case SweepFamily::eps_to_zero: return "eps";
    case SweepFamily::tau_to_zero: return "tau";
    case SweepFamily::joint: return "joint";
    }
    return "?";
}

SweepFamily parse_sweep_family(const std::string& s) {
    if (s == "eps" || s == "eps0") return SweepFamily::eps_to_zero;
    if (s == "tau" || s == "tau0") return SweepFamily::tau_to_zero;
    if (s == "joint") return SweepFamily::joint;
    throw ConfigInvalid("unknown sweep family '" + s + "' (eps, tau or joint)");
}

Regime limit_regime(SweepFamily f) {
    switch (f) {
    case SweepFamily::eps_to_zero: return Regime::eps_zero;
    case SweepFamily::tau_to_zero: return Regime::tau_zero;
    case SweepFamily::joint: return Regime::joint_zero;
    }
    return Regime::full;
}

void SweepPlan::validate() const {
    cfg.check();
    if (rungs.empty()) throw ConfigInvalid("sweep: empty ladder");
    const Coercivity co = coercivity_check(*cfg.kop, cfg.potential);
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        const Rung& r = rungs[k];
        if (r.eps < 0.0 || r.eps >= co.eps0 || r.tau < 0.0 || r.tau >= co.tau0)
            throw ConfigInvalid("sweep: rung " + std::to_string(k) + " outside [0, eps0) x [0, tau0)");
        if (k > 0 && !(vanishing_param(family, r) < vanishing_param(family, rungs[k - 1])))
            throw ConfigInvalid("sweep: ladder must be strictly decreasing");
        if (family == SweepFamily::eps_to_zero && r.tau != cfg.tau)
            throw ConfigInvalid("sweep: the eps ladder keeps tau fixed");
        if (family == SweepFamily::tau_to_zero && r.eps != cfg.eps)
            throw ConfigInvalid("sweep: the tau ladder keeps eps fixed");
        if (family == SweepFamily::joint && r.tau > 0.0 && r.eps > rho * r.tau)
            throw ConfigInvalid("sweep: rung " + std::to_string(k) + " breaks the eps/tau <= rho cap");
        if (family == SweepFamily::joint && r.tau == 0.0 && r.eps != 0.0)
            throw ConfigInvalid("sweep: joint rung with tau = 0 needs eps = 0");
    }
    if (family != SweepFamily::tau_to_zero && ctrl.eta != 0.0)
        throw RegimeViolation("sweep: the eps and joint families require eta = 0");
    if (family == SweepFamily::tau_to_zero && cost.beta_Omega != 0.0)
        throw RegimeViolation("sweep: the tau family requires beta_Omega = 0");
}

std::vector<double> geometric_ladder(double start, int n, double ratio) {
    std::vector<double> v;
    double x = start;
    for (int k = 0; k < n; ++k, x *= ratio) v.push_back(x);
    return v;
}

SweepPlan make_plan(SweepFamily family, const ModelConfig& base, const ControlVector& ctrl,
                    const ControlBounds& bounds, const CostSpec& cost, int rungs, double ratio) {
    SweepPlan p;
    p.family = family;
    p.cfg = base;
    p.ctrl = ctrl;
    p.bounds = bounds;
    p.cost = cost;
    const Coercivity co = coercivity_check(*base.kop, base.potential);
    p.rungs = ladder_rungs(family, base, geometric_ladder(0.5 * std::min(co.eps0, co.tau0), rungs, ratio));
    return p;
}

CostSpec default_sweep_cost(SweepFamily family, const ModelConfig& base, const ControlVector& ctrl) {
    ControlVector target = ctrl;
    target.P *= 1.2;
    target.chi *= 0.8;
    target.C *= 1.2;
    const StateTrajectory st = solve_state(base, target);
    CostSpec c;
    c.phi_Q = st.phi();
    c.phi_Omega = st.phi().back();
    c.beta_Q = 1.0;
    c.beta_Omega = family == SweepFamily::tau_to_zero ? 0.0 : 1.0;
    c.alpha = {1e-3, 1e-3, 1e-3, 1e-3};
    c.prior = ctrl;
    return c;
}

CostSpec refine_cost_in_time(const CostSpec& cost, int factor) {
    CostSpec c = cost;
    if (cost.phi_Q.size() <= 1 || factor == 1) return c;
    c.phi_Q.clear();
    for (std::size_t n = 0; n + 1 < cost.phi_Q.size(); ++n)
        for (int k = 0; k < factor; ++k) {
            const double s = static_cast<double>(k) / factor;
            c.phi_Q.push_back((1.0 - s) * cost.phi_Q[n] + s * cost.phi_Q[n + 1]);
        }
    c.phi_Q.push_back(cost.phi_Q.back());
    return c;
}

const TableColumn* ConvergenceTable::column(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<ColumnCheck> ConvergenceTable::check(double slack, double floor_factor) const {
    std::vector<ColumnCheck> out;
    for (const auto& c : columns) {
        if (c.kind == Kind::info) continue;
        ColumnCheck r{c.name, true, ""};
        for (std::size_t k = 1; k < c.values.size(); ++k)
            if (!(c.values[k] <= (1.0 + slack) * c.values[k - 1])) {
                r.pass = false;
                r.detail = fmt::format("increase at rung {}: {:.3e} > {:.3e}", k, c.values[k], c.values[k - 1]);
                break;
            }
        if (r.pass && c.kind == Kind::vanishing && !c.values.empty()) {
            const double last = c.values.back();
            if (floor > 0.0 && !(last <= floor_factor * floor)) {
                r.pass = false;
                r.detail = fmt::format("last {:.3e} > {}x floor {:.3e}", last, floor_factor, floor);
            } else {
                r.detail = fmt::format("last {:.3e}, floor {:.3e}", last, floor);
            }
        }
        if (r.pass && r.detail.empty() && !c.values.empty())
            r.detail = fmt::format("{:.3e} -> {:.3e}", c.values.front(), c.values.back());
        out.push_back(r);
    }
    return out;
}

bool ConvergenceTable::passes(double slack, double floor_factor) const {
    for (const auto& c : check(slack, floor_factor))
        if (!c.pass) return false;
    return true;
}

void ConvergenceTable::write_csv(const std::string& path) const {
    std::vector<std::string> header{"rung", "eps", "tau"};
    for (const auto& c : columns) header.push_back(c.name);
    CsvWriter w(path, header);
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        std::vector<CsvCell> row{static_cast<long long>(k), rungs[k].eps, rungs[k].tau};
        for (const auto& c : columns) row.emplace_back(c.values[k]);
        w.row(row);
    }
}

ConvergenceTable sweep_states(const SweepPlan& plan) {
    plan.validate();
    const int n = static_cast<int>(plan.rungs.size());
    ConvergenceTable t;
    t.family = to_string(plan.family);
    t.object = "state";
    t.rungs = plan.rungs;

    std::vector<StateTrajectory> runs(n);
    parallel_for(n, plan.threads, [&](int k) { runs[k] = solve_state(rung_cfg(plan, plan.rungs[k]), plan.ctrl); });
    StateTrajectory limit;
    if (compare_to_finest(plan)) {
        limit = runs.back();
        t.notes.push_back("eta > 0: differences are taken against the finest rung, not a tau = 0 solve");
    } else {
        limit = solve_state(limit_cfg(plan), plan.ctrl);
    }

    const auto& times = limit.times;
    const SweepFamily f = plan.family;
    const bool eps_f = f == SweepFamily::eps_to_zero;
    add(t, "phi_C0H", eps_f ? Kind::enforced : Kind::info);
    add(t, "phi_L2Q", Kind::enforced);
    if (eps_f)
        add(t, "mu_L2V", Kind::enforced);
    else
        add(t, "mu_L2H", f == SweepFamily::tau_to_zero ? Kind::enforced : Kind::info);
    add(t, "sigma_C0Vstar", Kind::enforced);
    add(t, "sigma_L2H", Kind::enforced);
    if (eps_f) {
        add(t, "sigma_C0H", Kind::enforced);
        add(t, "sigma_L2V", Kind::enforced);
    }
    if (f != SweepFamily::tau_to_zero) {
        add(t, "eps_mu_C0H", Kind::vanishing);
        add(t, "eps_mu_L2V", Kind::vanishing);
    }
    if (!eps_f) {
        add(t, "tau_phi_H1H", Kind::vanishing);
        add(t, "tau_phi_LinfV", Kind::vanishing);
    }
    add(t, "M0", Kind::info);

    const Field F0 = eval_F(plan.cfg.potential, plan.cfg.phi0, 0);
    double F0_l1 = 0.0;
    for (double v : F0.values()) F0_l1 += std::abs(v);
    F0_l1 *= plan.cfg.grid.cell_area();
    for (int k = 0; k < n; ++k) {
        const StateTrajectory& s = runs[k];
        const auto dphi = diff_norms(s.phi(), limit.phi(), times);
        const auto dmu = diff_norms(s.mu(), limit.mu(), times);
        const auto dsig = diff_norms(s.sigma(), limit.sigma(), times);
        set(t, "phi_C0H", k, dphi.C0_0T_H);
        set(t, "phi_L2Q", k, dphi.L2_Q);
        set(t, "mu_L2V", k, dmu.L2_0T_V);
        set(t, "mu_L2H", k, dmu.L2_Q);
        set(t, "sigma_C0Vstar", k, dsig.C0_0T_Vstar);
        set(t, "sigma_L2H", k, dsig.L2_Q);
        set(t, "sigma_C0H", k, dsig.C0_0T_H);
        set(t, "sigma_L2V", k, dsig.L2_0T_V);
        const auto mu = norms(s.mu(), times);
        const auto phi = norms(s.phi(), times);
        set(t, "eps_mu_C0H", k, s.eps * mu.C0_0T_H);
        set(t, "eps_mu_L2V", k, s.eps * mu.L2_0T_V);
        set(t, "tau_phi_H1H", k, s.tau * phi.H1_0T_H);
        set(t, "tau_phi_LinfV", k, s.tau * phi.C0_0T_V);
        set(t, "M0", k, std::sqrt(s.eps) * norms(plan.cfg.mu0).L2_Omega + F0_l1);
    }

    if (plan.floor) {
        const ModelConfig last = rung_cfg(plan, plan.rungs.back());
        const StateTrajectory fine = solve_state(time_refined(last), plan.ctrl);
        t.floor = diff_norms(every(fine.phi(), 2), runs.back().phi(), times).C0_0T_H;
    }
    return t;
}

ConvergenceTable sweep_adjoints(const SweepPlan& plan) {
    plan.validate();
    const int n = static_cast<int>(plan.rungs.size());
    ConvergenceTable t;
    t.family = to_string(plan.family);
    t.object = "adjoint";
    t.rungs = plan.rungs;

    std::vector<std::shared_ptr<const StateTrajectory>> states(n);
    parallel_for(n, plan.threads, [&](int k) {
        states[k] = std::make_shared<StateTrajectory>(solve_state(rung_cfg(plan, plan.rungs[k]), plan.ctrl));
    });
    std::shared_ptr<const StateTrajectory> limit_state;
    const bool finest = compare_to_finest(plan);
    if (finest) {
        limit_state = states.back();
        t.notes.push_back("eta > 0: differences are taken against the finest rung, not a tau = 0 solve");
    } else {
        limit_state = std::make_shared<StateTrajectory>(solve_state(limit_cfg(plan), plan.ctrl));
    }
    const AdjointRegime reg = adjoint_regime(plan, limit_state);

    std::vector<AdjointTrajectory> adj(n);
    parallel_for(n, plan.threads, [&](int k) {
        adj[k] = solve_adjoint(rung_cfg(plan, plan.rungs[k]), *states[k], plan.ctrl, plan.cost, reg);
    });
    const AdjointTrajectory lim =
        finest ? adj.back() : solve_adjoint(limit_cfg(plan), *limit_state, plan.ctrl, plan.cost, reg);

    const SweepFamily f = plan.family;
    const bool tau_f = f == SweepFamily::tau_to_zero;
    add(t, "p_C0H", tau_f ? Kind::enforced : Kind::info);
    add(t, "p_L2V", tau_f ? Kind::enforced : Kind::info);
    add(t, "q_L2H", Kind::info);
    add(t, "r_C0H", Kind::enforced);
    add(t, f == SweepFamily::joint ? "r_L2H" : "r_L2V", Kind::enforced);
    if (f != SweepFamily::tau_to_zero) add(t, "eps_p_H1H", Kind::vanishing);
    if (f == SweepFamily::joint) add(t, "eps_p_LinfVstar", Kind::vanishing);
    if (f == SweepFamily::tau_to_zero) add(t, "tau_q_L2H", Kind::vanishing);
    if (f == SweepFamily::joint) add(t, "tau_q_LinfV", Kind::vanishing);

    const auto& times = limit_state->times;
    for (int k = 0; k < n; ++k) {
        const auto dp = diff_norms(adj[k].p(), lim.p(), times);
        const auto dq = diff_norms(adj[k].q(), lim.q(), times);
        const auto dr = diff_norms(adj[k].r(), lim.r(), times);
        set(t, "p_C0H", k, dp.C0_0T_H);
        set(t, "p_L2V", k, dp.L2_0T_V);
        set(t, "q_L2H", k, dq.L2_Q);
        set(t, "r_C0H", k, dr.C0_0T_H);
        set(t, "r_L2H", k, dr.L2_Q);
        set(t, "r_L2V", k, dr.L2_0T_V);
        const auto p = norms(adj[k].p(), times);
        const auto q = norms(adj[k].q(), times);
        const double eps = plan.rungs[k].eps, tau = plan.rungs[k].tau;
        set(t, "eps_p_H1H", k, eps * p.H1_0T_H);
        set(t, "eps_p_LinfVstar", k, eps * p.C0_0T_Vstar);
        set(t, "tau_q_L2H", k, tau * q.L2_Q);
        set(t, "tau_q_LinfV", k, tau * q.C0_0T_V);
    }

    if (plan.floor) {
        const ModelConfig last = time_refined(rung_cfg(plan, plan.rungs.back()));
        const CostSpec fine_cost = refine_cost_in_time(plan.cost, 2);
        const StateTrajectory fine = solve_state(last, plan.ctrl);
        std::shared_ptr<const StateTrajectory> fine_ref;
        if (reg.adapted && reg.kind == Regime::tau_zero) {
            const ModelConfig lc = finest ? last : time_refined(limit_cfg(plan));
            fine_ref = finest ? std::make_shared<StateTrajectory>(fine)
                              : std::make_shared<StateTrajectory>(solve_state(lc, plan.ctrl));
        }
        const AdjointRegime fine_reg = adjoint_regime(plan, fine_ref);
        const AdjointTrajectory fa = solve_adjoint(last, fine, plan.ctrl, fine_cost, fine_reg);
        const double fp = diff_norms(every(fa.p(), 2), adj.back().p(), times).C0_0T_H;
        const double fr = diff_norms(every(fa.r(), 2), adj.back().r(), times).C0_0T_H;
        t.floor = std::max(fp, fr);
    }
    return t;
}

ConvergenceTable sweep_adapted_identify(const SweepPlan& plan, const IdentifyOptions& opts) {
    plan.validate();
    const int n = static_cast<int>(plan.rungs.size());
    ConvergenceTable t;
    t.family = to_string(plan.family);
    t.object = "adapted-identify";
    t.rungs = plan.rungs;

    // Anchor: a minimizer of the plain limit problem.
    const bool finest = compare_to_finest(plan);
    const ModelConfig anchor_cfg = finest ? rung_cfg(plan, plan.rungs.back()) : limit_cfg(plan);
    AdjointRegime anchor_reg = plain_regime(anchor_cfg);
    if (!finest) anchor_reg.kind = limit_regime(plan.family);
    const IdentifyReport anchor = identify(anchor_cfg, plan.cost, plan.bounds, plan.ctrl, anchor_reg, opts);
    if (!anchor.error.empty()) throw NonConvergence("adapted sweep: anchor identify failed: " + anchor.error);
    if (finest) t.notes.push_back("eta > 0: the anchor is identified on the finest rung");
    t.notes.push_back(fmt::format("anchor ctrl ({:.17g}, {:.17g}, {:.17g}, {:.17g}) J {:.17g} converged {}",
                                  anchor.ctrl.P, anchor.ctrl.chi, anchor.ctrl.eta, anchor.ctrl.C, anchor.cost,
                                  anchor.converged));

    AdjointRegime reg;
    reg.kind = limit_regime(plan.family);
    reg.adapted = true;
    reg.anchor = anchor.ctrl;
    reg.reference = anchor.final_eval.state;

    std::vector<IdentifyReport> reps(n);
    parallel_for(n, plan.threads, [&](int k) {
        const ModelConfig c = rung_cfg(plan, plan.rungs[k]);
        ControlVector start = plan.ctrl;
        if (eta_masked(c, reg)) start.eta = 0.0;
        reps[k] = identify(c, plan.cost, plan.bounds, start, reg, opts);
        if (!reps[k].error.empty())
            throw NonConvergence("adapted sweep: rung " + std::to_string(k) + " failed: " + reps[k].error);
    });

    add(t, "ctrl_dist", Kind::enforced);
    add(t, "cost_gap", Kind::enforced);
    add(t, "box_fraction", Kind::info);
    add(t, "iterations", Kind::info);
    add(t, "converged", Kind::info);
    const auto a = anchor.ctrl.as_array();
    for (int k = 0; k < n; ++k) {
        const auto c = reps[k].ctrl.as_array();
        double d = 0.0;
        for (int i = 0; i < 4; ++i) d += (c[i] - a[i]) * (c[i] - a[i]);
        d = std::sqrt(d);
        t.columns[0].values[k] = d;
        t.columns[1].values[k] = std::abs(reps[k].cost - anchor.cost);
        t.columns[2].values[k] = d / plan.bounds.diameter();
        t.columns[3].values[k] = static_cast<double>(reps[k].history.size() - 1);
        t.columns[4].values[k] = reps[k].converged ? 1.0 : 0.0;
    }
    return t;
}

} // namespace nloch
