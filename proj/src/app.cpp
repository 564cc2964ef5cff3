#include "nloch/app.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include "nloch/config.hpp"
#include "nloch/errors.hpp"
#include "nloch/io.hpp"
#include "nloch/plot.hpp"
#include "nloch/verification.hpp"

#ifndef NLOCH_VERSION
#define NLOCH_VERSION "0.0.0"
#endif

namespace nloch {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return NLOCH_VERSION; }

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string regime;
    std::optional<std::uint64_t> seed;
    std::optional<int> stride;
    std::optional<int> threads;
    bool quiet = false;
};

// Exclusive advisory lock on the output directory; released when the process exits.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) {
        const auto p = dir / ".nloch.lock";
        fd_ = ::open(p.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot create " + p.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw Error("output directory " + dir.string() + " is in use by another run");
        }
    }
    ~DirLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
};

json ctrl_json(const ControlVector& c) { return {{"P", c.P}, {"chi", c.chi}, {"eta", c.eta}, {"C", c.C}}; }

const char* names[4] = {"P", "chi", "eta", "C"};

struct Run {
    std::string command;
    RunConfig cfg;
    Regime regime = Regime::full;
    std::string regime_name = "full";
    fs::path out;
    ValidationReport report;
    json result = json::object();
    std::vector<std::string> artifacts;

    fs::path file(const std::string& name) {
        artifacts.push_back(name);
        return out / name;
    }

    void write_manifest(const std::string& status) const {
        json m;
        m["tool"] = "nloch";
        m["version"] = version();
        m["command"] = command;
        m["regime"] = regime_name;
        m["status"] = status;
        m["config_hash"] = hex64(config_hash(cfg));
        m["config_source"] = cfg.source;
        m["seed"] = cfg.seed;
        m["threads"] = cfg.threads;
        m["config"] = json::parse(canonical_json(cfg));
        m["assumptions"] = json::parse(report.to_json());
        m["result"] = result;
        m["artifacts"] = artifacts;
        std::ofstream f(out / "manifest.json");
        f << m.dump(2) << "\n";
    }
};

void print_report(const ValidationReport& r) {
    for (const auto& c : r.clauses)
        if (c.status == "fail" || c.status == "warn") spdlog::warn("assumption {} [{}]: {}", c.id, c.status, c.detail);
    for (const auto& [k, v] : r.quantities) spdlog::debug("{} = {}", k, format_real(v));
}

AdjointRegime run_regime(const ModelConfig& m) { return plain_regime(m); }

int cmd_simulate(Run& run) {
    const ModelConfig m = regime_model(run.cfg, run.regime);
    const ControlVector u = run.cfg.scenario.ctrl;
    const StateTrajectory st = solve_state(m, u);
    json extra{{"config_hash", hex64(config_hash(run.cfg))}, {"regime", run.regime_name}};
    write_trajectory(run.out / "trajectory", st, run.cfg.stride, extra.dump());
    run.artifacts.push_back("trajectory/manifest.json");

    {
        CsvWriter w(run.file("diagnostics.csv"), {"step", "t", "mass_before", "mass_after", "source",
                                                  "mass_rel_residual", "phi_inf", "sigma_min", "sigma_max",
                                                  "substeps", "cg_iterations"});
        for (std::size_t n = 0; n < st.diagnostics.size(); ++n) {
            const auto& d = st.diagnostics[n];
            w.row({static_cast<long long>(n + 1), st.times[n + 1], d.mass_before, d.mass_after, d.source,
                   d.mass_rel_residual, d.phi_inf, d.sigma_min, d.sigma_max, static_cast<long long>(d.substeps),
                   static_cast<long long>(d.cg_iterations)});
        }
    }
    write_heatmap_png(run.file("phi_initial.png"), st.phi().front(), -1.0, 1.0);
    write_heatmap_png(run.file("phi_final.png"), st.phi().back(), -1.0, 1.0);
    write_heatmap_png(run.file("sigma_final.png"), st.sigma().back(), 0.0, 1.0);

    double drift = 0.0;
    for (std::size_t k = 0; k < st.phi().back().size(); ++k)
        drift = std::max(drift, std::abs(st.phi().back()[k] - st.phi().front()[k]));
    run.result = {{"levels", st.levels()},
                  {"max_phi_inf", st.max_phi_inf()},
                  {"min_sigma", st.min_sigma()},
                  {"max_sigma", st.max_sigma()},
                  {"max_mass_residual", st.max_mass_residual()},
                  {"max_phi_change", drift}};
    fmt::print("simulate: {} steps, T = {}\n", st.levels() - 1, format_real(st.times.back()));
    fmt::print("  max |phi|_inf       {}\n", format_real(st.max_phi_inf()));
    fmt::print("  sigma range         [{}, {}]\n", format_real(st.min_sigma()), format_real(st.max_sigma()));
    fmt::print("  mass residual (max) {}\n", format_real(st.max_mass_residual()));
    fmt::print("  max |phi(T)-phi0|   {}\n", format_real(drift));
    return kExitOk;
}

int cmd_tangent(Run& run) {
    const ModelConfig m = regime_model(run.cfg, run.regime);
    const ControlVector u = run.cfg.scenario.ctrl;
    const Increment h = default_direction(m, run_regime(m));
    const TaylorReport rep = taylor_test(m, u, h);
    {
        CsvWriter w(run.file("taylor.csv"), {"s", "remainder_L2Q", "slope"});
        for (std::size_t k = 0; k < rep.steps.size(); ++k) {
            if (k == 0)
                w.row({rep.steps[k], rep.remainder[k], std::string()});
            else
                w.row({rep.steps[k], rep.remainder[k], rep.slopes[k - 1]});
        }
    }
    write_loglog_png(run.file("taylor.png"), {{"remainder", rep.steps, rep.remainder}});
    const auto& ck = run.cfg.checks;
    const bool ok = rep.min_slope >= ck.slope_lo && rep.max_slope <= ck.slope_hi;
    run.result = {{"direction", {h.hP, h.hchi, h.heta, h.hC}},
                  {"steps", rep.steps},
                  {"remainder", rep.remainder},
                  {"slopes", rep.slopes},
                  {"pass", ok}};
    fmt::print("tangent-check: h = ({}, {}, {}, {})\n", h.hP, h.hchi, h.heta, h.hC);
    fmt::print("  {:>10} {:>24} {:>10}\n", "s", "remainder L2(Q)", "slope");
    for (std::size_t k = 0; k < rep.steps.size(); ++k)
        fmt::print("  {:>10.3e} {:>24.17g} {:>10}\n", rep.steps[k], rep.remainder[k],
                   k ? fmt::format("{:.4f}", rep.slopes[k - 1]) : std::string("-"));
    fmt::print("  slopes in [{}, {}]: {}\n", ck.slope_lo, ck.slope_hi, ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_adjoint(Run& run) {
    const ModelConfig m = regime_model(run.cfg, run.regime);
    const ControlVector u = run.cfg.scenario.ctrl;
    const CostSpec cost = build_cost(run.cfg, m, run.regime);
    const AdjointRegime reg = run_regime(m);
    check_regime(m, u, cost, reg);
    const StateTrajectory st = solve_state(m, u);
    const Increment h = default_direction(m, reg);
    const DualityReport d = duality_check(m, st, u, cost, reg, h);
    const FdReport fd = fd_gradient_check(m, cost, u, reg, run.cfg.checks.fd_step);
    const auto& ck = run.cfg.checks;
    const double discrete_tol = 1e-8;
    const bool dual_ok = d.residual_discrete <= discrete_tol && d.residual_colocated <= ck.duality_tol;
    const bool fd_ok = fd.max_rel_error <= ck.fd_tol;
    {
        CsvWriter w(run.file("duality.csv"), {"quantity", "value", "tolerance"});
        w.row({std::string("lhs"), d.lhs, std::string()});
        w.row({std::string("rhs_discrete"), d.rhs_discrete, std::string()});
        w.row({std::string("rhs_colocated"), d.rhs_colocated, std::string()});
        w.row({std::string("residual_discrete"), d.residual_discrete, discrete_tol});
        w.row({std::string("residual_colocated"), d.residual_colocated, ck.duality_tol});
    }
    {
        CsvWriter w(run.file("fd_gradient.csv"), {"component", "free", "gradient", "fd", "step", "rel_error"});
        for (int k = 0; k < 4; ++k) {
            const auto& c = fd.comp[k];
            w.row({std::string(names[k]), static_cast<long long>(c.free), c.gradient, c.fd, c.step, c.rel_error});
        }
    }
    run.result = {{"duality", {{"lhs", d.lhs},
                               {"rhs_discrete", d.rhs_discrete},
                               {"rhs_colocated", d.rhs_colocated},
                               {"residual_discrete", d.residual_discrete},
                               {"residual_colocated", d.residual_colocated}}},
                  {"fd_max_rel_error", fd.max_rel_error},
                  {"pass", dual_ok && fd_ok}};
    fmt::print("adjoint-check ({})\n", run.regime_name);
    fmt::print("  duality residual (discrete pairings)   {:.3e}  tol {:.1e}\n", d.residual_discrete, discrete_tol);
    fmt::print("  duality residual (continuous pairings) {:.3e}  tol {:.1e}\n", d.residual_colocated, ck.duality_tol);
    fmt::print("  {:>5} {:>24} {:>24} {:>10}\n", "", "gradient", "central FD", "rel err");
    for (int k = 0; k < 4; ++k) {
        const auto& c = fd.comp[k];
        if (c.free)
            fmt::print("  {:>5} {:>24.15e} {:>24.15e} {:>10.2e}\n", names[k], c.gradient, c.fd, c.rel_error);
        else
            fmt::print("  {:>5} {:>24} {:>24} {:>10}\n", names[k], "masked", "-", "-");
    }
    fmt::print("  duality {}, gradient {}\n", dual_ok ? "PASS" : "FAIL", fd_ok ? "PASS" : "FAIL");
    return dual_ok && fd_ok ? kExitOk : kExitCheckFailed;
}

void write_history(Run& run, const IdentifyReport& rep) {
    CsvWriter w(run.file("history.csv"), {"k", "P", "chi", "eta", "C", "cost", "stationarity", "step", "backtracks"});
    for (const auto& h : rep.history)
        w.row({static_cast<long long>(h.k), h.ctrl.P, h.ctrl.chi, h.ctrl.eta, h.ctrl.C, h.cost, h.stationarity,
               h.step, static_cast<long long>(h.backtracks)});
    std::vector<double> k, s;
    for (const auto& h : rep.history) {
        k.push_back(h.k + 1.0);
        s.push_back(h.stationarity);
    }
    write_loglog_png(run.file("stationarity.png"), {{"stationarity", k, s}});
}

json report_json(const IdentifyReport& rep) {
    return {{"ctrl", ctrl_json(rep.ctrl)},
            {"cost", rep.cost},
            {"grad", rep.grad},
            {"grad0_norm", rep.grad0_norm},
            {"stationarity", rep.stationarity},
            {"tol", rep.tol},
            {"iterations", rep.history.empty() ? 0 : rep.history.back().k},
            {"converged", rep.converged},
            {"max_iterations", rep.max_iterations},
            {"error", rep.error}};
}

json audit_json(const ViAudit& a) {
    return {{"min_value", a.min_value}, {"tol", a.tol}, {"directions", a.directions}, {"pass", a.pass}};
}

int cmd_identify(Run& run) {
    const ModelConfig m = regime_model(run.cfg, run.regime);
    const CostSpec cost = build_cost(run.cfg, m, run.regime);
    const AdjointRegime reg = run_regime(m);
    const ControlBounds& b = run.cfg.scenario.bounds;
    ControlVector start = run.cfg.identify_start.value_or(run.cfg.scenario.ctrl);
    if (eta_masked(m, reg)) start.eta = 0.0;
    check_regime(m, start, cost, reg);
    const IdentifyReport rep = identify(m, cost, b, start, reg, run.cfg.identify);
    write_history(run, rep);
    run.result = report_json(rep);
    if (!rep.error.empty()) {
        spdlog::error("identify aborted: {}", rep.error);
        return kExitError;
    }
    const ViAudit audit = vi_audit(rep.ctrl, rep.grad, b, free_components(m, reg), vi_tolerance(rep.grad0_norm, b),
                                   run.cfg.seed);
    run.result["vi_audit"] = audit_json(audit);
    if (rep.final_eval.state) write_heatmap_png(run.file("phi_final.png"), rep.final_eval.state->phi().back(), -1, 1);
    fmt::print("identify ({}): {} iterations, cost {}, stationarity {:.3e} (tol {:.3e})\n", run.regime_name,
               rep.history.empty() ? 0 : rep.history.back().k, format_real(rep.cost), rep.stationarity, rep.tol);
    fmt::print("  control  P = {}  chi = {}  eta = {}  C = {}\n", format_real(rep.ctrl.P), format_real(rep.ctrl.chi),
               format_real(rep.ctrl.eta), format_real(rep.ctrl.C));
    fmt::print("  VI audit min {:.3e} over {} directions, tol {:.3e}: {}\n", audit.min_value, audit.directions, audit.tol,
               audit.pass ? "PASS" : "FAIL");
    return rep.converged && audit.pass ? kExitOk : kExitCheckFailed;
}

int cmd_twin(Run& run) {
    const ModelConfig m = regime_model(run.cfg, run.regime);
    const ControlBounds& b = run.cfg.scenario.bounds;
    ControlVector truth = run.cfg.scenario.ctrl;
    if (eta_masked(m, run_regime(m))) truth.eta = 0.0;
    TwinOptions opts = run.cfg.twin;
    opts.seed = run.cfg.seed;
    opts.identify = run.cfg.identify;
    const TwinResult tw = twin_experiment(m, truth, b, opts);
    write_history(run, tw.report);
    const auto fr = free_components(m, run_regime(m));
    bool ok = tw.report.error.empty() && tw.audit.pass;
    {
        CsvWriter w(run.file("twin.csv"), {"component", "free", "truth", "start", "recovered", "rel_error"});
        const auto t = tw.truth.as_array(), s = tw.start.as_array(), r = tw.report.ctrl.as_array();
        for (int k = 0; k < 4; ++k) {
            w.row({std::string(names[k]), static_cast<long long>(fr[k]), t[k], s[k], r[k], tw.rel_error[k]});
            if (fr[k] && !(tw.rel_error[k] <= run.cfg.checks.twin_tol)) ok = false;
        }
    }
    run.result = report_json(tw.report);
    run.result["truth"] = ctrl_json(tw.truth);
    run.result["rel_error"] = tw.rel_error;
    run.result["vi_audit"] = audit_json(tw.audit);
    run.result["pass"] = ok;
    if (!tw.report.error.empty()) {
        spdlog::error("twin identify aborted: {}", tw.report.error);
        return kExitError;
    }
    fmt::print("twin ({}), noise {}: {} iterations\n", run.regime_name, opts.noise,
               tw.report.history.empty() ? 0 : tw.report.history.back().k);
    const auto t = tw.truth.as_array(), r = tw.report.ctrl.as_array();
    for (int k = 0; k < 4; ++k)
        fmt::print("  {:>4} truth {:>10.6g} recovered {:>14.10g} rel err {:.3e}{}\n", names[k], t[k], r[k],
                   tw.rel_error[k], fr[k] ? "" : " (masked)");
    fmt::print("  VI audit: {}\n  recovery within {}: {}\n", tw.audit.pass ? "PASS" : "FAIL", run.cfg.checks.twin_tol,
               ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitCheckFailed;
}

bool emit_table(Run& run, const ConvergenceTable& t, SweepFamily fam) {
    const std::string stem = "sweep_" + t.family + "_" + t.object;
    t.write_csv(run.file(stem + ".csv").string());
    std::vector<double> x;
    for (const auto& r : t.rungs) x.push_back(fam == SweepFamily::tau_to_zero ? r.tau : r.eps);
    std::vector<PlotSeries> series;
    for (const auto& c : t.columns)
        if (c.kind != TableColumn::Kind::info) series.push_back({c.name, x, c.values});
    write_loglog_png(run.file(stem + ".png"), series);
    const auto checks = t.check();
    bool ok = true;
    json jc = json::array();
    fmt::print("sweep {} / {}: floor {:.3e}\n", t.family, t.object, t.floor);
    for (const auto& c : checks) {
        fmt::print("  {:<18} {}  {}\n", c.column, c.pass ? "PASS" : "FAIL", c.detail);
        ok = ok && c.pass;
        jc.push_back({{"column", c.column}, {"pass", c.pass}, {"detail", c.detail}});
    }
    for (const auto& n : t.notes) fmt::print("  note: {}\n", n);
    run.result[stem] = {{"floor", t.floor}, {"checks", jc}, {"notes", t.notes}, {"pass", ok}};
    return ok;
}

int cmd_sweep(Run& run) {
    std::vector<SweepFamily> fams;
    if (run.regime_name.empty() || run.regime_name == "full")
        fams = {SweepFamily::eps_to_zero, SweepFamily::tau_to_zero, SweepFamily::joint};
    else
        fams = {parse_sweep_family(run.regime_name)};
    const ModelConfig base = regime_model(run.cfg, Regime::full);
    const SweepConfig& sc = run.cfg.sweep;
    bool ok = true;
    for (SweepFamily fam : fams) {
        const CostSpec cost = build_cost(run.cfg, base, limit_regime(fam));
        SweepPlan plan =
            make_plan(fam, base, run.cfg.scenario.ctrl, run.cfg.scenario.bounds, cost, sc.rungs, sc.ratio);
        if (sc.start > 0.0) {
            plan.rungs.clear();
            for (double v : geometric_ladder(sc.start, sc.rungs, sc.ratio)) {
                if (fam == SweepFamily::eps_to_zero) plan.rungs.push_back({v, base.tau});
                if (fam == SweepFamily::tau_to_zero) plan.rungs.push_back({base.eps, v});
                if (fam == SweepFamily::joint) plan.rungs.push_back({v, v});
            }
        }
        plan.rho = sc.rho;
        plan.threads = run.cfg.threads;
        plan.floor = sc.floor;
        plan.validate();
        if (sc.states) ok = emit_table(run, sweep_states(plan), fam) && ok;
        if (sc.adjoints) ok = emit_table(run, sweep_adjoints(plan), fam) && ok;
        if (sc.adapted) ok = emit_table(run, sweep_adapted_identify(plan, run.cfg.identify), fam) && ok;
    }
    run.result["pass"] = ok;
    return ok ? kExitOk : kExitCheckFailed;
}

int execute(const std::string& command, const Flags& fl, const std::function<int(Run&)>& body) {
    Run run;
    run.command = command;
    run.cfg = fl.config.empty() ? RunConfig{} : load_config(fl.config);
    if (!fl.out.empty()) run.cfg.out_dir = fl.out;
    if (fl.seed) run.cfg.seed = *fl.seed;
    if (fl.stride) {
        if (*fl.stride < 1) throw ConfigInvalid("--stride must be >= 1");
        run.cfg.stride = *fl.stride;
    }
    if (fl.threads) run.cfg.threads = *fl.threads;
    if (const char* env = std::getenv("NLOCH_THREADS"); env && *env) {
        try {
            run.cfg.threads = std::stoi(env);
        } catch (const std::exception&) {
            throw ConfigInvalid(std::string("NLOCH_THREADS is not an integer: ") + env);
        }
    }
    if (run.cfg.threads < 1) throw ConfigInvalid("thread count must be >= 1");

    if (command == "sweep") {
        // The regime names the sweep family here; validation runs on the configured eps, tau.
        run.regime_name = fl.regime.empty() ? "full" : fl.regime;
        if (run.regime_name != "full") run.regime = limit_regime(parse_sweep_family(run.regime_name));
        run.report = validate(run.cfg, Regime::full);
    } else {
        run.regime_name = fl.regime.empty() ? "full" : fl.regime;
        run.regime = parse_regime(run.regime_name);
        run.report = validate(run.cfg, run.regime);
    }

    run.out = run.cfg.out_dir;
    fs::create_directories(run.out);
    DirLock lock(run.out);
    print_report(run.report);
    spdlog::info("{} ({}), config hash {}, output {}", command, run.regime_name, hex64(config_hash(run.cfg)),
                 run.out.string());
    if (!run.report.ok) {
        run.write_manifest("rejected");
        require_valid(run.report);
    }
    const auto t0 = std::chrono::steady_clock::now();
    int code = kExitError;
    try {
        code = body(run);
    } catch (const Error& e) {
        run.result["error"] = e.what();
        run.write_manifest("error");
        throw;
    }
    run.write_manifest(code == kExitOk ? "ok" : code == kExitCheckFailed ? "check_failed" : "error");
    spdlog::info("{} finished in {:.1f} s, exit {}", command,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), code);
    return code;
}

void add_flags(CLI::App* sub, Flags& fl) {
    sub->add_option("--config", fl.config, "config file (INI, or JSON with a .json extension)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", fl.out, "output directory");
    sub->add_option("--seed", fl.seed, "random seed");
    sub->add_option("--regime", fl.regime, "full, eps0, tau0 or joint (sweep: eps, tau or joint)")
        ->check(CLI::IsMember({"full", "eps0", "tau0", "joint", "eps", "tau"}));
    sub->add_option("--stride", fl.stride, "snapshot stride");
    sub->add_option("--threads", fl.threads, "worker threads (NLOCH_THREADS overrides)");
    sub->add_flag("-q,--quiet", fl.quiet, "log warnings and errors only");
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"nonlocal viscous Cahn-Hilliard tumor model: simulation, sensitivities, identification"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    Flags fl;
    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(Run&);
    };
    const Cmd cmds[] = {
        {"simulate", "forward solve; snapshots, diagnostics and heatmaps", cmd_simulate},
        {"tangent-check", "Taylor remainder test of the tangent", cmd_tangent},
        {"adjoint-check", "duality residual and finite-difference gradient table", cmd_adjoint},
        {"identify", "projected-gradient identification of (P, chi, eta, C)", cmd_identify},
        {"twin", "twin experiment: identify from synthetic data", cmd_twin},
        {"sweep", "relaxation sweep tables as eps and/or tau vanish", cmd_sweep},
    };
    for (const auto& c : cmds) add_flags(app.add_subcommand(c.name, c.help), fl);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    auto logger = spdlog::default_logger();
    const auto old_level = logger->level();
    if (fl.quiet) logger->set_level(spdlog::level::warn);
    int code = kExitError;
    for (const auto& c : cmds) {
        if (!app.got_subcommand(c.name)) continue;
        try {
            code = execute(c.name, fl, c.fn);
        } catch (const Error& e) {
            spdlog::error("{}", e.what());
            code = kExitError;
        } catch (const std::exception& e) {
            spdlog::error("unexpected failure: {}", e.what());
            code = kExitError;
        }
    }
    logger->set_level(old_level);
    return code;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"nloch"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace nloch
