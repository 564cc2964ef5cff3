#include "nloch/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "nloch/errors.hpp"
#include "nloch/io.hpp"
#include "nloch/kernel.hpp"

namespace nloch {

namespace pt = boost::property_tree;

namespace {

class Reader {
public:
    explicit Reader(const pt::ptree& t) : t_(t) {}

    template <class T>
    bool get(const std::string& key, T& v) {
        const auto o = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!o) return false;
        used_.insert(key);
        v = convert<T>(trim(*o), key);
        return true;
    }

    // Leaf keys that no setter consumed.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        walk(t_, "", out);
        return out;
    }

private:
    const pt::ptree& t_;
    std::set<std::string> used_;

    static std::string trim(std::string s) {
        const auto b = s.find_first_not_of(" \t\r\n\"");
        const auto e = s.find_last_not_of(" \t\r\n\"");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }

    void walk(const pt::ptree& node, const std::string& prefix, std::vector<std::string>& out) const {
        for (const auto& [k, child] : node) {
            const std::string key = prefix.empty() ? k : prefix + "." + k;
            if (child.empty()) {
                if (!used_.count(key)) out.push_back(key);
            } else {
                walk(child, key, out);
            }
        }
    }

    template <class T>
    static T convert(const std::string& s, const std::string& key) {
        try {
            std::size_t pos = 0;
            if constexpr (std::is_same_v<T, std::string>) {
                return s;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
                if (s == "false" || s == "0" || s == "no" || s == "off") return false;
                throw std::invalid_argument("bool");
            } else if constexpr (std::is_same_v<T, int>) {
                const int v = std::stoi(s, &pos);
                if (pos != s.size()) throw std::invalid_argument("int");
                return v;
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                const auto v = std::stoull(s, &pos);
                if (pos != s.size()) throw std::invalid_argument("uint");
                return v;
            } else {
                const double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument("real");
                return v;
            }
        } catch (const std::logic_error&) {
            throw ConfigInvalid("config: cannot parse " + key + " = '" + s + "'");
        }
    }
};

void read_recipe(Reader& r, const std::string& sec, FieldRecipe& f) {
    r.get(sec + ".kind", f.kind);
    r.get(sec + ".value", f.value);
    r.get(sec + ".inside", f.inside);
    r.get(sec + ".outside", f.outside);
    r.get(sec + ".cx", f.cx);
    r.get(sec + ".cy", f.cy);
    r.get(sec + ".radius", f.radius);
    r.get(sec + ".width", f.width);
    r.get(sec + ".amplitude", f.amplitude);
    r.get(sec + ".kx", f.kx);
    r.get(sec + ".ky", f.ky);
    r.get(sec + ".seed", f.seed);
    r.get(sec + ".path", f.path);
}

nlohmann::json recipe_json(const FieldRecipe& f) {
    return {{"kind", f.kind}, {"value", f.value}, {"inside", f.inside}, {"outside", f.outside},
            {"cx", f.cx},     {"cy", f.cy},       {"radius", f.radius}, {"width", f.width},
            {"amplitude", f.amplitude}, {"kx", f.kx}, {"ky", f.ky}, {"seed", f.seed}, {"path", f.path}};
}

nlohmann::json ctrl_json(const ControlVector& c) {
    return {{"P", c.P}, {"chi", c.chi}, {"eta", c.eta}, {"C", c.C}};
}

ControlVector default_target(const ControlVector& c) {
    ControlVector t = c;
    t.P *= 1.2;
    t.chi *= 0.8;
    t.C *= 1.2;
    return t;
}

RunConfig parse_tree(const pt::ptree& tree) {
    RunConfig c;
    Scenario& s = c.scenario;
    Reader r(tree);
    std::string base;
    if (r.get("run.scenario", base)) {
        s = named_scenario(base);
        c.scenario_name = base;
    }
    r.get("grid.nx", s.grid.nx);
    r.get("grid.ny", s.grid.ny);
    r.get("grid.lx", s.grid.lx);
    r.get("grid.ly", s.grid.ly);
    r.get("grid.dt", s.grid.dt);
    r.get("grid.nt", s.grid.nt);

    r.get("model.A", s.A);
    r.get("model.B", s.B);
    r.get("model.eps", s.eps);
    r.get("model.tau", s.tau);
    r.get("model.S_stab", s.S_stab);
    r.get("model.lin_tol", s.lin_tol);
    r.get("model.mu0_mode", s.mu0_mode);

    std::string fam;
    if (r.get("kernel.family", fam)) s.kernel.family = parse_kernel_family(fam);
    r.get("kernel.strength", s.kernel.strength);
    r.get("kernel.width", s.kernel.width);
    r.get("kernel.cutoff", s.kernel.cutoff);
    if (r.get("potential.family", fam)) s.potential.family = parse_potential_family(fam);
    r.get("potential.theta", s.potential.theta);
    r.get("potential.theta0", s.potential.theta0);
    r.get("potential.delta_clip", s.potential.delta_clip);
    if (r.get("proliferation.family", fam)) s.f.family = parse_proliferation_family(fam);
    r.get("proliferation.fmax", s.f.fmax);
    r.get("proliferation.center", s.f.center);
    r.get("proliferation.width", s.f.width);

    read_recipe(r, "phi0", s.phi0);
    read_recipe(r, "sigma0", s.sigma0);
    read_recipe(r, "sigma_S", s.sigma_S);
    read_recipe(r, "mu0", s.mu0);

    r.get("controls.P", s.ctrl.P);
    r.get("controls.chi", s.ctrl.chi);
    r.get("controls.eta", s.ctrl.eta);
    r.get("controls.C", s.ctrl.C);
    r.get("bounds.P_max", s.bounds.P_max);
    r.get("bounds.chi_max", s.bounds.chi_max);
    r.get("bounds.eta_max", s.bounds.eta_max);
    r.get("bounds.C_max", s.bounds.C_max);

    CostConfig& k = c.cost;
    r.get("cost.target", k.target_mode);
    k.target = default_target(s.ctrl);
    k.target_set |= r.get("cost.target_P", k.target.P);
    k.target_set |= r.get("cost.target_chi", k.target.chi);
    k.target_set |= r.get("cost.target_eta", k.target.eta);
    k.target_set |= r.get("cost.target_C", k.target.C);
    r.get("cost.target_value", k.target_value);
    r.get("cost.phi_Omega_file", k.phi_Omega_path);
    r.get("cost.phi_Q_file", k.phi_Q_path);
    r.get("cost.beta_Omega", k.beta_Omega);
    r.get("cost.beta_Q", k.beta_Q);
    r.get("cost.alpha_P", k.alpha.P);
    r.get("cost.alpha_chi", k.alpha.chi);
    r.get("cost.alpha_eta", k.alpha.eta);
    r.get("cost.alpha_C", k.alpha.C);
    k.prior = s.ctrl;
    k.prior_set |= r.get("cost.P_star", k.prior.P);
    k.prior_set |= r.get("cost.chi_star", k.prior.chi);
    k.prior_set |= r.get("cost.eta_star", k.prior.eta);
    k.prior_set |= r.get("cost.C_star", k.prior.C);

    r.get("identify.k_max", c.identify.k_max);
    r.get("identify.tol", c.identify.tol);
    r.get("identify.armijo_c", c.identify.armijo_c);
    r.get("identify.backtrack", c.identify.backtrack);
    r.get("identify.step_min", c.identify.step_min);
    r.get("identify.step_max", c.identify.step_max);
    ControlVector start = s.ctrl;
    bool has_start = false;
    has_start |= r.get("identify.start_P", start.P);
    has_start |= r.get("identify.start_chi", start.chi);
    has_start |= r.get("identify.start_eta", start.eta);
    has_start |= r.get("identify.start_C", start.C);
    if (has_start) c.identify_start = start;

    r.get("twin.noise", c.twin.noise);
    r.get("twin.alpha", c.twin.alpha);
    r.get("twin.beta_Omega", c.twin.beta_Omega);
    r.get("twin.beta_Q", c.twin.beta_Q);
    r.get("twin.prior_offset", c.twin.prior_offset);
    r.get("twin.start_offset", c.twin.start_offset);

    r.get("sweep.rungs", c.sweep.rungs);
    r.get("sweep.ratio", c.sweep.ratio);
    r.get("sweep.start", c.sweep.start);
    r.get("sweep.rho", c.sweep.rho);
    r.get("sweep.floor", c.sweep.floor);
    r.get("sweep.states", c.sweep.states);
    r.get("sweep.adjoints", c.sweep.adjoints);
    r.get("sweep.adapted", c.sweep.adapted);

    r.get("checks.duality_tol", c.checks.duality_tol);
    r.get("checks.fd_tol", c.checks.fd_tol);
    r.get("checks.fd_step", c.checks.fd_step);
    r.get("checks.slope_lo", c.checks.slope_lo);
    r.get("checks.slope_hi", c.checks.slope_hi);
    r.get("checks.twin_tol", c.checks.twin_tol);

    r.get("output.dir", c.out_dir);
    r.get("output.stride", c.stride);
    r.get("run.seed", c.seed);
    r.get("run.threads", c.threads);

    const auto extra = r.unused();
    if (!extra.empty()) {
        std::string msg = "config: unknown keys:";
        for (const auto& e : extra) msg += " " + e;
        throw ConfigInvalid(msg);
    }
    if (c.stride < 1) throw ConfigInvalid("config: output.stride must be >= 1");
    if (c.threads < 1) throw ConfigInvalid("config: run.threads must be >= 1");
    if (c.sweep.rungs < 1) throw ConfigInvalid("config: sweep.rungs must be >= 1");
    if (!(c.sweep.ratio > 0.0 && c.sweep.ratio < 1.0)) throw ConfigInvalid("config: sweep.ratio must lie in (0,1)");
    return c;
}

void add(ValidationReport& r, const std::string& id, bool ok, const std::string& detail, bool hard = true) {
    r.clauses.push_back({id, ok ? "pass" : (hard ? "fail" : "warn"), detail});
    if (!ok && hard) r.ok = false;
}

void add_na(ValidationReport& r, const std::string& id, const std::string& detail) {
    r.clauses.push_back({id, "n/a", detail});
}

} // namespace

Scenario named_scenario(const std::string& name) {
    if (name == "reference") return reference_scenario();
    if (name == "reference_log") return reference_log_scenario();
    if (name == "relaxation") return relaxation_scenario();
    if (name == "twin") return twin_scenario();
    throw ConfigInvalid("config: unknown scenario '" + name + "' (reference, reference_log, relaxation, twin)");
}

RunConfig parse_config_text(const std::string& text, bool json) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        if (json)
            pt::read_json(in, tree);
        else
            pt::read_ini(in, tree);
    } catch (const pt::ptree_error& e) {
        throw ConfigInvalid(std::string("config: ") + e.what());
    }
    return parse_tree(tree);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    RunConfig c = parse_config_text(ss.str(), json);
    c.source = path;
    return c;
}

std::string canonical_json(const RunConfig& c) {
    const Scenario& s = c.scenario;
    nlohmann::json j;
    j["grid"] = {{"nx", s.grid.nx}, {"ny", s.grid.ny}, {"lx", s.grid.lx},
                 {"ly", s.grid.ly}, {"dt", s.grid.dt}, {"nt", s.grid.nt}};
    j["model"] = {{"A", s.A},           {"B", s.B},         {"eps", s.eps},         {"tau", s.tau},
                  {"S_stab", s.S_stab}, {"lin_tol", s.lin_tol}, {"mu0_mode", s.mu0_mode}};
    j["kernel"] = {{"family", to_string(s.kernel.family)}, {"strength", s.kernel.strength},
                   {"width", s.kernel.width}, {"cutoff", s.kernel.cutoff}};
    j["potential"] = {{"family", to_string(s.potential.family)}, {"theta", s.potential.theta},
                      {"theta0", s.potential.theta0}, {"delta_clip", s.potential.delta_clip}};
    j["proliferation"] = {{"family", to_string(s.f.family)}, {"fmax", s.f.fmax}, {"center", s.f.center},
                          {"width", s.f.width}};
    j["phi0"] = recipe_json(s.phi0);
    j["sigma0"] = recipe_json(s.sigma0);
    j["sigma_S"] = recipe_json(s.sigma_S);
    j["mu0"] = recipe_json(s.mu0);
    j["controls"] = ctrl_json(s.ctrl);
    j["bounds"] = {{"P_max", s.bounds.P_max}, {"chi_max", s.bounds.chi_max}, {"eta_max", s.bounds.eta_max},
                   {"C_max", s.bounds.C_max}};
    const CostConfig& k = c.cost;
    j["cost"] = {{"target", k.target_mode},       {"target_ctrl", ctrl_json(k.target)},
                 {"target_value", k.target_value}, {"phi_Omega_file", k.phi_Omega_path},
                 {"phi_Q_file", k.phi_Q_path},    {"beta_Omega", k.beta_Omega},
                 {"beta_Q", k.beta_Q},            {"alpha", ctrl_json(k.alpha)},
                 {"prior", ctrl_json(k.prior)}};
    j["identify"] = {{"k_max", c.identify.k_max},       {"tol", c.identify.tol},
                     {"armijo_c", c.identify.armijo_c}, {"backtrack", c.identify.backtrack},
                     {"step_min", c.identify.step_min}, {"step_max", c.identify.step_max},
                     {"start", c.identify_start ? ctrl_json(*c.identify_start) : nlohmann::json()}};
    j["twin"] = {{"noise", c.twin.noise},           {"alpha", c.twin.alpha},
                 {"beta_Omega", c.twin.beta_Omega}, {"beta_Q", c.twin.beta_Q},
                 {"prior_offset", c.twin.prior_offset}, {"start_offset", c.twin.start_offset}};
    j["sweep"] = {{"rungs", c.sweep.rungs}, {"ratio", c.sweep.ratio},   {"start", c.sweep.start},
                  {"rho", c.sweep.rho},     {"floor", c.sweep.floor},   {"states", c.sweep.states},
                  {"adjoints", c.sweep.adjoints}, {"adapted", c.sweep.adapted}};
    j["checks"] = {{"duality_tol", c.checks.duality_tol}, {"fd_tol", c.checks.fd_tol},
                   {"fd_step", c.checks.fd_step},         {"slope_lo", c.checks.slope_lo},
                   {"slope_hi", c.checks.slope_hi}, {"twin_tol", c.checks.twin_tol}};
    j["output"] = {{"stride", c.stride}};
    j["run"] = {{"seed", c.seed}, {"scenario", c.scenario_name}};
    return j.dump();
}

std::uint64_t config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical_json(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::vector<std::string> ValidationReport::failed() const {
    std::vector<std::string> out;
    for (const auto& c : clauses)
        if (c.status == "fail") out.push_back(c.id);
    return out;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["clauses"] = nlohmann::json::array();
    for (const auto& c : clauses) j["clauses"].push_back({{"id", c.id}, {"status", c.status}, {"detail", c.detail}});
    j["quantities"] = quantities;
    return j.dump();
}

Regime parse_regime(const std::string& s) {
    if (s == "full") return Regime::full;
    if (s == "eps0" || s == "eps") return Regime::eps_zero;
    if (s == "tau0" || s == "tau") return Regime::tau_zero;
    if (s == "joint") return Regime::joint_zero;
    throw ConfigInvalid("unknown regime '" + s + "' (full, eps0, tau0 or joint)");
}

ModelConfig regime_model(const RunConfig& c, Regime regime) {
    ModelConfig m = build_model(c.scenario);
    if (regime == Regime::eps_zero || regime == Regime::joint_zero) m.eps = 0.0;
    if (regime == Regime::tau_zero || regime == Regime::joint_zero) m.tau = 0.0;
    return m;
}

ValidationReport validate(const RunConfig& c, Regime regime) {
    ValidationReport r;
    const Scenario& s = c.scenario;
    const ControlBounds& b = s.bounds;
    const ControlVector& u = s.ctrl;

    try {
        s.grid.validate();
        add(r, "grid", true, fmt::format("{}x{}, dt {}, nt {}", s.grid.nx, s.grid.ny, s.grid.dt, s.grid.nt));
    } catch (const Error& e) {
        add(r, "grid", false, e.what());
        return r;
    }

    const bool a1 = s.A >= 0 && s.B >= 0 && b.P_max >= 0 && b.chi_max >= 0 && b.eta_max >= 0 && b.C_max >= 0;
    add(r, "A1", a1, "A, B and the control bounds are nonnegative");
    add(r, "controls", b.contains(u), "controls inside [0, max]^4");

    const bool a2 = s.f.fmax >= 0.0 && s.f.width > 0.0;
    add(r, "A2", a2, "f = " + to_string(s.f.family) + ", bounded, Lipschitz and nonnegative");
    add(r, "C4", a2, "f has bounded first and second derivatives");

    Field sigS;
    try {
        sigS = make_field(s.sigma_S, s.grid);
        add(r, "A3", sigS.min() >= 0.0 && sigS.max() <= 1.0,
            fmt::format("sigma_S in [{:.6g}, {:.6g}]", sigS.min(), sigS.max()));
    } catch (const Error& e) {
        add(r, "A3", false, e.what());
    }

    try {
        s.potential.validate();
        add(r, "A4", true, "F = " + to_string(s.potential.family));
    } catch (const Error& e) {
        add(r, "A4", false, e.what());
    }

    std::shared_ptr<const KernelOp> kop;
    try {
        kop = build_kernel(s.kernel, s.grid);
    } catch (const Error& e) {
        add(r, "A5", false, e.what());
        return r;
    }
    const Coercivity co = coercivity_check(*kop, s.potential);
    r.quantities["a_star"] = kop->a_star();
    r.quantities["a_sup"] = kop->a_sup();
    r.quantities["b_sup"] = kop->b_sup();
    r.quantities["c_a"] = kop->c_a();
    r.quantities["C0"] = co.C0;
    r.quantities["min_F2"] = co.min_F2;
    r.quantities["eps0"] = co.eps0;
    r.quantities["tau0"] = co.tau0;
    add(r, "A5", co.ok && kop->a_star() >= 0.0,
        fmt::format("even kernel, a_* = {:.6g}, a^* = {:.6g}, b^* = {:.6g}, C0 = {:.6g}", kop->a_star(),
                    kop->a_sup(), kop->b_sup(), co.C0));

    // Window constants on the twice finer grid; large changes mean the kernel is under-resolved.
    try {
        const auto fine = build_kernel(s.kernel, s.grid.refined(2, 1));
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        const double d = std::max({rel(kop->a_star(), fine->a_star()), rel(kop->a_sup(), fine->a_sup()),
                                   rel(kop->b_sup(), fine->b_sup())});
        r.quantities["kernel_refinement_change"] = d;
        add(r, "kernel_resolution", d <= 0.05,
            fmt::format("largest relative change of a_*, a^*, b^* under 2x refinement {:.3e}", d), false);
    } catch (const Error& e) {
        add(r, "kernel_resolution", false, e.what(), false);
    }

    const double eps = regime == Regime::eps_zero || regime == Regime::joint_zero ? 0.0 : s.eps;
    const double tau = regime == Regime::tau_zero || regime == Regime::joint_zero ? 0.0 : s.tau;
    const bool a6 = (eps == 0.0 || (eps > 0.0 && eps < co.eps0)) && (tau == 0.0 || (tau > 0.0 && tau < co.tau0));
    add(r, "A6", a6, fmt::format("eps = {:.6g} (eps0 = {:.6g}), tau = {:.6g} (tau0 = {:.6g})", eps, co.eps0, tau, co.tau0));
    add(r, "A7", true,
        s.kernel.family == KernelFamily::truncated_newtonian ? "admissible radial kernel"
                                                             : "kernel of class W^{2,1} on the domain ball");
    const bool poly = s.potential.family == PotentialFamily::polynomial;
    if (poly)
        add(r, "A8", true, "quartic growth");
    else
        add(r, "A8", false, "singular potential: the asymptotic results do not apply", regime != Regime::full);

    const CostConfig& k = c.cost;
    const auto al = k.alpha.as_array();
    const bool nonneg = k.beta_Omega >= 0 && k.beta_Q >= 0 &&
                        std::all_of(al.begin(), al.end(), [](double x) { return x >= 0; });
    const bool not_all_zero =
        k.beta_Omega > 0 || k.beta_Q > 0 || std::any_of(al.begin(), al.end(), [](double x) { return x > 0; });
    add(r, "C1", k.target_mode == "simulate" || k.target_mode == "constant" || k.target_mode == "file",
        "targets from '" + k.target_mode + "'");
    add(r, "C2", nonneg && not_all_zero, "weights nonnegative, not all zero");
    const auto pr = k.prior.as_array();
    add(r, "C3", std::all_of(pr.begin(), pr.end(), [](double x) { return x >= 0; }), "priors nonnegative");

    // Regime hypotheses.
    if (eps == 0.0)
        add(r, "regime_eta", u.eta == 0.0, "eps = 0 requires eta = 0");
    else
        add_na(r, "regime_eta", "eps > 0");
    if (regime == Regime::tau_zero)
        add(r, "regime_beta_Omega", k.beta_Omega == 0.0, "the tau = 0 family has no terminal tracking term");
    else
        add_na(r, "regime_beta_Omega", "not the tau = 0 family");
    if (tau == 0.0) {
        const ModelConfig m = regime_model(c, regime);
        const auto sm = tau_zero_smallness(m, u);
        r.quantities["tau0_smallness_lhs"] = sm.lhs;
        r.quantities["tau0_smallness_rhs"] = sm.rhs;
        add(r, "tau0_smallness", sm.ok,
            fmt::format("(chi+eta+4 c_a chi)^2 = {:.6g} < 8 c_a C0 + 4 chi eta = {:.6g}, chi < sqrt(c_a)", sm.lhs,
                        sm.rhs),
            false);
        const double lhs = b.eta_max * b.eta_max + b.chi_max * b.chi_max;
        add(r, "tau0_bounds", b.chi_max < std::sqrt(kop->c_a()) && lhs < 4.0 / 9.0 * co.C0,
            fmt::format("chi_max = {:.6g} < sqrt(c_a) = {:.6g}, eta_max^2 + chi_max^2 = {:.6g} < 4 C0/9 = {:.6g}",
                        b.chi_max, std::sqrt(kop->c_a()), lhs, 4.0 / 9.0 * co.C0),
            false);
    } else {
        add_na(r, "tau0_smallness", "tau > 0");
        add_na(r, "tau0_bounds", "tau > 0");
    }

    // Uniform data bound, reported only.
    try {
        const ModelConfig m = build_model(s, kop);
        const Field F = eval_F(m.potential, m.phi0, 0);
        double l1 = 0.0;
        for (double v : F.values()) l1 += std::abs(v);
        l1 *= s.grid.cell_area();
        const double M0 = std::sqrt(std::max(eps, 0.0)) * std::sqrt(dot(m.mu0, m.mu0)) + l1;
        r.quantities["M0"] = M0;
        double phi_inf = 0.0;
        for (double v : m.phi0.values()) phi_inf = std::max(phi_inf, std::abs(v));
        r.quantities["phi0_inf"] = phi_inf;
        const double ell = s.potential.ell();
        add(r, "initial_data", phi_inf < ell, fmt::format("|phi0|_inf = {:.6g} < l = {:.6g}", phi_inf, ell));
        add(r, "M0", std::isfinite(M0), fmt::format("eps^1/2 |mu0| + |F(phi0)|_L1 = {:.6g}", M0), false);
    } catch (const Error& e) {
        add(r, "initial_data", false, e.what());
    }
    return r;
}

void require_valid(const ValidationReport& r) {
    if (r.ok) return;
    std::string msg = "configuration rejected:";
    bool only_regime = true;
    for (const auto& c : r.clauses)
        if (c.status == "fail") {
            msg += " [" + c.id + ": " + c.detail + "]";
            if (c.id.rfind("regime_", 0) != 0) only_regime = false;
        }
    if (only_regime) throw RegimeViolation(msg);
    throw ConfigInvalid(msg);
}

CostSpec build_cost(const RunConfig& c, const ModelConfig& model, Regime regime) {
    const CostConfig& k = c.cost;
    CostSpec cost;
    cost.beta_Omega = regime == Regime::tau_zero ? 0.0 : k.beta_Omega;
    cost.beta_Q = k.beta_Q;
    cost.alpha = k.alpha;
    cost.prior = k.prior;
    if (k.target_mode == "simulate") {
        ControlVector t = k.target;
        if (model.eps == 0.0) t.eta = 0.0;
        const StateTrajectory st = solve_state(model, project_box(t, c.scenario.bounds));
        cost.phi_Q = st.phi();
        cost.phi_Omega = st.phi().back();
    } else if (k.target_mode == "constant") {
        cost.phi_Omega = Field(model.grid, k.target_value);
        cost.phi_Q = {cost.phi_Omega};
    } else if (k.target_mode == "file") {
        if (k.phi_Omega_path.empty()) throw ConfigInvalid("cost: target = file needs phi_Omega_file");
        cost.phi_Omega = read_nlf1(k.phi_Omega_path).field;
        cost.phi_Q = {k.phi_Q_path.empty() ? cost.phi_Omega : read_nlf1(k.phi_Q_path).field};
        require_same_grid(cost.phi_Omega, Field(model.grid), "cost targets");
        require_same_grid(cost.phi_Q[0], Field(model.grid), "cost targets");
    } else {
        throw ConfigInvalid("cost: unknown target mode '" + k.target_mode + "'");
    }
    cost.validate(model.grid, static_cast<std::size_t>(model.grid.nt) + 1);
    return cost;
}

} // namespace nloch
