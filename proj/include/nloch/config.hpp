#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nloch/calibration.hpp"
#include "nloch/relaxation.hpp"
#include "nloch/setup.hpp"

namespace nloch {

// How the tracking targets are produced.
//   simulate: phi_Q and phi_Omega from a run of the model at `target` controls
//   constant: phi_Q = phi_Omega = value
//   file:     phi_Omega (and a time-constant phi_Q) read from NLF1 files
struct CostConfig {
    std::string target_mode = "simulate";
    ControlVector target{};  // unset components default to a perturbation of the controls
    bool target_set = false;
    double target_value = 0.0;
    std::string phi_Omega_path;
    std::string phi_Q_path;
    double beta_Omega = 1.0;
    double beta_Q = 1.0;
    ControlVector alpha{1e-3, 1e-3, 1e-3, 1e-3};
    ControlVector prior{};
    bool prior_set = false;
};

struct SweepConfig {
    int rungs = 6;
    double ratio = 0.5;
    double start = 0.0;  // 0 selects min(eps0, tau0)/2
    double rho = 1.0;
    bool floor = true;
    bool states = true;
    bool adjoints = true;
    bool adapted = false;
};

struct CheckConfig {
    double duality_tol = 5e-3;
    double fd_tol = 1e-2;
    double fd_step = 1e-4;
    double slope_lo = 1.8;
    double slope_hi = 2.2;
    double twin_tol = 0.02;  // relative recovery error per control
};

struct RunConfig {
    Scenario scenario = reference_scenario();
    std::string scenario_name = "reference";  // built-in base the file settings are applied to
    CostConfig cost;
    IdentifyOptions identify;
    std::optional<ControlVector> identify_start;
    TwinOptions twin;
    SweepConfig sweep;
    CheckConfig checks;
    std::string out_dir = "nloch_out";
    int stride = 10;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string source;  // path the config came from, empty for defaults
};

// Built-in scenarios: reference, reference_log, relaxation, twin.
Scenario named_scenario(const std::string& name);

// INI (sections and key = value) or JSON, chosen by the .json extension. Unknown keys are rejected.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, bool json);

// Canonical JSON rendering of every setting after defaults; the hash is FNV-1a 64 over it.
std::string canonical_json(const RunConfig& c);
std::uint64_t config_hash(const RunConfig& c);
std::string hex64(std::uint64_t v);

struct Clause {
    std::string id;
    std::string status;  // pass, fail, warn, n/a
    std::string detail;
};

struct ValidationReport {
    std::vector<Clause> clauses;
    std::map<std::string, double> quantities;
    bool ok = true;

    std::vector<std::string> failed() const;
    std::string to_json() const;
};

// Every assumption mapped to pass/fail/warn/n/a with the computed constants. `regime` is the regime
// the run will use. Does not throw; see require_valid.
ValidationReport validate(const RunConfig& c, Regime regime = Regime::full);
// Throws ConfigInvalid listing the failed clauses (RegimeViolation when only regime clauses fail).
void require_valid(const ValidationReport& r);

// Model with eps/tau forced to the regime (full keeps the configured values).
ModelConfig regime_model(const RunConfig& c, Regime regime);
Regime parse_regime(const std::string& s);

// Tracking cost for a model built from this config.
CostSpec build_cost(const RunConfig& c, const ModelConfig& model, Regime regime);

} // namespace nloch
