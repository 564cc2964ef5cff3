#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nloch/cost.hpp"
#include "nloch/sensitivity.hpp"
#include "nloch/state.hpp"

namespace nloch {

using Vec4 = std::array<double, 4>;

// Gradient of the reduced cost: adjoint pairings plus the Tikhonov and adapted penalty terms.
// Masked components (eta in the eps and joint families) are reported as 0.
Vec4 reduced_gradient(const ModelConfig& cfg, const AdjointTrajectory& adjoint, const ControlVector& ctrl,
                      const CostSpec& cost, const AdjointRegime& regime);

// Components the optimizer may move.
std::array<bool, 4> free_components(const ModelConfig& cfg, const AdjointRegime& regime);

ControlVector project_box(const ControlVector& c, const ControlBounds& b);

// ||c - P(c - g)||_2
double stationarity(const ControlVector& c, const Vec4& g, const ControlBounds& b);

// One forward solve, optionally followed by the adjoint and the reduced gradient.
struct Evaluation {
    ControlVector ctrl{};
    CostBreakdown cost{};
    Vec4 grad{};
    std::shared_ptr<const StateTrajectory> state;
    std::shared_ptr<const AdjointTrajectory> adjoint;
};

Evaluation evaluate(const ModelConfig& cfg, const CostSpec& cost, const ControlVector& ctrl,
                    const AdjointRegime& regime, bool with_gradient = true);

struct IdentifyOptions {
    int k_max = 200;
    double tol = -1.0;  // negative: 1e-6 * (1 + |g0|)
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double step_min = 1e-6;
    double step_max = 1e3;
    int max_backtracks = 40;
};

struct IterateRecord {
    int k = 0;
    ControlVector ctrl{};
    double cost = 0;
    double stationarity = 0;
    double step = 0;  // accepted step length, 0 at k = 0
    int backtracks = 0;
};

struct IdentifyReport {
    std::vector<IterateRecord> history;
    ControlVector ctrl{};
    double cost = 0;
    Vec4 grad{};
    double grad0_norm = 0;
    double stationarity = 0;
    double tol = 0;
    bool converged = false;
    bool max_iterations = false;
    std::string error;  // solver failure that aborted the run, empty otherwise
    Evaluation final_eval;
};

IdentifyReport identify(const ModelConfig& cfg, const CostSpec& cost, const ControlBounds& bounds,
                        const ControlVector& ctrl0, const AdjointRegime& regime,
                        const IdentifyOptions& opts = {});

// Sampled check of the variational inequality <g, theta - c> >= -tol over the box corners,
// the axis extremes and random feasible points.
struct ViAudit {
    double min_value = 0;
    double tol = 0;
    int directions = 0;
    bool pass = false;
    ControlVector worst{};
};

ViAudit vi_audit(const ControlVector& c, const Vec4& g, const ControlBounds& b, const std::array<bool, 4>& free,
                 double tol, std::uint64_t seed = 7, int random_points = 100);

// Default VI tolerance: 1e-5 * (1 + |g0|) * diam(box).
double vi_tolerance(double grad0_norm, const ControlBounds& b);

struct TwinOptions {
    double noise = 0.0;  // std of additive Gaussian noise on phi_Q, relative to max |phi|
    std::uint64_t seed = 1;
    double alpha = 1e-6;
    double beta_Omega = 1e3;
    double beta_Q = 1e3;
    double prior_offset = 0.05;  // priors = truth * (1 + offset)
    double start_offset = 0.2;   // start = truth * (1 - offset), clamped into the box
    IdentifyOptions identify{};
};

struct TwinResult {
    ControlVector truth{};
    ControlVector start{};
    CostSpec cost;
    IdentifyReport report;
    Vec4 rel_error{};  // |c - truth| / |truth| (absolute where truth is 0)
    ViAudit audit;
};

TwinResult twin_experiment(const ModelConfig& cfg, const ControlVector& truth, const ControlBounds& bounds,
                           const TwinOptions& opts = {});

} // namespace nloch
