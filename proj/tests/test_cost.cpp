#include <gtest/gtest.h>

#include <cmath>

#include "nloch/cost.hpp"
#include "nloch/errors.hpp"
#include "nloch/sensitivity.hpp"
#include "nloch/setup.hpp"
#include "support.hpp"

using namespace nloch;
using nloch::test::random_field;
using nloch::test::small_scenario;

namespace {

StateTrajectory short_run() {
    const Scenario s = small_scenario(12, 8);
    return solve_state(build_model(s), s.ctrl);
}

} // namespace

TEST(Cost, PerfectFitIsZero) {
    const StateTrajectory st = short_run();
    CostSpec c;
    c.phi_Q = st.phi();
    c.phi_Omega = st.phi().back();
    c.beta_Omega = 3.0;
    c.beta_Q = 2.0;
    c.alpha = {1, 1, 1, 1};
    c.prior = ControlVector{2.0, 0.5, 0.2, 1.0};
    EXPECT_EQ(eval_cost(st, c.prior, c).total, 0.0);
}

TEST(Cost, TikhonovOnly) {
    const StateTrajectory st = short_run();
    CostSpec c;
    c.phi_Omega = Field(st.grid);
    c.phi_Q = {Field(st.grid)};
    c.alpha = {2.0, 0.0, 0.0, 0.0};
    c.prior = ControlVector{1.0, 0.3, 0.1, 0.7};
    ControlVector u = c.prior;
    u.P += 1.0;
    EXPECT_DOUBLE_EQ(eval_cost(st, u, c).total, 1.0);
}

TEST(Cost, MatchesIndependentQuadrature) {
    const StateTrajectory st = short_run();
    CostSpec c;
    c.phi_Omega = random_field(st.grid, 1);
    for (std::size_t n = 0; n < st.levels(); ++n) c.phi_Q.push_back(random_field(st.grid, 10 + n));
    c.beta_Omega = 0.7;
    c.beta_Q = 1.3;
    c.alpha = {0.1, 0.2, 0.3, 0.4};
    c.prior = ControlVector{1.0, 1.0, 1.0, 1.0};
    const ControlVector u{2.0, 0.5, 0.2, 1.0};

    const double area = st.grid.cell_area();
    auto sq = [&](const Field& a, const Field& b) {
        long double s = 0;
        for (std::size_t k = 0; k < a.size(); ++k) s += (long double)(a[k] - b[k]) * (a[k] - b[k]);
        return static_cast<double>(s) * area;
    };
    const std::size_t N = st.levels() - 1;
    double q = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
        const double w = (n == 0 ? 0.0 : 0.5 * (st.times[n] - st.times[n - 1])) +
                         (n == N ? 0.0 : 0.5 * (st.times[n + 1] - st.times[n]));
        q += w * sq(st.phi()[n], c.phi_Q[n]);
    }
    const double expect = 0.5 * 0.7 * sq(st.phi()[N], c.phi_Omega) + 0.5 * 1.3 * q +
                          0.5 * (0.1 * 1.0 + 0.2 * 0.25 + 0.3 * 0.64 + 0.4 * 0.0);
    EXPECT_NEAR(eval_cost(st, u, c).total, expect, 1e-12 * expect);
}

TEST(Cost, ValidationRejectsBadSpecs) {
    const StateTrajectory st = short_run();
    CostSpec c;
    c.phi_Omega = Field(st.grid);
    c.phi_Q = {Field(st.grid)};
    EXPECT_THROW(c.validate(st.grid, st.levels()), ConfigInvalid);  // all weights zero
    c.beta_Q = -1.0;
    EXPECT_THROW(c.validate(st.grid, st.levels()), ConfigInvalid);
    c.beta_Q = 1.0;
    c.phi_Q = {Field(st.grid), Field(st.grid)};
    EXPECT_THROW(c.validate(st.grid, st.levels()), ShapeMismatch);
    c.phi_Q = {Field(Grid2D{7, 7, 1, 1, 1e-3, 1})};
    EXPECT_THROW(c.validate(st.grid, st.levels()), ShapeMismatch);
}

TEST(Cost, AdaptedPenaltyMasks) {
    AdjointRegime r;
    r.adapted = true;
    r.kind = Regime::eps_zero;
    EXPECT_EQ(adapted_penalty_mask(r), (std::array<bool, 4>{true, true, false, true}));
    r.kind = Regime::joint_zero;
    EXPECT_EQ(adapted_penalty_mask(r), (std::array<bool, 4>{true, true, false, true}));
    r.kind = Regime::tau_zero;
    EXPECT_EQ(adapted_penalty_mask(r), (std::array<bool, 4>{true, true, true, true}));
}
