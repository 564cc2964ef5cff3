#include <gtest/gtest.h>

#include <cmath>

#include "nloch/errors.hpp"
#include "nloch/setup.hpp"
#include "nloch/state.hpp"
#include "support.hpp"

using namespace nloch;
using nloch::test::max_abs_diff;
using nloch::test::small_scenario;

namespace {

// Mean of each 2x2 block of a field on a grid refined by 2.
Field restrict2(const Field& fine, const Grid2D& coarse) {
    Field c(coarse);
    for (int j = 0; j < coarse.ny; ++j)
        for (int i = 0; i < coarse.nx; ++i)
            c.at(i, j) = 0.25 * (fine.at(2 * i, 2 * j) + fine.at(2 * i + 1, 2 * j) + fine.at(2 * i, 2 * j + 1) +
                                 fine.at(2 * i + 1, 2 * j + 1));
    return c;
}

double l2(const Field& u) { return std::sqrt(dot(u, u)); }

double c0h(const StateTrajectory& a, const StateTrajectory& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.levels(); ++n) m = std::max(m, l2(a.phi()[n] - b.phi()[n]));
    return m;
}

} // namespace

TEST(StateStep, ConstantEquilibriumIsStationary) {
    Scenario s = small_scenario(16, 10);
    s.A = 0.0;
    s.B = 0.0;
    s.phi0 = FieldRecipe{"constant", 0.3};
    s.sigma0 = FieldRecipe{"constant", 0.6};
    s.ctrl = ControlVector{};
    const ModelConfig m = build_model(s);
    for (std::size_t k = 0; k < m.mu0.size(); ++k) EXPECT_NEAR(m.mu0[k], eval_F(m.potential, 0.3, 1), 1e-14);
    const StepFields out = step_state(m, s.ctrl, m.phi0, m.mu0, m.sigma0, s.grid.dt);
    for (std::size_t k = 0; k < out.phi.size(); ++k) {
        EXPECT_NEAR(out.phi[k], 0.3, 1e-12);
        EXPECT_NEAR(out.mu[k], m.mu0[k], 1e-12);
        EXPECT_NEAR(out.sigma[k], 0.6, 1e-12);
    }
}

TEST(StateStep, MassConservedWithoutSource) {
    Scenario s = small_scenario(24, 20);
    s.ctrl.P = 0.0;
    s.A = 0.0;
    const ModelConfig m = build_model(s);
    const StateTrajectory st = solve_state(m, s.ctrl);
    const double M0 = m.eps * integrate(st.mu()[0]) + integrate(st.phi()[0]);
    for (std::size_t n = 1; n < st.levels(); ++n) {
        const double M = m.eps * integrate(st.mu()[n]) + integrate(st.phi()[n]);
        EXPECT_LE(std::abs(M - M0), 1e-10 * std::abs(M0));
    }
}

TEST(StateStep, MassBalanceMatchesDiscreteSource) {
    const Scenario s = small_scenario(24, 20);
    const ModelConfig m = build_model(s);
    const StateTrajectory st = solve_state(m, s.ctrl);
    for (std::size_t n = 0; n + 1 < st.levels(); ++n) {
        ASSERT_EQ(st.substeps[n], 1);
        const double dt = st.times[n + 1] - st.times[n];
        const double before = m.eps * integrate(st.mu()[n]) + integrate(st.phi()[n]);
        const double after = m.eps * integrate(st.mu()[n + 1]) + integrate(st.phi()[n + 1]);
        Field src(m.grid);
        const Field fn = eval_f(m.f, st.phi()[n], 0);
        for (std::size_t k = 0; k < src.size(); ++k) src[k] = (s.ctrl.P * st.sigma()[n + 1][k] - m.A) * fn[k];
        const double expected = dt * integrate(src);
        EXPECT_LE(std::abs(after - before - expected), 1e-10 * std::abs(after)) << "step " << n;
        EXPECT_LE(st.diagnostics[n].mass_rel_residual, 1e-10);
    }
}

TEST(StateSolve, NutrientRelaxesLikeScalarOde) {
    // sigma' = B (s_bar - sigma) pointwise; backward Euler error is first order.
    double prev = 0.0;
    for (int nt : {20, 40, 80}) {
        Scenario s = small_scenario(12, nt);
        s.B = 2.0;
        s.ctrl.C = 0.0;
        s.ctrl.eta = 0.0;
        s.sigma_S = FieldRecipe{"constant", 0.9};
        s.sigma0 = FieldRecipe{"constant", 0.2};
        const ModelConfig m = build_model(s);
        const StateTrajectory st = solve_state(m, s.ctrl);
        double err = 0.0;
        for (std::size_t n = 0; n < st.levels(); ++n) {
            const double exact = 0.9 + (0.2 - 0.9) * std::exp(-2.0 * st.times[n]);
            for (double v : st.sigma()[n].values()) err = std::max(err, std::abs(v - exact));
        }
        EXPECT_LT(err, 0.1 * s.grid.dt * 10);
        if (prev > 0) EXPECT_NEAR(prev / err, 2.0, 0.15);
        prev = err;
    }
}

TEST(StateSolve, NutrientStaysInUnitBoxWithoutActiveTransport) {
    Scenario s = reference_scenario();
    s.ctrl.eta = 0.0;
    s.ctrl.chi = 1.5;
    s.ctrl.C = 4.0;
    const StateTrajectory st = solve_state(build_model(s), s.ctrl);
    EXPECT_GE(st.min_sigma(), -1e-8);
    EXPECT_LE(st.max_sigma(), 1.0 + 1e-8);
}

TEST(StateSolve, LogarithmicPotentialStaysSeparated) {
    const Scenario s = reference_log_scenario();
    const StateTrajectory st = solve_state(build_model(s), s.ctrl);
    EXPECT_LE(st.max_phi_inf(), 1.0 - 1e-4);
    EXPECT_GT(st.max_phi_inf(), 0.5);
}

TEST(StateSolve, FirstOrderInTime) {
    std::vector<Field> finals;
    for (int nt : {25, 50, 100}) {
        const Scenario s = small_scenario(20, nt);
        finals.push_back(solve_state(build_model(s), s.ctrl).phi().back());
    }
    const double e1 = l2(finals[0] - finals[1]), e2 = l2(finals[1] - finals[2]);
    EXPECT_GE(std::log2(e1 / e2), 0.9);
}

TEST(StateSolve, SecondOrderInSpaceOnSmoothData) {
    std::vector<Field> finals;
    std::vector<Grid2D> grids;
    for (int n : {16, 32, 64}) {
        Scenario s = small_scenario(n, 10);
        s.phi0 = FieldRecipe{"cosine", 0.1, 1, -1, 0.5, 0.5, 0.25, 0.05, 0.4, 1, 1};
        s.sigma0 = FieldRecipe{"cosine", 0.6, 1, -1, 0.5, 0.5, 0.25, 0.05, 0.2, 2, 1};
        grids.push_back(s.grid);
        finals.push_back(solve_state(build_model(s), s.ctrl).phi().back());
    }
    const Field f32 = restrict2(finals[2], grids[1]);
    const Field f16 = restrict2(finals[1], grids[0]);
    const double e1 = l2(finals[0] - f16), e2 = l2(finals[1] - f32);
    EXPECT_GE(std::log2(e1 / e2), 1.8);
}

TEST(StateSolve, LipschitzInControls) {
    std::vector<double> K;
    for (int n : {24, 48}) {
        const Scenario s = small_scenario(n, 40);
        const ModelConfig m = build_model(s);
        ControlVector u2 = s.ctrl;
        u2.P += 6e-4;
        u2.chi -= 5e-4;
        u2.C += 5e-4;
        const double d = std::sqrt(6e-4 * 6e-4 + 2 * 5e-4 * 5e-4);
        K.push_back(c0h(solve_state(m, s.ctrl), solve_state(m, u2)) / d);
    }
    EXPECT_GT(K[0], 0.0);
    EXPECT_LT(K[1] / K[0], 1.5);
    EXPECT_GT(K[1] / K[0], 1.0 / 1.5);
}

TEST(StateSolve, ZeroEpsIsTheLimitOfSmallEps) {
    Scenario s = small_scenario(24, 40);
    s.ctrl.eta = 0.0;
    s.eps = 1e-6;
    const StateTrajectory a = solve_state(build_model(s), s.ctrl);
    s.eps = 0.0;
    const StateTrajectory b = solve_state(build_model(s), s.ctrl);
    EXPECT_LT(c0h(a, b), 1e-4);
}

TEST(StateSolve, ZeroEpsWithActiveTransportIsRejected) {
    Scenario s = small_scenario(12, 4);
    s.eps = 0.0;
    s.ctrl.eta = 0.1;
    EXPECT_THROW(solve_state(build_model(s), s.ctrl), RegimeViolation);
}

TEST(StateSolve, Deterministic) {
    const Scenario s = small_scenario(20, 20);
    const ModelConfig m = build_model(s);
    const StateTrajectory a = solve_state(m, s.ctrl), b = solve_state(m, s.ctrl);
    for (std::size_t n = 0; n < a.levels(); ++n) {
        EXPECT_EQ(a.phi()[n].values(), b.phi()[n].values());
        EXPECT_EQ(a.sigma()[n].values(), b.sigma()[n].values());
    }
}

TEST(StateSolve, AllRegimesRun) {
    Scenario s = small_scenario(16, 20);
    s.ctrl.eta = 0.0;
    for (auto [eps, tau] : {std::pair{1e-3, 0.05}, std::pair{0.0, 0.05}, std::pair{1e-3, 0.0}, std::pair{0.0, 0.0}}) {
        s.eps = eps;
        s.tau = tau;
        const ModelConfig m = build_model(s);
        const StateTrajectory st = solve_state(m, s.ctrl);
        EXPECT_EQ(st.levels(), 21u);
        EXPECT_LE(st.max_mass_residual(), 1e-10);
        EXPECT_TRUE(st.phi().back().finite());
    }
}

TEST(StateSolve, MismatchedInitialDataRejected) {
    ModelConfig m = build_model(small_scenario(16, 4));
    m.phi0 = Field(Grid2D{8, 8, 1, 1, 1e-3, 1});
    EXPECT_THROW(m.check(), Error);
}
