#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nloch/errors.hpp"
#include "nloch/relaxation.hpp"
#include "nloch/setup.hpp"

using namespace nloch;

namespace {

Scenario sweep_scenario() {
    Scenario s = relaxation_scenario();
    s.grid.nx = s.grid.ny = 20;
    s.grid.nt = 40;
    s.grid.dt = 0.2 / 40;
    return s;
}

SweepPlan plan_for(SweepFamily f, int rungs = 6) {
    const Scenario s = sweep_scenario();
    const ModelConfig base = build_model(s);
    return make_plan(f, base, s.ctrl, s.bounds, default_sweep_cost(f, base, s.ctrl), rungs);
}

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Ladder, Geometric) {
    const auto l = geometric_ladder(0.8, 4, 0.5);
    ASSERT_EQ(l.size(), 4u);
    EXPECT_DOUBLE_EQ(l[0], 0.8);
    EXPECT_DOUBLE_EQ(l[3], 0.1);
}

TEST(Ladder, PlanStartsAtHalfTheThreshold) {
    const Scenario s = sweep_scenario();
    const ModelConfig base = build_model(s);
    const Coercivity co = coercivity_check(*base.kop, base.potential);
    for (SweepFamily f : {SweepFamily::eps_to_zero, SweepFamily::tau_to_zero, SweepFamily::joint}) {
        const SweepPlan p = plan_for(f);
        ASSERT_EQ(p.rungs.size(), 6u);
        const double start = 0.5 * std::min(co.eps0, co.tau0);
        if (f != SweepFamily::tau_to_zero) {
            EXPECT_DOUBLE_EQ(p.rungs[0].eps, start);
            EXPECT_DOUBLE_EQ(p.rungs[5].eps, start / 32);
        }
        if (f == SweepFamily::eps_to_zero) EXPECT_EQ(p.rungs[3].tau, base.tau);
        if (f == SweepFamily::tau_to_zero) {
            EXPECT_DOUBLE_EQ(p.rungs[0].tau, start);
            EXPECT_EQ(p.rungs[3].eps, base.eps);
        }
        if (f == SweepFamily::joint) EXPECT_EQ(p.rungs[2].eps, p.rungs[2].tau);
        EXPECT_NO_THROW(p.validate());
    }
}

TEST(Ladder, ValidationErrors) {
    SweepPlan p = plan_for(SweepFamily::eps_to_zero);
    p.ctrl.eta = 0.1;
    EXPECT_THROW(p.validate(), RegimeViolation);

    p = plan_for(SweepFamily::joint);
    p.rungs[1].eps = 3.0 * p.rungs[1].tau;
    EXPECT_THROW(p.validate(), ConfigInvalid);

    p = plan_for(SweepFamily::tau_to_zero);
    p.cost.beta_Omega = 1.0;
    EXPECT_THROW(p.validate(), RegimeViolation);

    p = plan_for(SweepFamily::eps_to_zero);
    std::swap(p.rungs[0], p.rungs[1]);
    EXPECT_THROW(p.validate(), ConfigInvalid);
    p.rungs.clear();
    EXPECT_THROW(p.validate(), ConfigInvalid);
}

TEST(Ladder, ParsesFamilies) {
    EXPECT_EQ(parse_sweep_family("eps0"), SweepFamily::eps_to_zero);
    EXPECT_EQ(parse_sweep_family("tau"), SweepFamily::tau_to_zero);
    EXPECT_EQ(parse_sweep_family("joint"), SweepFamily::joint);
    EXPECT_ANY_THROW(parse_sweep_family("full"));
    EXPECT_EQ(limit_regime(SweepFamily::joint), Regime::joint_zero);
}

class FamilySweep : public ::testing::TestWithParam<SweepFamily> {};

TEST_P(FamilySweep, StateAndAdjointTablesPass) {
    const SweepPlan p = plan_for(GetParam());
    const ConvergenceTable st = sweep_states(p);
    const ConvergenceTable ad = sweep_adjoints(p);
    for (const auto& c : st.check()) EXPECT_TRUE(c.pass) << "state " << c.column << ": " << c.detail;
    for (const auto& c : ad.check()) EXPECT_TRUE(c.pass) << "adjoint " << c.column << ": " << c.detail;
    if (GetParam() == SweepFamily::tau_to_zero) EXPECT_NE(ad.column("tau_q_L2H"), nullptr);
    if (GetParam() == SweepFamily::joint) EXPECT_NE(ad.column("tau_q_LinfV"), nullptr);
    for (const auto& t : {st, ad})
        for (const auto& col : t.columns) EXPECT_EQ(col.values.size(), 6u);
}

TEST_P(FamilySweep, AdaptedIdentifyApproachesTheAnchor) {
    const SweepPlan p = plan_for(GetParam());
    const ConvergenceTable t = sweep_adapted_identify(p);
    const TableColumn* d = t.column("ctrl_dist");
    ASSERT_NE(d, nullptr);
    for (const auto& c : t.check()) EXPECT_TRUE(c.pass) << c.column << ": " << c.detail;
    EXPECT_LE(d->values.back(), 0.05 * p.bounds.diameter());
}

INSTANTIATE_TEST_SUITE_P(Families, FamilySweep,
                         ::testing::Values(SweepFamily::eps_to_zero, SweepFamily::tau_to_zero, SweepFamily::joint));

TEST(Sweep, LimitRungHasNoGap) {
    SweepPlan p = plan_for(SweepFamily::eps_to_zero);
    p.rungs = {Rung{0.0, p.cfg.tau}};
    p.floor = false;
    const ConvergenceTable st = sweep_states(p);
    for (const auto& col : st.columns)
        if (col.kind != TableColumn::Kind::info) EXPECT_LE(col.values[0], 1e-12) << col.name;
    const ConvergenceTable id = sweep_adapted_identify(p);
    EXPECT_LE(id.column("ctrl_dist")->values[0], 1e-6);
}

TEST(Sweep, ZeroTrackingGivesZeroAdjoints) {
    SweepPlan p = plan_for(SweepFamily::eps_to_zero);
    p.cost.beta_Omega = p.cost.beta_Q = 0.0;
    p.floor = false;
    const ConvergenceTable ad = sweep_adjoints(p);
    for (const auto& col : ad.columns)
        for (double v : col.values) EXPECT_EQ(v, 0.0) << col.name;
}

TEST(Sweep, TablesAreDeterministic) {
    const auto dir = std::filesystem::temp_directory_path() / "nloch_sweep_det";
    std::filesystem::create_directories(dir);
    SweepPlan p = plan_for(SweepFamily::joint, 3);
    sweep_states(p).write_csv((dir / "a.csv").string());
    p.threads = 2;
    sweep_states(p).write_csv((dir / "b.csv").string());
    EXPECT_EQ(slurp((dir / "a.csv").string()), slurp((dir / "b.csv").string()));
    EXPECT_FALSE(slurp((dir / "a.csv").string()).empty());
    std::filesystem::remove_all(dir);
}
