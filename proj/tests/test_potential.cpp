#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nloch/errors.hpp"
#include "nloch/potential.hpp"

using namespace nloch;

namespace {

const PotentialSpec poly{};
const PotentialSpec logp{PotentialFamily::logarithmic, 0.2, 1.0, 1e-4};

// Derivative of order k from central differences of order k-1.
double fd(const std::function<double(double)>& g, double r, double h) { return (g(r + h) - g(r - h)) / (2 * h); }

} // namespace

TEST(Potential, PolynomialValues) {
    EXPECT_DOUBLE_EQ(eval_F(poly, 0.0, 0), 0.25);
    EXPECT_DOUBLE_EQ(eval_F(poly, 0.0, 1), 0.0);
    EXPECT_DOUBLE_EQ(eval_F(poly, 0.0, 2), -1.0);
    EXPECT_DOUBLE_EQ(eval_F(poly, 1.0, 0), 0.0);
    EXPECT_DOUBLE_EQ(eval_F(poly, 1.0, 1), 0.0);
    EXPECT_DOUBLE_EQ(eval_F(poly, 1.0, 2), 2.0);
    EXPECT_DOUBLE_EQ(eval_F(poly, 0.3, 4), 6.0);
    EXPECT_TRUE(std::isinf(poly.ell()));
}

TEST(Potential, LogarithmicAtOrigin) {
    EXPECT_DOUBLE_EQ(eval_F(logp, 0.0, 1), 0.0);
    EXPECT_NEAR(eval_F(logp, 0.0, 2), 0.2 - 1.0, 1e-15);
    EXPECT_NEAR(fd([](double r) { return eval_F(logp, r, 1); }, 0.0, 1e-5), -0.8, 1e-8);
    EXPECT_EQ(logp.ell(), 1.0);
}

TEST(Potential, LogarithmicIsEvenWithLocalMaximumAtZero) {
    for (double r : {0.05, 0.3, 0.7, 0.99}) EXPECT_NEAR(eval_F(logp, r, 0), eval_F(logp, -r, 0), 1e-15);
    EXPECT_GT(eval_F(logp, 0.0, 0), eval_F(logp, 0.1, 0));
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(11);
    for (const auto& spec : {poly, logp, PotentialSpec{PotentialFamily::logarithmic, 0.5, 1.0, 1e-4}}) {
        const double lim = spec.family == PotentialFamily::polynomial ? 1.5 : 0.9;
        std::uniform_real_distribution<double> U(-lim, lim);
        for (int n = 0; n < 1000; ++n) {
            const double r = U(rng);
            for (int k = 1; k <= 4; ++k) {
                const double d = eval_F(spec, r, k);
                const double f = fd([&](double x) { return eval_F(spec, x, k - 1); }, r, 1e-5);
                ASSERT_LE(std::abs(d - f), 1e-6 * std::max(1.0, std::abs(d))) << "order " << k << " at " << r;
            }
        }
    }
}

TEST(Potential, PolynomialGrowthConstants) {
    const GrowthConstants gc;
    for (int k = -5000; k <= 5000; ++k) {
        const double r = k * 1e-3;
        EXPECT_GE(eval_F(poly, r, 0), gc.cF * std::pow(r, 4) - gc.CF - 1e-15);
    }
}

TEST(Potential, MinimumOfSecondDerivative) {
    EXPECT_NEAR(min_F2(poly), -1.0, 1e-12);
    EXPECT_NEAR(default_stabilization(poly), 1.0, 1e-12);
    EXPECT_NEAR(min_F2(logp), -0.8, 1e-12);
}

TEST(Potential, LogarithmicOutsideClippedDomainThrows) {
    EXPECT_THROW(eval_F(logp, 0.99995, 1), DomainViolation);
    EXPECT_THROW(eval_F(logp, -1.2, 0), DomainViolation);
    EXPECT_NO_THROW(eval_F(logp, 0.9998, 1));
}

TEST(Potential, ExcludedFamiliesRejected) {
    try {
        parse_potential_family("double_obstacle");
        FAIL();
    } catch (const ConfigInvalid& e) {
        EXPECT_NE(std::string(e.what()).find("A4"), std::string::npos);
    }
    EXPECT_THROW((PotentialSpec{PotentialFamily::logarithmic, 1.0, 1.0, 1e-4}.validate()), ConfigInvalid);
    EXPECT_THROW((PotentialSpec{PotentialFamily::logarithmic, 0.5, 1.0, 0.0}.validate()), ConfigInvalid);
}

TEST(Proliferation, SmoothstepSaturates) {
    const ProliferationSpec f{ProliferationFamily::smoothstep, 2.5, 1.0, 0.5};
    for (double r : {-3.0, -1.0}) {
        EXPECT_EQ(eval_f(f, r, 0), 0.0);
        EXPECT_EQ(eval_f(f, r, 1), 0.0);
        EXPECT_EQ(eval_f(f, r, 2), 0.0);
    }
    for (double r : {1.0, 4.0}) {
        EXPECT_DOUBLE_EQ(eval_f(f, r, 0), 2.5);
        EXPECT_EQ(eval_f(f, r, 1), 0.0);
    }
    EXPECT_DOUBLE_EQ(eval_f(f, 0.0, 0), 1.25);
}

TEST(Proliferation, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.95, 0.95);
    for (const auto& f : {ProliferationSpec{ProliferationFamily::smoothstep, 1.0, 1.0, 0.5},
                          ProliferationSpec{ProliferationFamily::gaussian_bump, 1.5, 0.2, 0.4}}) {
        for (int n = 0; n < 1000; ++n) {
            const double r = U(rng);
            const double d1 = eval_f(f, r, 1), d2 = eval_f(f, r, 2);
            const double f1 = fd([&](double x) { return eval_f(f, x, 0); }, r, 1e-5);
            const double f2 = fd([&](double x) { return eval_f(f, x, 1); }, r, 1e-5);
            ASSERT_LE(std::abs(d1 - f1), 1e-8 * std::max(1.0, std::abs(d1)));
            ASSERT_LE(std::abs(d2 - f2), 1e-6 * std::max(1.0, std::abs(d2)));
            ASSERT_GE(eval_f(f, r, 0), 0.0);
        }
    }
}
