#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nloch/errors.hpp"
#include "nloch/field.hpp"
#include "nloch/linalg.hpp"
#include "support.hpp"

using namespace nloch;
using nloch::test::random_field;

namespace {

Grid2D square(int n, double l = 1.0) { return Grid2D{n, n, l, l, 1e-3, 10}; }

// Neumaier-compensated sum of the cell values.
double compensated_sum(const Field& u) {
    double s = 0.0, c = 0.0;
    for (double v : u.values()) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

double laplacian_cos_error(int n, double lx) {
    const Grid2D g{n, n, lx, 1.0, 1e-3, 1};
    const double k2 = std::pow(std::numbers::pi / lx, 2);
    const Field u = Field::from_function(g, [&](double x, double) { return std::cos(std::numbers::pi * x / lx); });
    const Field L = laplacian_neumann(u);
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        err = std::max(err, std::abs(L[k] + k2 * u[k]));
        ref = std::max(ref, std::abs(k2 * u[k]));
    }
    return err / ref;
}

} // namespace

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW((Grid2D{0, 4, 1, 1, 1e-3, 1}.validate()), ConfigInvalid);
    EXPECT_THROW((Grid2D{4, 4, -1, 1, 1e-3, 1}.validate()), ConfigInvalid);
    EXPECT_THROW((Grid2D{4, 4, 1, 1, 0.0, 1}.validate()), ConfigInvalid);
    EXPECT_NO_THROW((Grid2D{4, 4, 1, 1, 1e-3, 1}.validate()));
}

TEST(Grid, MismatchedFieldsThrow) {
    Field a(square(8)), b(square(9));
    EXPECT_THROW(a += b, GridMismatch);
    EXPECT_THROW(dot(a, b), GridMismatch);
}

TEST(Laplacian, ConstantIsHarmonic) {
    const Field u(square(17), 3.25);
    const Field L = laplacian_neumann(u);
    for (double v : L.values()) EXPECT_EQ(v, 0.0);
}

TEST(Laplacian, CosineModeSecondOrder) {
    // Fit C from the 64 grid and check the 128 grid against it.
    const double lx = 2.0;
    const double e64 = laplacian_cos_error(64, lx), e128 = laplacian_cos_error(128, lx);
    const double h64 = lx / 64, h128 = lx / 128;
    const double C = e64 / (h64 * h64);
    EXPECT_LT(e64, 1e-3);
    EXPECT_LE(e128, 1.05 * C * h128 * h128);
    EXPECT_NEAR(std::log2(e64 / e128), 2.0, 0.05);
}

TEST(Laplacian, FluxCancellation) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Field u = random_field(square(31), seed);
        const Field L = laplacian_neumann(u);
        double s = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < L.size(); ++k) {
            s += L[k];
            scale = std::max(scale, std::abs(L[k]));
        }
        EXPECT_LE(std::abs(s), 1e-13 * scale * L.size());
    }
}

TEST(Laplacian, GreenIdentity) {
    const Grid2D g{20, 13, 1.3, 0.7, 1e-3, 1};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Field u = random_field(g, seed), v = random_field(g, seed + 100);
        const double a = dot(laplacian_neumann(u), v), b = dot(u, laplacian_neumann(v));
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST(Integrate, Constants) {
    EXPECT_DOUBLE_EQ(integrate(Field(square(16), 1.0)), 1.0);
    EXPECT_EQ(integrate(Field(square(16), 0.0)), 0.0);
    EXPECT_NEAR(integrate(Field(Grid2D{10, 20, 2.0, 3.0, 1e-3, 1}, 1.0)), 6.0, 1e-14);
}

TEST(Integrate, MatchesCompensatedSum) {
    const Grid2D g{37, 29, 1.7, 0.9, 1e-3, 1};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Field u = random_field(g, seed, -3.0, 5.0);
        const double ref = compensated_sum(u) * g.cell_area();
        EXPECT_NEAR(integrate(u), ref, 1e-12 * std::abs(ref));
    }
}

TEST(Norms, ZeroAndOne) {
    const auto z = norms(Field(square(12)));
    EXPECT_EQ(z.L2_Omega, 0.0);
    EXPECT_EQ(z.Linf_Omega, 0.0);
    EXPECT_EQ(z.H1_semi, 0.0);
    EXPECT_EQ(z.V, 0.0);
    EXPECT_EQ(z.Vstar, 0.0);
    const auto o = norms(Field(square(12), 1.0));
    EXPECT_NEAR(o.L2_Omega, 1.0, 1e-14);
    EXPECT_NEAR(o.Linf_Omega, 1.0, 0.0);
    EXPECT_NEAR(o.Vstar, 1.0, 1e-12);  // constants are fixed by (I - Lap)^{-1}
}

TEST(Norms, CosineModeClosedForm) {
    // u = cos(pi x) cos(pi y): |u|_L2 = 1/2, |grad u|_L2 = pi/sqrt(2), |u|_V* = (1/2)/sqrt(1 + 2 pi^2).
    // On the grid u is an eigenvector of -Lap with eigenvalue lam, so the discrete values are sqrt(lam)/2
    // and (1/2)/sqrt(1 + lam); both approach the continuum at second order.
    const double pi = std::numbers::pi;
    double prev_err = 0.0;
    for (int n : {32, 64}) {
        const Field u = Field::from_function(square(n), [&](double x, double y) { return std::cos(pi * x) * std::cos(pi * y); });
        const auto nm = norms(u);
        const double lam = 2 * (4.0 * n * n) * std::pow(std::sin(pi / (2.0 * n)), 2);
        EXPECT_NEAR(nm.L2_Omega, 0.5, 1e-12);
        EXPECT_NEAR(nm.H1_semi, 0.5 * std::sqrt(lam), 1e-12);
        EXPECT_NEAR(nm.Vstar, 0.5 / std::sqrt(1.0 + lam), 1e-12);
        const double err = std::abs(nm.H1_semi - pi / std::sqrt(2.0)) / (pi / std::sqrt(2.0));
        EXPECT_LT(err, 1.0 / (n * n));
        if (prev_err > 0) EXPECT_NEAR(std::log2(prev_err / err), 2.0, 0.05);
        prev_err = err;
    }
}

TEST(Norms, TrajectoryOfConstantInTime) {
    const Grid2D g = square(16);
    const Field v = random_field(g, 3);
    const double nv = norms(v).L2_Omega;
    std::vector<Field> u(11, v);
    std::vector<double> t(11);
    for (int k = 0; k <= 10; ++k) t[k] = 0.05 * k;
    const auto tn = norms(u, t);
    EXPECT_NEAR(tn.C0_0T_H, nv, 1e-14);
    EXPECT_NEAR(tn.L2_Q, nv * std::sqrt(0.5), 1e-13);
    EXPECT_NEAR(tn.H1_0T_H, tn.L2_Q, 1e-13);
    EXPECT_THROW(difference(u, std::vector<Field>(3, v)), ShapeMismatch);
}

TEST(Helmholtz, PureShift) {
    const Field r = random_field(square(20), 4);
    for (auto m : {HelmholtzMethod::spectral, HelmholtzMethod::cg}) {
        const Field u = solve_helmholtz(0.0, 2.5, r, m);
        for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(u[k], r[k] / 2.5, 1e-14);
    }
}

TEST(Helmholtz, RoundTrip) {
    const Grid2D g{33, 21, 1.0, 0.6, 1e-3, 1};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Field v = random_field(g, seed);
        for (auto [alpha, beta] : {std::pair{1.0, 1.0}, std::pair{0.05, 3.0}, std::pair{2.0, 1e-3}}) {
            Field rhs = beta * v;
            rhs.axpy(-alpha, laplacian_neumann(v));
            for (auto m : {HelmholtzMethod::spectral, HelmholtzMethod::cg}) {
                const Field u = solve_helmholtz(alpha, beta, rhs, m);
                EXPECT_LT(nloch::test::max_abs_diff(u, v), 1e-8) << alpha << " " << beta;
            }
        }
    }
}

TEST(Helmholtz, SpectralAndCgAgree) {
    const Grid2D g{40, 40, 1.0, 1.0, 1e-3, 1};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Field r = random_field(g, seed);
        const Field a = solve_helmholtz(0.3, 1.0, r, HelmholtzMethod::spectral);
        const Field b = solve_helmholtz(0.3, 1.0, r, HelmholtzMethod::cg, 1e-13);
        EXPECT_LT(nloch::test::max_abs_diff(a, b), 1e-9);
    }
}

TEST(Helmholtz, RejectsSingularProblem) {
    EXPECT_THROW(solve_helmholtz(1.0, -1.0, Field(square(8), 1.0)), Error);
}
