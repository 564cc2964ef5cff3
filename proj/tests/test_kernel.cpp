#include <gtest/gtest.h>

#include <cmath>

#include "nloch/errors.hpp"
#include "nloch/kernel.hpp"
#include "support.hpp"

using namespace nloch;
using nloch::test::random_field;

namespace {

Grid2D grid(int nx, int ny, double lx = 1.0, double ly = 1.0) { return Grid2D{nx, ny, lx, ly, 1e-3, 1}; }

// Independent O(n^4) quadrature straight from the pointwise kernel (no offset table).
Field direct_sum(const KernelSpec& spec, const Field& u) {
    const Grid2D& g = u.grid();
    Field out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s = 0.0;
            for (int q = 0; q < g.ny; ++q)
                for (int p = 0; p < g.nx; ++p)
                    s += kernel_value(spec, g.x(i) - g.x(p), g.y(j) - g.y(q), g.lx, g.ly) * u.at(p, q);
            out.at(i, j) = s * g.cell_area();
        }
    return out;
}

} // namespace

TEST(Kernel, ConstantFamilyGivesUniformA) {
    const KernelSpec spec{KernelFamily::constant, 0.7, 0.1, 0.0};
    const auto op = build_kernel(spec, grid(12, 9, 2.0, 1.5));
    for (double v : op->a().values()) EXPECT_NEAR(v, 0.7 * 3.0, 1e-13);
    EXPECT_NEAR(op->a_star(), op->a_sup(), 1e-13);
    EXPECT_NEAR(op->a_star(), 2.1, 1e-13);
    EXPECT_EQ(op->b_sup(), 0.0);
}

TEST(Kernel, GaussianWindowConstantsMatchDirectQuadrature) {
    const KernelSpec spec{KernelFamily::gaussian, 1.0, 0.08, 0.0};
    const Grid2D g = grid(16, 16);
    const auto op = build_kernel(spec, g);
    const Field a = direct_sum(spec, Field(g, 1.0));
    double amin = 1e300, amax = 0.0, bmax = 0.0;
    int imin = -1, jmin = -1;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (a.at(i, j) < amin) {
                amin = a.at(i, j);
                imin = i;
                jmin = j;
            }
            amax = std::max(amax, a.at(i, j));
            double b = 0.0;
            for (int q = 0; q < g.ny; ++q)
                for (int p = 0; p < g.nx; ++p)
                    b += kernel_grad_norm(spec, g.x(i) - g.x(p), g.y(j) - g.y(q), g.lx, g.ly);
            bmax = std::max(bmax, b * g.cell_area());
        }
    EXPECT_LT(nloch::test::max_abs_diff(op->a(), a), 1e-12);
    EXPECT_NEAR(op->a_star(), amin, 1e-12);
    EXPECT_NEAR(op->a_sup(), amax, 1e-12);
    EXPECT_NEAR(op->b_sup(), bmax, 1e-11);
    // Narrow kernel: interior cells see almost the whole mass, corners about a quarter of it.
    EXPECT_TRUE((imin == 0 || imin == g.nx - 1) && (jmin == 0 || jmin == g.ny - 1));
    EXPECT_NEAR(a.at(g.nx / 2, g.ny / 2), 1.0, 0.05);
    EXPECT_GT(amin, 0.25);
    EXPECT_LT(amin, 0.5);
}

TEST(Kernel, TableIsEven) {
    for (auto fam : {KernelFamily::gaussian, KernelFamily::truncated_newtonian, KernelFamily::constant}) {
        const auto op = build_kernel(KernelSpec{fam, 1.3, 0.2, 0.0}, grid(11, 7, 1.0, 0.6));
        for (int dj = -6; dj <= 6; ++dj)
            for (int di = -10; di <= 10; ++di) EXPECT_EQ(op->table(di, dj), op->table(-di, -dj));
    }
}

TEST(Kernel, ConvolvingOnesGivesA) {
    const auto op = build_kernel(KernelSpec{}, grid(20, 20));
    const Field one(op->grid(), 1.0);
    const Field c = op->convolve(one);
    for (std::size_t k = 0; k < c.size(); ++k) EXPECT_EQ(c[k], op->a()[k]);
}

class KernelFamilies : public ::testing::TestWithParam<KernelFamily> {};

TEST_P(KernelFamilies, FastConvolutionEqualsDirectSum) {
    const KernelSpec spec{GetParam(), 2.0, 0.15, 0.0};
    for (auto [nx, ny] : {std::pair{16, 16}, std::pair{24, 24}, std::pair{13, 21}}) {
        const Grid2D g = grid(nx, ny, 1.0, 1.0 * ny / nx);
        const auto op = build_kernel(spec, g);
        const Field u = random_field(g, static_cast<std::uint64_t>(nx * 31 + ny));
        EXPECT_LT(nloch::test::max_abs_diff(op->convolve(u), convolve_direct(*op, u)), 1e-12);
        if (spec.family != KernelFamily::truncated_newtonian)
            EXPECT_LT(nloch::test::max_abs_diff(op->convolve(u), direct_sum(spec, u)), 1e-12);
    }
}

TEST_P(KernelFamilies, Adjointness) {
    const Grid2D g = grid(16, 16);
    const auto op = build_kernel(KernelSpec{GetParam(), 1.0, 0.2, 0.0}, g);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const Field u = random_field(g, 2 * k + 1), v = random_field(g, 2 * k + 2);
        const double a = dot(op->convolve(u), v), b = dot(u, op->convolve(v));
        EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_P(KernelFamilies, PreservesNonnegativity) {
    const Grid2D g = grid(18, 18);
    const auto op = build_kernel(KernelSpec{GetParam(), 1.0, 0.1, 0.0}, g);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Field u = random_field(g, seed, 0.0, 1.0);
        const Field c = op->convolve(u);
        for (double v : c.values()) EXPECT_GE(v, -1e-13);
    }
}

INSTANTIATE_TEST_SUITE_P(All, KernelFamilies,
                         ::testing::Values(KernelFamily::gaussian, KernelFamily::truncated_newtonian,
                                           KernelFamily::constant));

TEST(Kernel, RejectsBadSpecsAndGrids) {
    EXPECT_THROW(build_kernel(KernelSpec{KernelFamily::gaussian, 1.0, 0.0, 0.0}, grid(8, 8)), InvalidKernel);
    EXPECT_THROW(build_kernel(KernelSpec{KernelFamily::gaussian, -1.0, 0.1, 0.0}, grid(8, 8)), InvalidKernel);
    const auto op = build_kernel(KernelSpec{}, grid(8, 8));
    EXPECT_THROW(op->convolve(Field(grid(9, 8))), GridMismatch);
    EXPECT_THROW(parse_kernel_family("bessel"), ConfigInvalid);
}

TEST(Coercivity, ShiftedByMinimumOfF2) {
    // Constant kernel on the unit square: a = strength everywhere.
    const auto op = build_kernel(KernelSpec{KernelFamily::constant, 1.5, 0.1, 0.0}, grid(10, 10));
    const Coercivity c = coercivity_check(*op, PotentialSpec{});
    EXPECT_NEAR(c.C0, 0.5, 1e-12);
    EXPECT_TRUE(c.ok);
    EXPECT_EQ(c.tau0, 1.0);

    const auto zero = build_kernel(KernelSpec{KernelFamily::constant, 0.0, 0.1, 0.0}, grid(10, 10));
    const Coercivity z = coercivity_check(*zero, PotentialSpec{});
    EXPECT_NEAR(z.C0, -1.0, 1e-12);
    EXPECT_FALSE(z.ok);
    EXPECT_EQ(z.tau0, 1.0);
}

TEST(Coercivity, Eps0FromWindowConstants) {
    const auto op = build_kernel(KernelSpec{KernelFamily::gaussian, 8.0, 0.5, 0.0}, grid(24, 24));
    const Coercivity c = coercivity_check(*op, PotentialSpec{});
    const double as = op->a_sup(), bs = op->b_sup(), ca = std::max(as - op->a_star(), 1.0);
    const double C0 = op->a_star() - 1.0;
    const double expect = std::min({1.0 / (4 * ca), 1.0 / std::max(1.0, as - std::min(as, C0)),
                                    2 * C0 / (3 * (as + bs) * (as + bs))});
    EXPECT_NEAR(c.C0, C0, 1e-12);
    EXPECT_NEAR(c.eps0, expect, 1e-15);
}
