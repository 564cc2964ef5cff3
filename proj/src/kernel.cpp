#include "nloch/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nloch/errors.hpp"
#include "nloch/linalg.hpp"

namespace nloch {

namespace {

constexpr int kCellSamples = 64;

double newton_radius(const KernelSpec& s, double lx, double ly) {
    return s.cutoff > 0.0 ? s.cutoff : std::hypot(lx, ly);
}

// Average of a pointwise function over the central cell; even sample count avoids the origin.
template <class Fn>
double central_cell_average(double hx, double hy, Fn fn) {
    double s = 0.0;
    for (int b = 0; b < kCellSamples; ++b)
        for (int a = 0; a < kCellSamples; ++a) {
            const double x = ((a + 0.5) / kCellSamples - 0.5) * hx;
            const double y = ((b + 0.5) / kCellSamples - 0.5) * hy;
            s += fn(x, y);
        }
    return s / (kCellSamples * kCellSamples);
}

// Window sums of an offset table over all grid cells via a summed-area table; returns the max.
double max_window_sum(const std::vector<double>& t, int nx, int ny) {
    const int wx = 2 * nx - 1, wy = 2 * ny - 1;
    std::vector<double> sat(static_cast<std::size_t>(wx + 1) * (wy + 1), 0.0);
    auto S = [&](int i, int j) -> double& { return sat[static_cast<std::size_t>(j) * (wx + 1) + i]; };
    for (int j = 0; j < wy; ++j)
        for (int i = 0; i < wx; ++i)
            S(i + 1, j + 1) = t[static_cast<std::size_t>(j) * wx + i] + S(i, j + 1) + S(i + 1, j) - S(i, j);
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double w = S(i + nx, j + ny) - S(i, j + ny) - S(i + nx, j) + S(i, j);
            m = std::max(m, w);
        }
    return m;
}

double min_window_sum(const std::vector<double>& t, int nx, int ny) {
    std::vector<double> neg(t.size());
    std::transform(t.begin(), t.end(), neg.begin(), [](double v) { return -v; });
    return -max_window_sum(neg, nx, ny);
}

} // namespace

void KernelSpec::validate() const {
    if (!(strength >= 0.0) || !std::isfinite(strength)) throw InvalidKernel("kernel strength must be >= 0");
    if (family == KernelFamily::gaussian && !(width > 0.0)) throw InvalidKernel("gaussian kernel needs width > 0");
    if (cutoff < 0.0) throw InvalidKernel("kernel cutoff must be >= 0");
}

std::string to_string(KernelFamily f) {
    switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::truncated_newtonian: return "truncated_newtonian";
    default: return "constant";
    }
}

KernelFamily parse_kernel_family(const std::string& s) {
    if (s == "gaussian") return KernelFamily::gaussian;
    if (s == "truncated_newtonian") return KernelFamily::truncated_newtonian;
    if (s == "constant") return KernelFamily::constant;
    throw ConfigInvalid("unknown kernel.family '" + s + "'");
}

double kernel_value(const KernelSpec& s, double x, double y, double lx, double ly) {
    const double r2 = x * x + y * y;
    switch (s.family) {
    case KernelFamily::gaussian: {
        if (s.cutoff > 0.0 && r2 > s.cutoff * s.cutoff) return 0.0;
        const double w2 = s.width * s.width;
        return s.strength / (2.0 * std::numbers::pi * w2) * std::exp(-0.5 * r2 / w2);
    }
    case KernelFamily::truncated_newtonian: {
        const double R = newton_radius(s, lx, ly);
        const double r = std::sqrt(r2);
        return r >= R ? 0.0 : s.strength / (2.0 * std::numbers::pi) * std::log(R / r);
    }
    default: return s.strength;
    }
}

double kernel_grad_norm(const KernelSpec& s, double x, double y, double lx, double ly) {
    const double r2 = x * x + y * y;
    switch (s.family) {
    case KernelFamily::gaussian: {
        if (s.cutoff > 0.0 && r2 > s.cutoff * s.cutoff) return 0.0;
        return kernel_value(s, x, y, lx, ly) * std::sqrt(r2) / (s.width * s.width);
    }
    case KernelFamily::truncated_newtonian: {
        const double r = std::sqrt(r2);
        return r >= newton_radius(s, lx, ly) ? 0.0 : s.strength / (2.0 * std::numbers::pi * r);
    }
    default: return 0.0;
    }
}

KernelOp::KernelOp(const KernelSpec& spec, const Grid2D& grid) : spec_(spec), grid_(grid) {
    spec_.validate();
    grid_.validate();
    const int nx = grid_.nx, ny = grid_.ny;
    const int wx = 2 * nx - 1, wy = 2 * ny - 1;
    const double hx = grid_.hx(), hy = grid_.hy(), area = grid_.cell_area();
    table_.assign(static_cast<std::size_t>(wx) * wy, 0.0);
    grad_table_.assign(table_.size(), 0.0);

    // Fill one quadrant and mirror so that evenness holds bit for bit.
    for (int dj = 0; dj < ny; ++dj)
        for (int di = 0; di < nx; ++di) {
            double v, gv;
            if (di == 0 && dj == 0 && spec_.family == KernelFamily::truncated_newtonian) {
                v = central_cell_average(hx, hy, [&](double x, double y) {
                    return kernel_value(spec_, x, y, grid_.lx, grid_.ly);
                });
                gv = central_cell_average(hx, hy, [&](double x, double y) {
                    return kernel_grad_norm(spec_, x, y, grid_.lx, grid_.ly);
                });
            } else {
                v = kernel_value(spec_, di * hx, dj * hy, grid_.lx, grid_.ly);
                gv = kernel_grad_norm(spec_, di * hx, dj * hy, grid_.lx, grid_.ly);
            }
            for (int sj : {-1, 1})
                for (int si : {-1, 1}) {
                    const std::size_t k =
                        static_cast<std::size_t>(sj * dj + ny - 1) * wx + static_cast<std::size_t>(si * di + nx - 1);
                    table_[k] = v * area;
                    grad_table_[k] = gv * area;
                }
        }

    for (std::size_t k = 0; k < table_.size(); ++k) {
        if (!std::isfinite(table_[k]) || !std::isfinite(grad_table_[k]))
            throw InvalidKernel("kernel table has non-finite samples");
        if (table_[k] < 0.0) throw InvalidKernel("kernel table has negative samples for a nonnegative family");
        if (table_[k] != table_[table_.size() - 1 - k]) throw InvalidKernel("kernel table is not even");
    }

    px_ = 2 * nx;
    py_ = 2 * ny;
    const std::size_t nreal = static_cast<std::size_t>(px_) * py_;
    const std::size_t ncplx = static_cast<std::size_t>(py_) * (px_ / 2 + 1);
    std::vector<double> pad(nreal, 0.0);
    for (int dj = -(ny - 1); dj <= ny - 1; ++dj)
        for (int di = -(nx - 1); di <= nx - 1; ++di) {
            const int ii = (di + px_) % px_, jj = (dj + py_) % py_;
            pad[static_cast<std::size_t>(jj) * px_ + ii] = table(di, dj);
        }
    kernel_hat_.assign(ncplx, {0.0, 0.0});
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        double* r = fftw_alloc_real(nreal);
        fftw_complex* c = fftw_alloc_complex(ncplx);
        fwd_ = fftw_plan_dft_r2c_2d(py_, px_, r, c, flags);
        inv_ = fftw_plan_dft_c2r_2d(py_, px_, c, r, flags);
        fftw_free(r);
        fftw_free(c);
    }
    fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), pad.data(),
                         reinterpret_cast<fftw_complex*>(kernel_hat_.data()));

    a_ = convolve(Field(grid_, 1.0));
    a_star_ = min_window_sum(table_, nx, ny);
    std::vector<double> abs_table(table_.size());
    std::transform(table_.begin(), table_.end(), abs_table.begin(), [](double v) { return std::abs(v); });
    a_sup_ = max_window_sum(abs_table, nx, ny);
    b_sup_ = max_window_sum(grad_table_, nx, ny);
}

KernelOp::~KernelOp() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

Field KernelOp::convolve(const Field& u) const {
    if (!u.grid().same_space(grid_)) throw GridMismatch("convolve: field grid differs from kernel grid");
    const int nx = grid_.nx, ny = grid_.ny;
    const std::size_t nreal = static_cast<std::size_t>(px_) * py_;
    std::vector<double> pad(nreal, 0.0);
    for (int j = 0; j < ny; ++j)
        std::copy_n(u.data() + static_cast<std::size_t>(j) * nx, nx, pad.data() + static_cast<std::size_t>(j) * px_);
    std::vector<std::complex<double>> hat(kernel_hat_.size());
    auto* hp = reinterpret_cast<fftw_complex*>(hat.data());
    fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), pad.data(), hp);
    for (std::size_t k = 0; k < hat.size(); ++k) hat[k] *= kernel_hat_[k];
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_), hp, pad.data());
    const double scale = 1.0 / static_cast<double>(nreal);
    Field out(u.grid());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) out.at(i, j) = pad[static_cast<std::size_t>(j) * px_ + i] * scale;
    return out;
}

std::shared_ptr<const KernelOp> build_kernel(const KernelSpec& spec, const Grid2D& grid) {
    return std::make_shared<const KernelOp>(spec, grid);
}

Field convolve(const KernelOp& op, const Field& u) { return op.convolve(u); }

Field convolve_direct(const KernelOp& op, const Field& u) {
    if (!u.grid().same_space(op.grid())) throw GridMismatch("convolve_direct");
    const Grid2D& g = op.grid();
    Field out(u.grid());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s = 0.0;
            for (int l = 0; l < g.ny; ++l)
                for (int k = 0; k < g.nx; ++k) s += op.table(i - k, j - l) * u.at(k, l);
            out.at(i, j) = s;
        }
    return out;
}

Coercivity coercivity_check(const KernelOp& op, const PotentialSpec& pot) {
    Coercivity c;
    c.min_F2 = min_F2(pot);
    c.C0 = op.a_star() + c.min_F2;
    c.ok = c.C0 > 0.0;
    const double as = op.a_sup(), bs = op.b_sup(), ca = op.c_a();
    const double t1 = 1.0 / (4.0 * ca);
    const double t2 = 1.0 / std::max(1.0, as - std::min(as, c.C0));
    const double t3 = c.ok ? 2.0 * c.C0 / (3.0 * (as + bs) * (as + bs)) : 0.0;
    c.eps0 = std::min({t1, t2, t3});
    c.tau0 = 1.0;
    return c;
}

} // namespace nloch
