#include "nloch/linalg.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <string>

#include "nloch/errors.hpp"

namespace nloch {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

NeumannSpectral::NeumannSpectral(const Grid2D& g) : grid_(g), ex_(g.nx), ey_(g.ny) {
    for (int k = 0; k < g.nx; ++k)
        ex_[k] = (2.0 - 2.0 * std::cos(std::numbers::pi * k / g.nx)) / (g.hx() * g.hx());
    for (int k = 0; k < g.ny; ++k)
        ey_[k] = (2.0 - 2.0 * std::cos(std::numbers::pi * k / g.ny)) / (g.hy() * g.hy());
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    double* a = fftw_alloc_real(g.cells());
    double* b = fftw_alloc_real(g.cells());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_r2r_2d(g.ny, g.nx, a, b, FFTW_REDFT10, FFTW_REDFT10, flags);
    inv_ = fftw_plan_r2r_2d(g.ny, g.nx, a, b, FFTW_REDFT01, FFTW_REDFT01, flags);
    fftw_free(a);
    fftw_free(b);
}

NeumannSpectral::~NeumannSpectral() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void NeumannSpectral::solve(double alpha, double beta, const double* rhs, double* out) const {
    const int nx = grid_.nx, ny = grid_.ny;
    std::vector<double> in(rhs, rhs + grid_.cells());
    std::vector<double> hat(grid_.cells());
    fftw_execute_r2r(static_cast<fftw_plan>(fwd_), in.data(), hat.data());
    const double norm = 1.0 / (4.0 * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = beta + alpha * (ex_[i] + ey_[j]);
            double& h = hat[static_cast<std::size_t>(j) * nx + i];
            h = d != 0.0 ? h * norm / d : 0.0;
        }
    fftw_execute_r2r(static_cast<fftw_plan>(inv_), hat.data(), out);
}

Field NeumannSpectral::solve(double alpha, double beta, const Field& rhs) const {
    if (!rhs.grid().same_space(grid_)) throw GridMismatch("NeumannSpectral::solve");
    Field out(rhs.grid());
    solve(alpha, beta, rhs.data(), out.data());
    return out;
}

CgResult pcg(const LinearMap& apply, const LinearMap& precond, const Field& b, Field& x, double tol,
             int max_iter) {
    CgResult res;
    x = Field(b.grid());
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) return res;
    Field r = b;
    Field z(b.grid());
    precond(r, z);
    Field p = z;
    Field q(b.grid());
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, q);
        const double alpha = rz / dot(p, q);
        x.axpy(alpha, p);
        r.axpy(-alpha, q);
        const double rn = std::sqrt(dot(r, r)) / bnorm;
        res.iterations = it;
        res.rel_residual = rn;
        if (rn <= tol) return res;
        precond(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = z[k] + beta * p[k];
    }
    throw NonConvergence("pcg: no convergence after " + std::to_string(max_iter) +
                         " iterations, relative residual " + std::to_string(res.rel_residual));
}

int iteration_cap(const Grid2D& g) { return 10 * (g.nx + g.ny); }

Field solve_helmholtz(double alpha, double beta, const Field& rhs, HelmholtzMethod method, double tol) {
    if (!(beta > 0.0) || alpha < 0.0) throw Error("solve_helmholtz: need beta > 0 and alpha >= 0");
    if (alpha == 0.0) return (1.0 / beta) * rhs;
    if (method == HelmholtzMethod::spectral) {
        NeumannSpectral spec(rhs.grid());
        return spec.solve(alpha, beta, rhs);
    }
    const LinearMap apply = [&](const Field& u, Field& out) {
        out = laplacian_neumann(u);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = beta * u[k] - alpha * out[k];
    };
    const LinearMap ident = [](const Field& u, Field& out) { out = u; };
    Field x;
    pcg(apply, ident, rhs, x, tol, iteration_cap(rhs.grid()));
    return x;
}

ShiftedLaplacianSolver::ShiftedLaplacianSolver(std::shared_ptr<const NeumannSpectral> spec, Field coeff,
                                               double tol)
    : spec_(std::move(spec)), c_(std::move(coeff)), tol_(tol) {
    double s = 0.0;
    for (double v : c_.values()) {
        if (!(v > 0.0) || !std::isfinite(v)) throw StepRejected("shifted Laplacian: nonpositive coefficient");
        s += v;
    }
    cbar_ = s / static_cast<double>(c_.size());
}

void ShiftedLaplacianSolver::apply(const Field& u, Field& out) const {
    out = laplacian_neumann(u);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = c_[k] * u[k] - out[k];
}

Field ShiftedLaplacianSolver::solve(const Field& b, CgResult* info) const {
    const LinearMap apply = [this](const Field& u, Field& out) { this->apply(u, out); };
    const LinearMap precond = [this](const Field& r, Field& z) {
        if (z.size() != r.size()) z = Field(r.grid());
        spec_->solve(1.0, cbar_, r.data(), z.data());
    };
    Field x;
    const CgResult res = pcg(apply, precond, b, x, tol_, iteration_cap(b.grid()));
    if (info) *info = res;
    return x;
}

} // namespace nloch
