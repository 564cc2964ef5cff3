#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "nloch/field.hpp"

namespace nloch {

// Serializes FFTW planner calls; FFTW plan creation is not reentrant.
std::mutex& fftw_planner_mutex();

// Diagonalizes the mirror-Neumann 5-point Laplacian with DCT-II/DCT-III pairs.
class NeumannSpectral {
public:
    explicit NeumannSpectral(const Grid2D& g);
    ~NeumannSpectral();
    NeumannSpectral(const NeumannSpectral&) = delete;
    NeumannSpectral& operator=(const NeumannSpectral&) = delete;

    const Grid2D& grid() const { return grid_; }

    // out = (beta I - alpha Lap)^{-1} rhs. Requires beta > 0 or a zero-mean rhs with alpha > 0.
    void solve(double alpha, double beta, const double* rhs, double* out) const;
    Field solve(double alpha, double beta, const Field& rhs) const;

    // Eigenvalue of -Lap for mode (kx, ky).
    double neg_lap_eigenvalue(int kx, int ky) const { return ex_[kx] + ey_[ky]; }

private:
    Grid2D grid_;
    std::vector<double> ex_, ey_;
    void* fwd_ = nullptr;
    void* inv_ = nullptr;
};

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
};

using LinearMap = std::function<void(const Field&, Field&)>;

// Preconditioned conjugate gradients from x = 0. Throws NonConvergence at max_iter.
CgResult pcg(const LinearMap& apply, const LinearMap& precond, const Field& b, Field& x, double tol,
             int max_iter);

enum class HelmholtzMethod { spectral, cg };

// Solves (beta I - alpha Lap) u = rhs with homogeneous Neumann conditions.
Field solve_helmholtz(double alpha, double beta, const Field& rhs,
                      HelmholtzMethod method = HelmholtzMethod::spectral, double tol = 1e-12);

// Default iteration cap of the iterative solvers.
int iteration_cap(const Grid2D& g);

// Solver for (diag(c) - Lap) u = b with c > 0 pointwise, preconditioned by the
// constant-coefficient spectral inverse at mean(c).
class ShiftedLaplacianSolver {
public:
    ShiftedLaplacianSolver(std::shared_ptr<const NeumannSpectral> spec, Field coeff, double tol);
    Field solve(const Field& b, CgResult* info = nullptr) const;
    void apply(const Field& u, Field& out) const;

private:
    std::shared_ptr<const NeumannSpectral> spec_;
    Field c_;
    double cbar_;
    double tol_;
};

} // namespace nloch
