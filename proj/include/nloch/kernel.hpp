#pragma once

#include <algorithm>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "nloch/field.hpp"
#include "nloch/potential.hpp"

namespace nloch {

enum class KernelFamily { gaussian, truncated_newtonian, constant };

// gaussian:            J(x) = s/(2 pi w^2) exp(-|x|^2/(2 w^2)), zero beyond cutoff if cutoff > 0
// truncated_newtonian: J(x) = s/(2 pi) max(0, ln(R/|x|)), R = cutoff (domain diagonal if 0);
//                      the central cell carries the cell average of the log singularity
// constant:            J(x) = s
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double strength = 1.0;
    double width = 0.1;
    double cutoff = 0.0;

    void validate() const;
};

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(const std::string& s);

// Pointwise kernel value and gradient magnitude at offset (x, y) away from the origin.
double kernel_value(const KernelSpec& spec, double x, double y, double lx, double ly);
double kernel_grad_norm(const KernelSpec& spec, double x, double y, double lx, double ly);

class KernelOp {
public:
    KernelOp(const KernelSpec& spec, const Grid2D& grid);
    ~KernelOp();
    KernelOp(const KernelOp&) = delete;
    KernelOp& operator=(const KernelOp&) = delete;

    const KernelSpec& spec() const { return spec_; }
    const Grid2D& grid() const { return grid_; }

    // Table entry hx*hy*J(di*hx, dj*hy) for |di| < nx, |dj| < ny.
    double table(int di, int dj) const {
        return table_[static_cast<std::size_t>(dj + grid_.ny - 1) * (2 * grid_.nx - 1) + (di + grid_.nx - 1)];
    }
    const std::vector<double>& table_values() const { return table_; }
    const std::vector<double>& grad_table_values() const { return grad_table_; }

    const Field& a() const { return a_; }
    double a_star() const { return a_star_; }
    double a_sup() const { return a_sup_; }
    double b_sup() const { return b_sup_; }
    double c_a() const { return std::max(a_sup_ - a_star_, 1.0); }

    Field convolve(const Field& u) const;

private:
    KernelSpec spec_;
    Grid2D grid_;
    std::vector<double> table_;
    std::vector<double> grad_table_;
    std::vector<std::complex<double>> kernel_hat_;
    int px_ = 0, py_ = 0;
    void* fwd_ = nullptr;
    void* inv_ = nullptr;
    Field a_;
    double a_star_ = 0, a_sup_ = 0, b_sup_ = 0;
};

// Throws InvalidKernel for negative or non-even tables.
std::shared_ptr<const KernelOp> build_kernel(const KernelSpec& spec, const Grid2D& grid);

// (J*u)_i = hx*hy sum_j J(x_i - x_j) u_j over the grid; throws GridMismatch.
Field convolve(const KernelOp& op, const Field& u);

// O(n^4) reference summation, used by tests.
Field convolve_direct(const KernelOp& op, const Field& u);

struct Coercivity {
    double C0 = 0;
    double min_F2 = 0;
    double eps0 = 0;
    double tau0 = 1.0;
    bool ok = false;
};

Coercivity coercivity_check(const KernelOp& op, const PotentialSpec& pot);

} // namespace nloch
