#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nloch {

// Uniform cell-centered grid on [0,lx]x[0,ly] plus the uniform time grid.
struct Grid2D {
    int nx = 32;
    int ny = 32;
    double lx = 1.0;
    double ly = 1.0;
    double dt = 1e-3;
    int nt = 100;

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double T() const { return dt * nt; }
    double cell_area() const { return hx() * hy(); }
    std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
    double x(int i) const { return (i + 0.5) * hx(); }
    double y(int j) const { return (j + 0.5) * hy(); }

    // Throws ConfigInvalid when an invariant is broken.
    void validate() const;

    // Same spatial layout; the time grid is ignored.
    bool same_space(const Grid2D& o) const;

    // Space refined by `space` and time refined by `time` (factors >= 1).
    Grid2D refined(int space, int time) const;
};

// Scalar grid function, storage index j*nx + i (x fastest).
class Field {
public:
    Field() = default;
    explicit Field(const Grid2D& g, double value = 0.0);
    static Field from_function(const Grid2D& g, const std::function<double(double, double)>& fn);

    const Grid2D& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::span<double> span() { return v_; }
    std::span<const double> span() const { return v_; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    double& operator[](std::size_t k) { return v_[k]; }
    double operator[](std::size_t k) const { return v_[k]; }
    double& at(int i, int j) { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }
    double at(int i, int j) const { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }

    bool empty() const { return v_.empty(); }
    bool finite() const;
    double min() const;
    double max() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
    // this += s*o
    Field& axpy(double s, const Field& o);

private:
    Grid2D grid_{};
    std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field hadamard(const Field& a, const Field& b);

// Throws GridMismatch unless the two fields live on the same spatial grid.
void require_same_grid(const Field& a, const Field& b, const char* where);

// Discrete Laplacian (not its negative) with mirror ghost cells.
Field laplacian_neumann(const Field& u);

// Midpoint rule hx*hy*sum(u).
double integrate(const Field& u);

// Discrete L2(Omega) inner product.
double dot(const Field& u, const Field& v);

// Squared H1 seminorm from forward differences; the Neumann closure drops the last face.
double h1_seminorm_sq(const Field& u);

struct FieldNorms {
    double L2_Omega = 0;
    double Linf_Omega = 0;
    double H1_semi = 0;
    double V = 0;      // full H1 norm
    double Vstar = 0;  // dual norm through (I - Lap)^{-1}
};

FieldNorms norms(const Field& u);

// Time-indexed sequence of three fields. Roles name the slots, e.g. phi/mu/sigma or p/q/r.
struct Trajectory {
    Grid2D grid{};
    std::vector<double> times;
    std::array<std::vector<Field>, 3> comp;
    std::array<std::string, 3> roles{"phi", "mu", "sigma"};

    std::size_t levels() const { return times.size(); }
    void resize(const Grid2D& g, std::size_t n);
};

// Space-time norms of a field sequence on `times` (trapezoid rule in time).
struct TrajectoryNorms {
    double L2_Q = 0;
    double L2_0T_V = 0;
    double C0_0T_H = 0;
    double C0_0T_V = 0;
    double C0_0T_Vstar = 0;
    double H1_0T_H = 0;  // includes the forward-difference time derivative
    double Linf_Q = 0;
};

TrajectoryNorms norms(const std::vector<Field>& u, const std::vector<double>& times);

// Trapezoid weights for a time grid.
std::vector<double> trapezoid_weights(const std::vector<double>& times);

// u - v levelwise; throws ShapeMismatch on length mismatch.
std::vector<Field> difference(const std::vector<Field>& u, const std::vector<Field>& v);

} // namespace nloch
