#include "nloch/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nloch/errors.hpp"
#include "nloch/linalg.hpp"

namespace nloch {

void Grid2D::validate() const {
    std::string bad;
    if (nx < 4 || ny < 4) bad += " nx,ny>=4";
    if (!(lx > 0) || !(ly > 0)) bad += " lx,ly>0";
    if (!(dt > 0)) bad += " dt>0";
    if (nt < 1) bad += " nt>=1";
    if (!bad.empty()) throw ConfigInvalid("grid invalid:" + bad);
}

bool Grid2D::same_space(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
}

Grid2D Grid2D::refined(int space, int time) const {
    Grid2D g = *this;
    g.nx *= space;
    g.ny *= space;
    g.nt *= time;
    g.dt /= time;
    return g;
}

Field::Field(const Grid2D& g, double value) : grid_(g), v_(g.cells(), value) {}

Field Field::from_function(const Grid2D& g, const std::function<double(double, double)>& fn) {
    Field f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.at(i, j) = fn(g.x(i), g.y(j));
    return f;
}

bool Field::finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

double Field::min() const { return *std::min_element(v_.begin(), v_.end()); }
double Field::max() const { return *std::max_element(v_.begin(), v_.end()); }

Field& Field::operator+=(const Field& o) {
    require_same_grid(*this, o, "operator+=");
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(*this, o, "operator-=");
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
}

Field& Field::axpy(double s, const Field& o) {
    require_same_grid(*this, o, "axpy");
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += s * o.v_[k];
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a, b, "hadamard");
    Field out(a.grid());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
    return out;
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (!a.grid().same_space(b.grid()) || a.size() != b.size())
        throw GridMismatch(std::string("grid mismatch in ") + where);
}

Field laplacian_neumann(const Field& u) {
    const Grid2D& g = u.grid();
    const int nx = g.nx, ny = g.ny;
    const double ax = 1.0 / (g.hx() * g.hx());
    const double ay = 1.0 / (g.hy() * g.hy());
    Field out(g);
    const double* a = u.data();
    double* o = out.data();
    for (int j = 0; j < ny; ++j) {
        const double* row = a + static_cast<std::size_t>(j) * nx;
        const double* dn = j > 0 ? row - nx : row;
        const double* up = j < ny - 1 ? row + nx : row;
        double* orow = o + static_cast<std::size_t>(j) * nx;
        for (int i = 0; i < nx; ++i) {
            const double c = row[i];
            const double w = i > 0 ? row[i - 1] : c;
            const double e = i < nx - 1 ? row[i + 1] : c;
            // Differences first so that constants give exact zeros.
            orow[i] = ax * ((e - c) - (c - w)) + ay * ((up[i] - c) - (c - dn[i]));
        }
    }
    return out;
}

double integrate(const Field& u) {
    double s = 0.0;
    for (double x : u.values()) s += x;
    return s * u.grid().cell_area();
}

double dot(const Field& u, const Field& v) {
    require_same_grid(u, v, "dot");
    double s = 0.0;
    const double* a = u.data();
    const double* b = v.data();
    for (std::size_t k = 0; k < u.size(); ++k) s += a[k] * b[k];
    return s * u.grid().cell_area();
}

double h1_seminorm_sq(const Field& u) {
    const Grid2D& g = u.grid();
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            const double d = u.at(i + 1, j) - u.at(i, j);
            sx += d * d;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = u.at(i, j + 1) - u.at(i, j);
            sy += d * d;
        }
    return g.cell_area() * (sx / (g.hx() * g.hx()) + sy / (g.hy() * g.hy()));
}

namespace {

double vstar_norm(const Field& u, const NeumannSpectral& spec) {
    const Field w = spec.solve(1.0, 1.0, u);
    return std::sqrt(std::max(0.0, dot(u, w)));
}

} // namespace

FieldNorms norms(const Field& u) {
    FieldNorms n;
    const double l2sq = dot(u, u);
    const double semi = h1_seminorm_sq(u);
    n.L2_Omega = std::sqrt(l2sq);
    n.Linf_Omega = 0.0;
    for (double x : u.values()) n.Linf_Omega = std::max(n.Linf_Omega, std::abs(x));
    n.H1_semi = std::sqrt(semi);
    n.V = std::sqrt(l2sq + semi);
    NeumannSpectral spec(u.grid());
    n.Vstar = vstar_norm(u, spec);
    return n;
}

void Trajectory::resize(const Grid2D& g, std::size_t n) {
    grid = g;
    times.assign(n, 0.0);
    for (auto& c : comp) c.assign(n, Field(g));
}

std::vector<double> trapezoid_weights(const std::vector<double>& times) {
    std::vector<double> w(times.size(), 0.0);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double h = times[k + 1] - times[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    return w;
}

TrajectoryNorms norms(const std::vector<Field>& u, const std::vector<double>& times) {
    if (u.size() != times.size()) throw ShapeMismatch("norms: sequence and time grid differ in length");
    TrajectoryNorms n;
    if (u.empty()) return n;
    const auto w = trapezoid_weights(times);
    NeumannSpectral spec(u.front().grid());
    double l2q = 0, l2v = 0, h1t = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double l2sq = dot(u[k], u[k]);
        const double vsq = l2sq + h1_seminorm_sq(u[k]);
        l2q += w[k] * l2sq;
        l2v += w[k] * vsq;
        n.C0_0T_H = std::max(n.C0_0T_H, std::sqrt(l2sq));
        n.C0_0T_V = std::max(n.C0_0T_V, std::sqrt(vsq));
        n.C0_0T_Vstar = std::max(n.C0_0T_Vstar, vstar_norm(u[k], spec));
        for (double x : u[k].values()) n.Linf_Q = std::max(n.Linf_Q, std::abs(x));
        if (k + 1 < u.size()) {
            const double h = times[k + 1] - times[k];
            Field d = u[k + 1] - u[k];
            h1t += dot(d, d) / h;
        }
    }
    n.L2_Q = std::sqrt(l2q);
    n.L2_0T_V = std::sqrt(l2v);
    n.H1_0T_H = std::sqrt(l2q + h1t);
    return n;
}

std::vector<Field> difference(const std::vector<Field>& u, const std::vector<Field>& v) {
    if (u.size() != v.size()) throw ShapeMismatch("difference: sequences differ in length");
    std::vector<Field> d;
    d.reserve(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) d.push_back(u[k] - v[k]);
    return d;
}

} // namespace nloch
