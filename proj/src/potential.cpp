#include "nloch/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nloch/errors.hpp"

namespace nloch {

double PotentialSpec::ell() const {
    return family == PotentialFamily::polynomial ? std::numeric_limits<double>::infinity() : 1.0;
}

void PotentialSpec::validate() const {
    if (family == PotentialFamily::logarithmic) {
        if (!(theta > 0.0 && theta < theta0))
            throw ConfigInvalid("A4: logarithmic potential needs 0 < theta < theta0");
        if (!(delta_clip > 0.0 && delta_clip < 1.0))
            throw ConfigInvalid("potential.delta_clip must lie in (0,1)");
    }
}

double eval_F(const PotentialSpec& spec, double r, int order) {
    if (spec.family == PotentialFamily::polynomial) {
        switch (order) {
        case 0: {
            const double s = r * r - 1.0;
            return 0.25 * s * s;
        }
        case 1: return r * r * r - r;
        case 2: return 3.0 * r * r - 1.0;
        case 3: return 6.0 * r;
        case 4: return 6.0;
        default: throw Error("eval_F: order must be 0..4");
        }
    }
    if (!(std::abs(r) <= 1.0 - spec.delta_clip))
        throw DomainViolation("logarithmic potential evaluated at |r| = " + std::to_string(std::abs(r)) +
                              " > 1 - delta_clip");
    const double th = spec.theta, th0 = spec.theta0;
    const double om = 1.0 - r * r;
    switch (order) {
    case 0: return 0.5 * th * ((1.0 + r) * std::log1p(r) + (1.0 - r) * std::log1p(-r)) - 0.5 * th0 * r * r;
    case 1: return th * std::atanh(r) - th0 * r;
    case 2: return th / om - th0;
    case 3: return 2.0 * th * r / (om * om);
    case 4: return 2.0 * th * (1.0 + 3.0 * r * r) / (om * om * om);
    default: throw Error("eval_F: order must be 0..4");
    }
}

Field eval_F(const PotentialSpec& spec, const Field& u, int order) {
    Field out(u.grid());
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = eval_F(spec, u[k], order);
    return out;
}

double min_F2(const PotentialSpec& spec) {
    const double half = spec.family == PotentialFamily::polynomial ? 1.2 : 1.0 - spec.delta_clip;
    const int n = 24000;
    double m = std::numeric_limits<double>::infinity();
    for (int k = -n; k <= n; ++k) m = std::min(m, eval_F(spec, half * k / n, 2));
    return m;
}

double default_stabilization(const PotentialSpec& spec) { return std::max(0.0, -min_F2(spec)); }

void ProliferationSpec::validate() const {
    if (!(fmax >= 0.0) || !std::isfinite(fmax)) throw ConfigInvalid("A2: f.max must be finite and >= 0");
    if (family == ProliferationFamily::gaussian_bump && !(width > 0.0))
        throw ConfigInvalid("f.width must be > 0");
}

double eval_f(const ProliferationSpec& spec, double r, int order) {
    if (order < 0 || order > 2) throw Error("eval_f: order must be 0..2");
    if (spec.family == ProliferationFamily::smoothstep) {
        // Quintic smoothstep of t = (r+1)/2: C2 with flat ends.
        const double t = 0.5 * (r + 1.0);
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return order == 0 ? spec.fmax : 0.0;
        switch (order) {
        case 0: return spec.fmax * t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        case 1: return spec.fmax * 0.5 * 30.0 * t * t * (1.0 - t) * (1.0 - t);
        default: return spec.fmax * 0.25 * 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        }
    }
    const double z = (r - spec.center) / spec.width;
    const double g = spec.fmax * std::exp(-0.5 * z * z);
    switch (order) {
    case 0: return g;
    case 1: return -g * z / spec.width;
    default: return g * (z * z - 1.0) / (spec.width * spec.width);
    }
}

Field eval_f(const ProliferationSpec& spec, const Field& u, int order) {
    Field out(u.grid());
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = eval_f(spec, u[k], order);
    return out;
}

std::string to_string(PotentialFamily f) {
    return f == PotentialFamily::polynomial ? "polynomial" : "logarithmic";
}

std::string to_string(ProliferationFamily f) {
    return f == ProliferationFamily::smoothstep ? "smoothstep" : "gaussian_bump";
}

PotentialFamily parse_potential_family(const std::string& s) {
    if (s == "polynomial") return PotentialFamily::polynomial;
    if (s == "logarithmic") return PotentialFamily::logarithmic;
    if (s == "double_obstacle" || s == "double-obstacle" || s == "obstacle")
        throw ConfigInvalid("A4: potentials of double-obstacle type are excluded");
    throw ConfigInvalid("unknown potential.family '" + s + "'");
}

ProliferationFamily parse_proliferation_family(const std::string& s) {
    if (s == "smoothstep") return ProliferationFamily::smoothstep;
    if (s == "gaussian_bump") return ProliferationFamily::gaussian_bump;
    throw ConfigInvalid("unknown f.family '" + s + "'");
}

} // namespace nloch
