#pragma once

#include <string>

#include "nloch/field.hpp"

namespace nloch {

enum class PotentialFamily { polynomial, logarithmic };

struct PotentialSpec {
    PotentialFamily family = PotentialFamily::polynomial;
    double theta = 0.5;
    double theta0 = 1.0;
    double delta_clip = 1e-4;

    // Half-width of the domain of F; infinity for the polynomial well.
    double ell() const;
    void validate() const;
};

// F and its derivatives up to order 4. Throws DomainViolation outside |r| <= 1 - delta_clip
// for the logarithmic family.
double eval_F(const PotentialSpec& spec, double r, int order);

// Pointwise F^(order)(u).
Field eval_F(const PotentialSpec& spec, const Field& u, int order);

// Minimum of F'' over a dense sample of [-1.2, 1.2] (polynomial) or the clipped domain.
double min_F2(const PotentialSpec& spec);

// max(0, -min F'').
double default_stabilization(const PotentialSpec& spec);

// Lower bound F(r) >= cF r^4 - CF for the polynomial well.
struct GrowthConstants {
    double cF = 0.125;
    double CF = 0.25;  // tight at r^2 = 2 for cF = 1/8
};

enum class ProliferationFamily { smoothstep, gaussian_bump };

struct ProliferationSpec {
    ProliferationFamily family = ProliferationFamily::smoothstep;
    double fmax = 1.0;
    double center = 1.0;  // gaussian_bump only
    double width = 0.5;   // gaussian_bump only

    void validate() const;
};

// f and its first two derivatives.
double eval_f(const ProliferationSpec& spec, double r, int order);
Field eval_f(const ProliferationSpec& spec, const Field& u, int order);

std::string to_string(PotentialFamily f);
std::string to_string(ProliferationFamily f);
PotentialFamily parse_potential_family(const std::string& s);
ProliferationFamily parse_proliferation_family(const std::string& s);

} // namespace nloch
