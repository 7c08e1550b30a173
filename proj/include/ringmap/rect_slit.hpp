#pragma once

// Closed-form accessory parameters for the rectangle (-1,1) x (-b,b) with a
// slit [a1, a2] on the real axis, optionally moved by w -> scale*w + offset.

#include <vector>

#include "ringmap/sc_map.hpp"

namespace ringmap {

struct RectSlitInput {
    double b = 0.5;
    double a1 = -0.5;
    double a2 = 0.5;
    double scale = 1.0;
    cplx offset{0.0, 0.0};

    void validate() const;
};

struct RectSlitSolution {
    double k = 0.0;
    double ell = 0.0;
    double s1 = 0.0, s2 = 0.0;
    double v11 = 0.0, v12 = 0.0;
    double beta11 = 0.0;
    double beta12 = 0.0;
    double modulus = 0.0;
    cplx omega2;
    DomainSpec spec;
    AccessoryState state;
};

/// k with K'(k)/K(k) = b, from theta constants at nome exp(-pi b).
double module_from_height(double b);

/// Module ell from the cross-ratio condition; the root in (0, 1).
double ell_from_slit(double s1, double s2);

/// Closed-form solution. C1, C2 are fixed by matching the first two outer
/// vertices when `with_frame` is set.
RectSlitSolution solve_rect_slit(const RectSlitInput& in, bool with_frame = true);

struct Table1Row {
    double a1, a2;
    double omega2_im;
    double z11, z12;
    double modulus;
};

std::vector<Table1Row> table1_report(const std::vector<RectSlitInput>& rows);

}  // namespace ringmap
