#include "ringmap/rect_slit.hpp"

#include <cmath>
#include <string>

#include "ringmap/errors.hpp"

namespace ringmap {

void RectSlitInput::validate() const {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("b", "must be positive");
    if (!(a1 > -1.0 && a1 < a2 && a2 < 1.0))
        throw ValidationError("a1,a2", "need -1 < a1 < a2 < 1");
    if (!(scale > 0.0)) throw ValidationError("scale", "must be positive");
}

double module_from_height(double b) {
    if (!(b > 0.0)) throw DomainError("height must be positive");
    ThetaNulls t = theta_nulls(std::exp(-kPi * b));
    double r = (t.theta2 / t.theta3).real();
    return r * r;
}

double ell_from_slit(double s1, double s2) {
    const double root = std::sqrt((s1 * s1 - 1.0) * (s2 * s2 - 1.0));
    const double d = s1 - s2;
    for (double sgn : {1.0, -1.0}) {
        double ell = (s1 * s2 - 1.0 + sgn * root) / d;
        if (ell > 0.0 && ell < 1.0) return ell;
    }
    throw DegeneracyError("no elliptic module in (0, 1) for this slit");
}

RectSlitSolution solve_rect_slit(const RectSlitInput& in, bool with_frame) {
    in.validate();
    RectSlitSolution sol;
    const double b = in.b;
    sol.k = module_from_height(b);
    const EllipticModulus mk = EllipticModulus::from_k(sol.k);
    const double c1 = ellint_K(mk);
    sol.s1 = jacobi_sn(c1 * in.a1, mk).real();
    sol.s2 = jacobi_sn(c1 * in.a2, mk).real();
    const double s1 = sol.s1, s2 = sol.s2, k = sol.k;

    sol.ell = ell_from_slit(s1, s2);
    const double l = sol.ell;
    if (!(l > 1e-300 && 1.0 - l > 1e-15))
        throw DegeneracyError("slit too close to the rectangle; module out of range");
    const EllipticModulus ml = EllipticModulus::from_k(l);

    sol.v11 = ((k * (1 + l) + (1 - l)) * s1 + (k * (1 - l) + (1 + l)) * s2 - 2 * k * s1 * s2 - 2) /
              ((k * (l + 1) + (l - 1)) * s1 + (k * (l - 1) + (l + 1)) * s2 - 2 * l * k * s1 * s2 - 2 * l);
    sol.v12 = ((k * (1 + l) - (1 - l)) * s1 + (k * (1 - l) - (1 + l)) * s2 - 2 * k * s1 * s2 + 2) /
              ((k * (l + 1) - (l - 1)) * s1 + (k * (l - 1) - (l + 1)) * s2 - 2 * l * k * s1 * s2 + 2 * l);

    const double Kl = ellint_K(ml);
    // int_{1/l}^{v} dxi / sqrt((xi^2-1)(l^2 xi^2-1)) = K - F(1/(l v)); for tall
    // rectangles the path runs through infinity and v < -1/l, F odd
    auto tail = [&](double v) {
        const double x = 1.0 / (l * v);
        if (!(std::abs(x) <= 1.0)) throw DegeneracyError("Moebius image inside (-1/l, 1/l)");
        const double F = ellint_F(std::abs(x), ml).real();
        return Kl - std::copysign(F, x);
    };
    sol.beta11 = kPi / (2.0 * Kl) * tail(sol.v11);
    sol.beta12 = kPi - kPi / (2.0 * Kl) * tail(-sol.v12);
    sol.modulus = ellint_Kprime(ml) / (4.0 * Kl);
    const double h = 4.0 * kPi * sol.modulus;
    sol.omega2 = cplx(0.0, h);

    auto tr = [&](cplx w) { return in.scale * w + in.offset; };
    sol.spec.outer = {{tr(cplx(1, b)), 0.5}, {tr(cplx(-1, b)), 0.5},
                      {tr(cplx(-1, -b)), 0.5}, {tr(cplx(1, -b)), 0.5}};
    sol.spec.inner = {{tr(cplx(in.a1, 0)), 2.0}, {tr(cplx(in.a2, 0)), 2.0}};
    sol.state.x1 = {sol.beta11, sol.beta12, kOmega1 - sol.beta12, kOmega1 - sol.beta11};
    sol.state.x2 = {kPi, 0.0};
    sol.state.height = h;
    if (with_frame) {
        auto [C1, C2] = ScMap::frame_constants(sol.spec, sol.state);
        sol.state.C1 = C1;
        sol.state.C2 = C2;
    }
    return sol;
}

std::vector<Table1Row> table1_report(const std::vector<RectSlitInput>& rows) {
    std::vector<Table1Row> out;
    for (const auto& r : rows) {
        RectSlitSolution s = solve_rect_slit(r, false);
        out.push_back({r.a1, r.a2, s.omega2.imag(), s.beta11, s.beta12, s.modulus});
    }
    return out;
}

}  // namespace ringmap
