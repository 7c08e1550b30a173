#pragma once

// Weierstrass and Jacobi elliptic functions on the rectangular lattice
// generated by omega1 = 2*pi and omega2 = i*h, h > 0, plus Legendre elliptic
// integrals and the Jacobi elliptic sine.
//
// All Weierstrass functions are evaluated through q-series of the first
// theta function with nome q = exp(i*pi*omega2/omega1) = exp(-h/2). Direct
// lattice sums are only used as test oracles.

#include <complex>
#include <numbers>

namespace ringmap {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kOmega1 = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Module k of a Legendre elliptic integral together with k' = sqrt(1 - k^2).
struct EllipticModulus {
    double k;
    double kprime;

    /// Throws DomainError unless 0 < k < 1.
    static EllipticModulus from_k(double k);
    /// Builds the module from its complement; keeps k' accurate when k -> 1.
    static EllipticModulus from_kprime(double kprime);
    EllipticModulus complement() const { return {kprime, k}; }
};

struct HalfPeriodConstants {
    cplx eta1;  ///< 2 zeta(omega1/2)
    cplx eta2;  ///< 2 zeta(omega2/2)
    cplx g2;
    cplx e1;  ///< wp(omega1/2)
    cplx e2;  ///< wp(omega2/2)
    cplx e3;  ///< wp((omega1+omega2)/2)
};

/// Period pair (2*pi, i*h) with its nome and half-period constants.
/// Immutable once built; every special-function call takes it by const ref.
class PeriodLattice {
public:
    /// Throws InvalidLatticeError unless h > 0 and finite.
    explicit PeriodLattice(double height);
    /// Accepts a purely imaginary omega2 with positive imaginary part.
    static PeriodLattice from_omega2(cplx omega2);
    /// Lattice of an annulus with the given conformal modulus (omega2 = 4*pi*i*m).
    static PeriodLattice from_modulus(double modulus);

    static constexpr double omega1() { return kOmega1; }
    cplx omega2() const { return {0.0, height_}; }
    double height() const { return height_; }
    /// q = exp(i*pi*omega2/omega1); real and in (0, 1) for this lattice.
    double nome() const { return nome_; }
    double eta1() const { return eta1_; }
    cplx eta2() const { return eta2_; }
    double g2() const { return g2_; }
    const HalfPeriodConstants& constants() const { return constants_; }
    /// Mod = omega2 / (2 i omega1).
    double modulus() const { return height_ / (2.0 * kOmega1); }

private:
    double height_;
    double nome_;
    double eta1_;
    cplx eta2_;
    double g2_;
    HalfPeriodConstants constants_;
};

/// Which analytic continuation of log sigma to use near the real axis.
/// `upper` is analytic on -h < Im z < h except for cuts running downward
/// from the real lattice points; `lower` has the cuts running upward.
enum class SigmaBranch { upper, lower };

/// First Jacobi theta function theta1(v, q) = 2 sum (-1)^n q^{(n+1/2)^2}
/// sin((2n+1) v) and its v-derivatives of order 0..3.
cplx theta1(cplx v, cplx q, int order = 0);

struct ThetaNulls {
    cplx theta2;
    cplx theta3;
    cplx theta4;
};
ThetaNulls theta_nulls(cplx q);

HalfPeriodConstants half_period_constants(const PeriodLattice& lattice);

cplx weierstrass_zeta(cplx z, const PeriodLattice& lattice);
cplx weierstrass_p(cplx z, const PeriodLattice& lattice);

/// log sigma(z) including the normalisation sigma(z) ~ z at the origin.
/// The default picks `upper` for Im z >= 0 and `lower` otherwise.
cplx log_sigma(cplx z, const PeriodLattice& lattice);
cplx log_sigma(cplx z, const PeriodLattice& lattice, SigmaBranch branch);

/// log sigma(u + 2*pi*k) on the given branch, evaluated from log sigma(u) by
/// the exact shift rule so that a small u keeps its relative accuracy.
cplx log_sigma_shifted(cplx u, long k, const PeriodLattice& lattice, SigmaBranch branch);

/// Partial derivatives of log sigma(z; omega1, omega2) in the periods.
cplx dlog_sigma_domega2(cplx z, const PeriodLattice& lattice);
cplx dlog_sigma_domega1(cplx z, const PeriodLattice& lattice);

/// Complete integral of the first kind by the arithmetic-geometric mean.
double ellint_K(const EllipticModulus& m);
/// K'(k) = K(k').
double ellint_Kprime(const EllipticModulus& m);

/// Incomplete integral F(x, k) = int_0^x dt / sqrt((1 - t^2)(1 - k^2 t^2)).
/// Non-real x follow the straight path from the origin. Real x with
/// 1 < |x| < 1/k lie on a cut and raise BranchError; real x > 1/k use
/// F(x) = K + iK' - int_{1/k}^x with the positive real root.
cplx ellint_F(cplx x, const EllipticModulus& m);

struct JacobiTriple {
    double sn;
    double cn;
    double dn;
};
/// sn, cn, dn for real argument by descending Landen (AGM) recursion.
JacobiTriple jacobi_sncndn(double u, const EllipticModulus& m);
cplx jacobi_sn(cplx u, const EllipticModulus& m);

/// Carlson's symmetric integral R_F for complex arguments.
cplx carlson_rf(cplx x, cplx y, cplx z);

namespace detail {

/// zeta by the theta series without lattice reduction; needs |Im z| < h.
cplx zeta_series(cplx z, const PeriodLattice& lattice);
/// exp(z) - 1 without cancellation near the origin.
cplx expm1(cplx z);

}  // namespace detail

}  // namespace ringmap
