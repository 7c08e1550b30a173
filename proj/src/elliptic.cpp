#include "ringmap/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ringmap/errors.hpp"

namespace ringmap {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Terms needed so that q^(2n) drops below 1e-18 for q = exp(-h/2),
// with headroom for arguments at |Im z| = h/2.
int series_terms(double h) {
    double n = 42.0 / h + 8.0;
    if (n > 20000.0) {
        throw InvalidLatticeError("period height too small for the theta series: " +
                                  std::to_string(h));
    }
    return static_cast<int>(n);
}

cplx reduce_real(cplx z, long& k) {
    k = std::lround(z.real() / kOmega1);
    return z - static_cast<double>(k) * kOmega1;
}

void check_pole(cplx z, const PeriodLattice& lat) {
    long k = 0;
    cplx r = reduce_real(z, k);
    long j = std::lround(r.imag() / lat.height());
    r -= cplx(0.0, static_cast<double>(j) * lat.height());
    // near the origin itself only an exact zero is a pole; elsewhere the
    // reduction loses the last bits of z
    const double tol = (k == 0 && j == 0) ? 0.0 : 64.0 * kEps * std::abs(z);
    if (std::abs(r) <= tol) throw PoleError("argument is a lattice point");
}

double agm(double a, double b) {
    for (int i = 0; i < 64 && std::abs(a - b) > 4.0 * kEps * a; ++i) {
        double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return 0.5 * (a + b);
}

}  // namespace

namespace detail {

cplx expm1(cplx z) {
    double x = z.real();
    double y = z.imag();
    if (std::abs(z) > 0.5) return std::exp(z) - 1.0;
    double em1 = std::expm1(x);
    double s = std::sin(0.5 * y);
    double re = em1 * std::cos(y) - 2.0 * s * s;
    double im = std::exp(x) * std::sin(y);
    return {re, im};
}

cplx zeta_series(cplx u, const PeriodLattice& lat) {
    const double q = lat.nome();
    const double q2 = q * q;
    cplx E = std::exp(kI * u);
    cplx half_cot;
    if (std::abs(E) <= 1.0) {
        half_cot = 0.5 * kI * (E + 1.0) / expm1(kI * u);
    } else {
        cplx Ei = 1.0 / E;
        half_cot = -0.5 * kI * (1.0 + Ei) / expm1(-kI * u);
    }
    cplx sum = 0.0;
    double q2n = 1.0;
    const int nmax = series_terms(lat.height());
    for (int n = 1; n <= nmax; ++n) {
        q2n *= q2;
        cplx w = q2n * E;
        cplx wt = q2n / E;
        cplx term = -kI * w / (1.0 - w) + kI * wt / (1.0 - wt);
        sum += term;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum)) && std::abs(w) < 1e-3 &&
            std::abs(wt) < 1e-3)
            break;
    }
    return lat.eta1() * u / kOmega1 + half_cot + sum;
}

}  // namespace detail

EllipticModulus EllipticModulus::from_k(double k) {
    if (!(k > 0.0 && k < 1.0)) {
        throw DomainError("elliptic module must satisfy 0 < k < 1, got " + std::to_string(k));
    }
    return {k, std::sqrt((1.0 - k) * (1.0 + k))};
}

EllipticModulus EllipticModulus::from_kprime(double kp) {
    if (!(kp > 0.0 && kp < 1.0)) {
        throw DomainError("complementary module must satisfy 0 < k' < 1, got " +
                          std::to_string(kp));
    }
    return {std::sqrt((1.0 - kp) * (1.0 + kp)), kp};
}

PeriodLattice::PeriodLattice(double height) : height_(height) {
    if (!(height > 0.0) || !std::isfinite(height)) {
        throw InvalidLatticeError("omega2 must be i*h with h > 0, got h = " +
                                  std::to_string(height));
    }
    nome_ = std::exp(-0.5 * height);
    if (!(nome_ > 0.0 && nome_ < 1.0)) {
        throw InvalidLatticeError("nome outside (0, 1)");
    }
    const double q2 = nome_ * nome_;
    double s = 0.0;
    double q2n = 1.0;
    const int nmax = series_terms(height);
    for (int n = 1; n <= nmax; ++n) {
        q2n *= q2;
        double t = q2n / ((1.0 - q2n) * (1.0 - q2n));
        s += t;
        if (t < 1e-19 * s) break;
    }
    eta1_ = kPi / 6.0 * (1.0 - 24.0 * s);
    eta2_ = (eta1_ * omega2() - 2.0 * kPi * kI) / kOmega1;
    constants_ = half_period_constants(*this);
    g2_ = constants_.g2.real();
}

PeriodLattice PeriodLattice::from_omega2(cplx omega2) {
    if (std::abs(omega2.real()) > 1e-14 * std::abs(omega2)) {
        throw InvalidLatticeError("omega2 must be purely imaginary");
    }
    return PeriodLattice(omega2.imag());
}

PeriodLattice PeriodLattice::from_modulus(double modulus) {
    return PeriodLattice(2.0 * kOmega1 * modulus);
}

cplx theta1(cplx v, cplx q, int order) {
    if (!(std::abs(q) < 1.0)) throw InvalidLatticeError("theta nome must satisfy |q| < 1");
    if (order < 0 || order > 3) throw DomainError("theta1 derivative order must be 0..3");
    if (q == 0.0) return 0.0;
    // theta1(v + k pi) = (-1)^k theta1(v), for every derivative order
    const long kred = std::lround(v.real() / kPi);
    v -= static_cast<double>(kred) * kPi;
    const double parity = (kred % 2 == 0) ? 1.0 : -1.0;
    const cplx logq = std::log(q);
    cplx sum = 0.0;
    for (int n = 0; n < 2000; ++n) {
        double m = n + 0.5;
        double f = 2.0 * n + 1.0;
        cplx qq = std::exp(m * m * logq);
        cplx arg = f * v;
        cplx trig;
        switch (order) {
            case 0: trig = std::sin(arg); break;
            case 1: trig = f * std::cos(arg); break;
            case 2: trig = -f * f * std::sin(arg); break;
            default: trig = -f * f * f * std::cos(arg); break;
        }
        cplx term = (n % 2 == 0 ? 2.0 : -2.0) * qq * trig;
        sum += term;
        // growth of sin((2n+1)v) is at most exp((2n+1)|Im v|)
        double bound = std::exp(m * m * logq.real() + f * std::abs(v.imag())) * std::pow(f, order);
        if (n > 2 && bound < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return parity * sum;
}

ThetaNulls theta_nulls(cplx q) {
    if (!(std::abs(q) < 1.0)) throw InvalidLatticeError("theta nome must satisfy |q| < 1");
    if (q == 0.0) return {0.0, 1.0, 1.0};
    const cplx logq = std::log(q);
    cplx t2 = 0.0, t3 = 1.0, t4 = 1.0;
    for (int n = 0; n < 4000; ++n) {
        double m = n + 0.5;
        cplx a = std::exp(m * m * logq);
        t2 += 2.0 * a;
        if (n >= 1) {
            cplx b = std::exp(double(n) * n * logq);
            t3 += 2.0 * b;
            t4 += (n % 2 == 0 ? 2.0 : -2.0) * b;
        }
        if (n > 1 && std::abs(a) < 1e-18) break;
    }
    return {t2, t3, t4};
}

HalfPeriodConstants half_period_constants(const PeriodLattice& lat) {
    ThetaNulls t = theta_nulls(lat.nome());
    cplx t24 = std::pow(t.theta2, 4);
    cplx t44 = std::pow(t.theta4, 4);
    HalfPeriodConstants c;
    c.eta1 = lat.eta1();
    c.eta2 = lat.eta2();
    c.e1 = (t24 + 2.0 * t44) / 12.0;
    c.e2 = -(2.0 * t24 + t44) / 12.0;
    c.e3 = (t24 - t44) / 12.0;
    c.g2 = 2.0 * (c.e1 * c.e1 + c.e2 * c.e2 + c.e3 * c.e3);
    return c;
}

cplx weierstrass_zeta(cplx z, const PeriodLattice& lat) {
    check_pole(z, lat);
    long k = 0;
    cplx u = reduce_real(z, k);
    long j = std::lround(u.imag() / lat.height());
    u -= cplx(0.0, static_cast<double>(j) * lat.height());
    return detail::zeta_series(u, lat) + static_cast<double>(k) * lat.eta1() +
           static_cast<double>(j) * lat.eta2();
}

cplx weierstrass_p(cplx z, const PeriodLattice& lat) {
    check_pole(z, lat);
    long k = 0;
    cplx u = reduce_real(z, k);
    long j = std::lround(u.imag() / lat.height());
    u -= cplx(0.0, static_cast<double>(j) * lat.height());

    const double q2 = lat.nome() * lat.nome();
    cplx E = std::exp(kI * u);
    cplx csc;
    if (std::abs(E) <= 1.0) {
        cplx d = detail::expm1(kI * u);
        csc = -E / (d * d);
    } else {
        cplx d = detail::expm1(-kI * u);
        csc = -(1.0 / E) / (d * d);
    }
    cplx sum = 0.0;
    double q2n = 1.0;
    const int nmax = series_terms(lat.height());
    for (int n = 1; n <= nmax; ++n) {
        q2n *= q2;
        cplx w = q2n * E;
        cplx wt = q2n / E;
        cplx term = w / ((1.0 - w) * (1.0 - w)) + wt / ((1.0 - wt) * (1.0 - wt));
        sum += term;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum)) && std::abs(w) < 1e-3 &&
            std::abs(wt) < 1e-3)
            break;
    }
    return -lat.eta1() / kOmega1 + csc - sum;
}

cplx log_sigma(cplx z, const PeriodLattice& lat) {
    return log_sigma(z, lat, z.imag() >= 0.0 ? SigmaBranch::upper : SigmaBranch::lower);
}

cplx log_sigma(cplx z, const PeriodLattice& lat, SigmaBranch branch) {
    check_pole(z, lat);
    const double h = lat.height();
    if (std::abs(z.imag()) > 0.75 * h) {
        // sigma(u + j w2) = (-1)^j exp(eta2 (j u + j^2 w2 / 2)) sigma(u)
        long j = std::lround(z.imag() / h);
        cplx u = z - cplx(0.0, static_cast<double>(j) * h);
        double jd = static_cast<double>(j);
        return log_sigma(u, lat) + kI * kPi * jd +
               lat.eta2() * (jd * u + 0.5 * jd * jd * lat.omega2());
    }
    const double q2 = lat.nome() * lat.nome();
    cplx E = std::exp(kI * z);
    cplx logsin;
    if (branch == SigmaBranch::upper) {
        logsin = std::log(0.5 * kI) - 0.5 * kI * z + std::log(-detail::expm1(kI * z));
    } else {
        logsin = std::log(-0.5 * kI) + 0.5 * kI * z + std::log(-detail::expm1(-kI * z));
    }
    cplx sum = 0.0;
    double q2n = 1.0;
    const int nmax = 2 * series_terms(h);
    for (int n = 1; n <= nmax; ++n) {
        q2n *= q2;
        cplx w = q2n * E;
        cplx wt = q2n / E;
        cplx term = std::log(1.0 - w) + std::log(1.0 - wt) - 2.0 * std::log1p(-q2n);
        sum += term;
        if (std::abs(w) < 1e-18 && std::abs(wt) < 1e-18) break;
    }
    return std::log(2.0) + lat.eta1() * z * z / (2.0 * kOmega1) + logsin + sum;
}

cplx log_sigma_shifted(cplx u, long k, const PeriodLattice& lat, SigmaBranch branch) {
    const double kd = static_cast<double>(k);
    // each 2 pi step adds eta1 (u + pi) and -i pi (upper) or +i pi (lower)
    const double s = branch == SigmaBranch::upper ? -1.0 : 1.0;
    return log_sigma(u, lat, branch) + lat.eta1() * (kd * u + kPi * kd * kd) +
           cplx(0.0, s * kPi * kd);
}

cplx dlog_sigma_domega2(cplx z, const PeriodLattice& lat) {
    const cplx zeta = weierstrass_zeta(z, lat);
    const cplx wp = weierstrass_p(z, lat);
    const double w1 = kOmega1;
    cplx bracket = 0.5 * w1 * (wp - zeta * zeta) + lat.eta1() * (z * zeta - 1.0) -
                   lat.g2() / 24.0 * w1 * z * z;
    return -bracket / (2.0 * kPi * kI);
}

cplx dlog_sigma_domega1(cplx z, const PeriodLattice& lat) {
    const cplx zeta = weierstrass_zeta(z, lat);
    const cplx wp = weierstrass_p(z, lat);
    const cplx w2 = lat.omega2();
    cplx bracket = 0.5 * w2 * (wp - zeta * zeta) + lat.eta2() * (z * zeta - 1.0) -
                   lat.g2() / 24.0 * w2 * z * z;
    return bracket / (2.0 * kPi * kI);
}

double ellint_K(const EllipticModulus& m) {
    return kPi / (2.0 * agm(1.0, m.kprime));
}

double ellint_Kprime(const EllipticModulus& m) {
    return kPi / (2.0 * agm(1.0, m.k));
}

cplx carlson_rf(cplx x, cplx y, cplx z) {
    int zeros = (x == 0.0) + (y == 0.0) + (z == 0.0);
    if (zeros > 1) throw DomainError("R_F needs at most one zero argument");
    for (int it = 0; it < 200; ++it) {
        cplx a = (x + y + z) / 3.0;
        double dev = std::max({std::abs(a - x), std::abs(a - y), std::abs(a - z)});
        if (dev < 3e-4 * std::abs(a)) {
            cplx X = 1.0 - x / a;
            cplx Y = 1.0 - y / a;
            cplx Z = -(X + Y);
            cplx e2 = X * Y - Z * Z;
            cplx e3 = X * Y * Z;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) /
                   std::sqrt(a);
        }
        cplx sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
        cplx lam = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
    }
    throw AccuracyError("R_F duplication did not converge", 1.0);
}

cplx ellint_F(cplx x, const EllipticModulus& m) {
    const double k = m.k;
    if (x.imag() == 0.0) {
        const double xr = x.real();
        const double ax = std::abs(xr);
        const double sign = xr < 0.0 ? -1.0 : 1.0;
        if (ax <= 1.0) {
            return xr * carlson_rf(1.0 - xr * xr, (1.0 - k * xr) * (1.0 + k * xr), 1.0).real();
        }
        if (ax * k < 1.0) {
            throw BranchError("real argument between 1 and 1/k lies on a branch cut");
        }
        // above 1/k: F(x) = K + iK' - int_{1/k}^x = iK' + F(1/(kx))
        cplx f = cplx(0.0, ellint_Kprime(m)) + ellint_F(cplx(1.0 / (k * ax), 0.0), m);
        return sign * f;
    }
    return x * carlson_rf(1.0 - x * x, 1.0 - k * k * x * x, 1.0);
}

JacobiTriple jacobi_sncndn(double u, const EllipticModulus& m) {
    if (m.k < 1e-9) {
        double s = std::sin(u), c = std::cos(u);
        // first order in k^2
        double k2 = m.k * m.k;
        double corr = 0.25 * k2 * (u - s * c);
        return {s - corr * c, c + corr * s, std::sqrt(1.0 - k2 * s * s)};
    }
    constexpr int kMax = 32;
    double a[kMax + 1], c[kMax + 1];
    double b = m.kprime;
    a[0] = 1.0;
    c[0] = m.k;
    int n = 0;
    // below eps the rounded c no longer shrinks
    while (std::abs(c[n]) > std::numeric_limits<double>::epsilon() * a[n]) {
        if (n == kMax) throw AccuracyError("Landen recursion did not converge", c[n]);
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = std::sqrt(a[n] * b);
        ++n;
    }
    double phi = std::ldexp(a[n] * u, n);
    double phi_prev = phi;
    for (int i = n; i > 0; --i) {
        phi_prev = phi;
        phi = 0.5 * (phi + std::asin(c[i] * std::sin(phi) / a[i]));
    }
    double sn = std::sin(phi);
    double cn = std::cos(phi);
    double dn = n > 0 ? cn / std::cos(phi_prev - phi) : 1.0;
    if (!std::isfinite(dn) || std::abs(std::cos(phi_prev - phi)) < 1e-8) {
        dn = std::sqrt(std::max(0.0, 1.0 - m.k * m.k * sn * sn));
    }
    return {sn, cn, dn};
}

cplx jacobi_sn(cplx u, const EllipticModulus& m) {
    JacobiTriple r = jacobi_sncndn(u.real(), m);
    if (u.imag() == 0.0) return r.sn;
    JacobiTriple i = jacobi_sncndn(u.imag(), m.complement());
    double den = i.cn * i.cn + m.k * m.k * r.sn * r.sn * i.sn * i.sn;
    if (std::abs(den) < 1e-15) throw PoleError("argument is a pole of sn");
    return cplx(r.sn * i.dn, r.cn * r.dn * i.sn * i.cn) / den;
}

}  // namespace ringmap
