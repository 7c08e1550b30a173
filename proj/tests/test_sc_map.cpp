#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ringmap/errors.hpp"
#include "ringmap/rect_slit.hpp"
#include "ringmap/sc_map.hpp"

using namespace ringmap;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

RectSlitSolution base(double a1 = -0.5, double a2 = 0.5) { return solve_rect_slit({0.5, a1, a2}); }

// distance from w to the closed polyline through the vertices
double polygon_distance(cplx w, const std::vector<Vertex>& vs) {
    double d = INFINITY;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        cplx a = vs[i].w, b = vs[(i + 1) % vs.size()].w;
        double t = std::clamp(((w - a) * std::conj(b - a)).real() / std::norm(b - a), 0.0, 1.0);
        d = std::min(d, std::abs(w - (a + t * (b - a))));
    }
    return d;
}

}  // namespace

TEST_CASE("compute_c") {
    RectSlitSolution s = base();
    const PeriodLattice L = s.state.lattice();
    // stored in [0, 2 pi): x2 = {pi, 0}
    CHECK(std::abs(compute_c(s.state, s.spec) - (-0.5 * L.eta1() + L.eta2())) < 1e-13);
    // c depends on the representatives: shifting a vertex by -2 pi moves it by
    // -(alpha - 1) eta1
    AccessoryState sym = s.state;
    for (double& x : sym.x1)
        if (x > kPi) x -= kOmega1;
    CHECK(std::abs(compute_c(sym, s.spec) - (0.5 * L.eta1() + L.eta2())) < 1e-13);
    sym.x2[0] = -kPi;
    CHECK(std::abs(compute_c(sym, s.spec) - (-0.5 * L.eta1() + L.eta2())) < 1e-13);

    DomainSpec flat = s.spec;
    for (auto& v : flat.outer) v.alpha = 1.0;
    for (auto& v : flat.inner) v.alpha = 1.0;
    CHECK(std::abs(compute_c(s.state, flat) - L.eta2()) < 1e-15);
}

TEST_CASE("integrand is 2 pi periodic") {
    std::mt19937 gen(3);
    for (auto [a1, a2] : {std::pair{-0.5, 0.5}, {-0.1, 0.5}, {0.1, 0.9}}) {
        RectSlitSolution s = base(a1, a2);
        ScMap m(s.spec, s.state);
        std::uniform_real_distribution<double> ux(0.0, kOmega1), uy(0.05, 0.5 * s.state.height - 0.05);
        for (int i = 0; i < 20; ++i) {
            cplx xi(ux(gen), uy(gen));
            cplx f0 = std::exp(m.log_integrand(xi)), f1 = std::exp(m.log_integrand(xi + kOmega1));
            CHECK(rel(f1, f0) < 1e-10);
        }
    }
}

TEST_CASE("local power law at a right-angle corner") {
    RectSlitSolution s = base();
    ScMap m(s.spec, s.state);
    const double x = s.state.x1[0];
    std::vector<double> lim;
    for (double d : {1e-2, 1e-3, 1e-4, 1e-5}) lim.push_back(std::abs(std::exp(m.log_integrand(cplx(x, d)))) * std::sqrt(d));
    CHECK(lim.back() > 0.0);
    CHECK(std::isfinite(lim.back()));
    CHECK(std::abs(lim[2] / lim[1] - 1.0) < std::abs(lim[1] / lim[0] - 1.0));
    CHECK(std::abs(lim[3] / lim[2] - 1.0) < 1e-3);
}

TEST_CASE("sigma and theta forms differ by a constant factor") {
    RectSlitSolution s = base(-0.1, 0.5);
    ScMap m(s.spec, s.state);
    const PeriodLattice& L = m.lattice();
    const cplx lin = -L.eta1() * L.omega2() / kOmega1 + L.eta2();
    auto theta_form = [&](cplx xi) {
        cplx f = std::exp(lin * xi);
        for (const Prevertex& p : m.prevertices()) f *= std::pow(theta1(0.5 * (xi - p.z), L.nome(), 0), p.beta);
        return f;
    };
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> ux(0.0, kOmega1), uy(0.1, 0.5 * s.state.height - 0.1);
    // exact exponents are +-1/2, +1: compare squares so the principal branch
    // of pow does not matter
    cplx ratio0 = 0.0;
    for (int i = 0; i < 20; ++i) {
        cplx xi(ux(gen), uy(gen));
        cplx r = std::exp(2.0 * m.log_integrand(xi)) / (theta_form(xi) * theta_form(xi));
        if (i == 0)
            ratio0 = r;
        else
            CHECK(rel(r, ratio0) < 1e-10);
    }
}

TEST_CASE("map values") {
    RectSlitSolution s = base();
    ScMap m(s.spec, s.state);
    CHECK(std::abs(m.eval(0.0) - s.state.C2) < 1e-14);
    // inner vertex 1 is the slit end 0.5
    CHECK(std::abs(m.eval_at(Side::inner, 1) - cplx(0.5, 0.0)) < 1e-6);
    CHECK(std::abs(m.eval_at(Side::inner, 0) - cplx(-0.5, 0.0)) < 1e-6);

    // additivity along a straight path inside the strip
    cplx z(1.3, 0.4);
    cplx whole = m.raw_integral(z);
    cplx half = m.raw_integral(0.5 * z);
    PathPoint a{0.5 * z}, b{z};
    cplx rest = m.raw_segment(a, b);
    CHECK(std::abs(whole - (half + rest)) < 1e-12 * std::abs(whole));

    // homotopic paths: the default dog-leg versus a straight segment from 0
    PathPoint o{0.0};
    CHECK(std::abs(m.raw_segment(o, b) - whole) < 1e-11 * std::abs(whole));
}

TEST_CASE("halving the quadrature tolerance moves the map within its error estimate") {
    RectSlitSolution s = base(-0.1, 0.5);
    ScMap coarse(s.spec, s.state);
    QuadOptions fine;
    fine.rel_tol = 1e-14;
    ScMap tight(s.spec, s.state, fine);
    for (cplx z : {cplx(0.7, 0.3), cplx(2.5, 1.0), cplx(5.0, 0.1)}) {
        cplx a = coarse.eval(z);
        double est = coarse.last_error();
        cplx b = tight.eval(z);
        CHECK(std::abs(a - b) <= 10.0 * est + 1e-14);
    }
}

TEST_CASE("second derivative at a tip") {
    RectSlitSolution s = base();
    ScMap m(s.spec, s.state);
    const double h2 = 0.5 * s.state.height;
    for (int tip : {0, 1}) {
        const cplx z(s.state.x2[tip], h2);
        const double h = 1e-4;
        cplx fd = (m.derivative(z + h) - m.derivative(z - h)) / (2 * h);
        CHECK(rel(fd, m.second_derivative_at_tip(Side::inner, tip)) < 1e-5);
    }
    CHECK(std::abs(std::abs(m.second_derivative_at_tip(Side::inner, 0)) /
                       std::abs(m.second_derivative_at_tip(Side::inner, 1)) -
                   1.0) < 1e-9);

    AccessoryState twice = s.state;
    twice.C1 *= 2.0;
    ScMap m2(s.spec, twice);
    CHECK(m2.second_derivative_at_tip(Side::inner, 1) == 2.0 * m.second_derivative_at_tip(Side::inner, 1));
}

TEST_CASE("residuals") {
    RectSlitSolution s = base();
    ResidualReport r0 = ScMap(s.spec, s.state).vertex_residuals();
    CHECK(r0.max_side_error < 1e-6);
    CHECK(r0.max_vertex_error < 1e-10);

    // translating targets and C2 together changes nothing
    const cplx shift(0.3, -1.7);
    DomainSpec moved = s.spec;
    for (auto& v : moved.outer) v.w += shift;
    for (auto& v : moved.inner) v.w += shift;
    AccessoryState st = s.state;
    st.C2 += shift;
    ResidualReport r1 = ScMap(moved, st).vertex_residuals();
    CHECK(std::abs(r1.max_vertex_error - r0.max_vertex_error) < 1e-14);

    // a perturbed prevertex shows up on its sides
    AccessoryState bad = s.state;
    bad.x1[2] += 1e-3;
    ResidualReport r2 = ScMap(s.spec, bad).vertex_residuals();
    double adjacent = 0.0;
    for (const auto& e : r2.sides)
        if (e.side == Side::outer && (e.from == 1 || e.from == 2)) adjacent = std::max(adjacent, e.error);
    double adjacent0 = 0.0;
    for (const auto& e : r0.sides)
        if (e.side == Side::outer && (e.from == 1 || e.from == 2)) adjacent0 = std::max(adjacent0, e.error);
    CHECK(adjacent >= adjacent0);
    CHECK(adjacent > 1e-5);
}

TEST_CASE("boundary lines land on the polygons") {
    RectSlitSolution s = base(-0.1, 0.5);
    ScMap m(s.spec, s.state);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> ux(0.0, kOmega1);
    const double diam = 2.0 * std::sqrt(1.0 + 0.25);
    for (int i = 0; i < 50; ++i) {
        cplx w1 = m.eval(cplx(ux(gen), 0.0));
        CHECK(polygon_distance(w1, s.spec.outer) <= 1e-5 * diam);
        cplx w2 = m.eval(cplx(ux(gen), 0.5 * s.state.height));
        CHECK(std::abs(w2.imag()) <= 1e-5 * diam);
        CHECK(w2.real() >= -0.1 - 1e-5);
        CHECK(w2.real() <= 0.5 + 1e-5);
    }
    Polyline outer = m.boundary_curve(Side::outer);
    double worst = 0.0;
    for (cplx w : outer.points) worst = std::max(worst, polygon_distance(w, s.spec.outer));
    CHECK(worst < 1e-4);
}

TEST_CASE("grid image") {
    RectSlitSolution s = base();
    ScMap m(s.spec, s.state);
    CHECK(m.grid_image(1, 1).size() == 2);
    auto g = m.grid_image(3, 8);
    CHECK(g.size() == 11);
    CHECK_THROWS_AS(m.grid_image(0, 3), ValidationError);

    // mirror symmetry of the symmetric slit: reflection x -> 2 x0 - x in the strip
    const double x0 = s.state.x2[1];
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> ux(0.0, kOmega1), uy(0.0, 0.5 * s.state.height);
    for (int i = 0; i < 10; ++i) {
        const double x = ux(gen), y = uy(gen);
        CHECK(std::abs(m.eval(cplx(2 * x0 - x, y)) - std::conj(m.eval(cplx(x, y)))) < 1e-8);
    }
}

TEST_CASE("frame constants reproduce the first two vertices") {
    RectSlitSolution s = base(-0.1, 0.5);
    AccessoryState st = s.state;
    st.C1 = 1.0;
    st.C2 = 0.0;
    auto [C1, C2] = ScMap::frame_constants(s.spec, st);
    CHECK(rel(C1, s.state.C1) < 1e-13);
    st.C1 = C1;
    st.C2 = C2;
    ScMap m(s.spec, st);
    CHECK(std::abs(m.eval_at(Side::outer, 0) - s.spec.outer[0].w) < 1e-13);
    CHECK(std::abs(m.eval_at(Side::outer, 1) - s.spec.outer[1].w) < 1e-13);
}

TEST_CASE("validation") {
    RectSlitSolution s = base();
    DomainSpec bad = s.spec;
    bad.outer[0].alpha = 0.6;
    try {
        bad.validate();
        FAIL("expected an angle-sum error");
    } catch (const ValidationError& e) {
        CHECK(e.path() == "outer");
    }
    AccessoryState st = s.state;
    st.x2.pop_back();
    CHECK_THROWS_AS(ScMap(s.spec, st), ValidationError);
    ScMap m(s.spec, s.state);
    CHECK_THROWS_AS(m.log_integrand(cplx(s.state.x1[0], 0.0)), PoleError);
}
