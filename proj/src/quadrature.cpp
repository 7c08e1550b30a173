#include "ringmap/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <vector>

#include "ringmap/errors.hpp"

namespace ringmap {

namespace {

using cplx = std::complex<double>;
using Rule = boost::math::quadrature::gauss<double, 32>;

cplx gl32(const std::function<cplx(double)>& f, double a, double b, double* l1 = nullptr) {
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    cplx s = 0.0;
    double m = 0.0;
    // 32 points: abscissae are the positive half, none at the centre
    for (std::size_t i = 0; i < x.size(); ++i) {
        const cplx lo = f(c - h * x[i]), hi = f(c + h * x[i]);
        s += w[i] * (lo + hi);
        m += w[i] * (std::abs(lo) + std::abs(hi));
    }
    if (l1) *l1 = h * m;
    return h * s;
}

struct Panel {
    double a, b;
    cplx whole;
    int depth;
};

}  // namespace

QuadResult integrate_unit(const std::function<cplx(double)>& f, const QuadOptions& opt) {
    QuadResult res{0.0, 0.0, 0};
    // start from a few panels so a narrow feature is not missed by luck
    std::vector<Panel> stack;
    const int n0 = 1;
    for (int i = n0 - 1; i >= 0; --i) {
        double a = double(i) / n0, b = double(i + 1) / n0;
        stack.push_back({a, b, gl32(f, a, b), 0});
    }
    cplx scale_est = 0.0;
    for (const auto& p : stack) scale_est += p.whole;
    double scale = std::abs(scale_est);

    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        double m = 0.5 * (p.a + p.b);
        double l1l = 0.0, l1r = 0.0;
        cplx left = gl32(f, p.a, m, &l1l);
        cplx right = gl32(f, m, p.b, &l1r);
        cplx both = left + right;
        double err = std::abs(both - p.whole);
        double width = p.b - p.a;
        double allowed = std::max(opt.rel_tol * scale, opt.abs_tol) * std::max(width, 1e-3);
        // the integrand itself carries round-off of about 1e-14 relative
        if (err <= allowed || err <= 1e-13 * (l1l + l1r)) {
            res.value += both;
            res.error += err;
            res.panels += 2;
            continue;
        }
        if (p.depth >= opt.max_depth || res.panels > opt.max_panels) {
            throw AccuracyError("quadrature did not converge", err);
        }
        scale = std::max(scale, std::abs(both));
        stack.push_back({m, p.b, right, p.depth + 1});
        stack.push_back({p.a, m, left, p.depth + 1});
    }
    return res;
}

}  // namespace ringmap
