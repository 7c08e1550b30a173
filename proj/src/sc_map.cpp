#include "ringmap/sc_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ringmap/errors.hpp"

namespace ringmap {

namespace {

constexpr double kMatch = 1e-14;

SigmaBranch branch_of(Side s) { return s == Side::outer ? SigmaBranch::upper : SigmaBranch::lower; }

bool is_nonneg_integer(double b) { return b >= 0.0 && std::abs(b - std::round(b)) < 1e-14; }

std::string side_name(Side s) { return s == Side::outer ? "outer" : "inner"; }

}  // namespace

void DomainSpec::validate() const {
    if (outer.size() < 3) throw ValidationError("outer", "need at least three outer vertices");
    if (inner.size() < 2) throw ValidationError("inner", "need at least two inner vertices");
    double s1 = 0.0, s2 = 0.0;
    for (const auto& v : outer) s1 += v.alpha;
    for (const auto& v : inner) s2 += v.alpha;
    const double n1 = double(outer.size()), n2 = double(inner.size());
    if (std::abs(s1 - (n1 - 2.0)) > 1e-10)
        throw ValidationError("outer", "angle exponents must sum to n1 - 2, got " + std::to_string(s1));
    if (std::abs(s2 - (n2 + 2.0)) > 1e-10)
        throw ValidationError("inner", "angle exponents must sum to n2 + 2, got " + std::to_string(s2));
    for (std::size_t i = 0; i < outer.size(); ++i) {
        if (!(outer[i].alpha > 0.0 && outer[i].alpha <= 2.0))
            throw ValidationError("outer[" + std::to_string(i) + "].alpha", "must lie in (0, 2]");
    }
    for (std::size_t i = 0; i < inner.size(); ++i) {
        if (!(inner[i].alpha > 0.0 && inner[i].alpha <= 2.0))
            throw ValidationError("inner[" + std::to_string(i) + "].alpha", "must lie in (0, 2]");
    }
}

cplx compute_c(const AccessoryState& st, const DomainSpec& spec) {
    PeriodLattice L(st.height);
    double s = 0.0;
    for (std::size_t i = 0; i < st.x1.size(); ++i) s += (spec.outer[i].alpha - 1.0) * st.x1[i];
    for (std::size_t i = 0; i < st.x2.size(); ++i) s += (spec.inner[i].alpha - 1.0) * st.x2[i];
    return L.eta1() * s / kOmega1 + L.eta2();
}

ScMap::ScMap(DomainSpec spec, AccessoryState state, QuadOptions quad)
    : spec_(std::move(spec)), state_(std::move(state)), quad_(quad), lattice_(state_.height) {
    if (state_.x1.size() != spec_.outer.size())
        throw ValidationError("x1", "prevertex count does not match the outer polygon");
    if (state_.x2.size() != spec_.inner.size())
        throw ValidationError("x2", "prevertex count does not match the inner polygon");
    c_ = compute_c(state_, spec_);
    const double half = 0.5 * state_.height;
    for (std::size_t i = 0; i < state_.x1.size(); ++i)
        pv_.push_back({Side::outer, int(i), cplx(state_.x1[i], 0.0), spec_.outer[i].alpha - 1.0});
    for (std::size_t i = 0; i < state_.x2.size(); ++i)
        pv_.push_back({Side::inner, int(i), cplx(state_.x2[i], half), spec_.inner[i].alpha - 1.0});
}

int ScMap::global_index(Side side, int index) const {
    return side == Side::outer ? index : int(state_.x1.size()) + index;
}

cplx ScMap::factor(int v, cplx u) const {
    const Prevertex& p = pv_[v];
    if (p.beta == 0.0) return 0.0;
    return p.beta * log_sigma(u, lattice_, branch_of(p.side));
}

cplx ScMap::log_integrand(cplx xi) const {
    cplx s = c_ * xi;
    for (int v = 0; v < int(pv_.size()); ++v) {
        cplx u = xi - pv_[v].z;
        if (std::abs(u) < kMatch) throw PoleError("integrand evaluated at a prevertex");
        s += factor(v, u);
    }
    return s;
}

cplx ScMap::log_integrand(const PathPoint& p) const {
    if (p.anchor < 0) return log_integrand(p.xi);
    const Prevertex& a = pv_[p.anchor];
    const double shift = kOmega1 * double(p.shift);
    cplx s = c_ * p.xi;
    for (int v = 0; v < int(pv_.size()); ++v) {
        if (v == p.anchor) {
            if (a.beta != 0.0)
                s += a.beta * log_sigma_shifted(p.offset, p.shift, lattice_, branch_of(a.side));
            continue;
        }
        if (pv_[v].beta == 0.0) continue;
        // take out the period u sits next to before adding small numbers, so a
        // prevertex just across the 2 pi wrap keeps its relative distance
        const cplx d = a.z - pv_[v].z;
        const long m = std::lround((d.real() + shift + p.offset.real()) / kOmega1);
        const cplx u0 = (d + kOmega1 * double(p.shift - m)) + p.offset;
        if (std::abs(u0) < kMatch * 1e-2) throw PoleError("integrand evaluated at a prevertex");
        s += pv_[v].beta * log_sigma_shifted(u0, m, lattice_, branch_of(pv_[v].side));
    }
    return s;
}

cplx ScMap::log_integrand_without(cplx xi, int skip) const {
    cplx s = c_ * xi;
    for (int v = 0; v < int(pv_.size()); ++v) {
        if (v == skip) continue;
        cplx u = xi - pv_[v].z;
        if (v != skip && std::abs(u) < 1e-15)
            throw DegeneracyError("tip coincides with prevertex " + std::to_string(v));
        s += factor(v, u);
    }
    return s;
}

cplx ScMap::derivative(cplx z) const { return state_.C1 * std::exp(log_integrand(z)); }

cplx ScMap::second_derivative_at_tip(Side side, int index) const {
    int g = global_index(side, index);
    if (std::abs(pv_[g].beta - 1.0) > 1e-12)
        throw DomainError(side_name(side) + " prevertex " + std::to_string(index) + " is not a tip");
    const Prevertex& t = pv_[g];
    cplx s = c_ * t.z;
    for (int v = 0; v < int(pv_.size()); ++v) {
        if (v == g) continue;
        cplx u = t.z - pv_[v].z;
        if (pv_[v].side == t.side) u = cplx(u.real(), 0.0);
        if (std::abs(u) < 1e-15)
            throw DegeneracyError("tip coincides with prevertex " + std::to_string(v));
        s += factor(v, u);
    }
    return state_.C1 * std::exp(s);
}

PathPoint ScMap::anchored(int v, long shift) const {
    PathPoint p;
    p.anchor = v;
    p.shift = shift;
    p.xi = pv_[v].z + kOmega1 * double(shift);
    return p;
}

cplx ScMap::raw_segment(const PathPoint& a, const PathPoint& b) const {
    const cplx d = b.xi - a.xi;
    if (std::abs(d) == 0.0) return 0.0;

    auto plain = [&](cplx p0, cplx p1) -> cplx {
        cplx dd = p1 - p0;
        QuadResult r = integrate_unit(
            [&](double s) { return std::exp(log_integrand(p0 + dd * s)) * dd; }, quad_);
        last_error_ += r.error;
        return r.value;
    };
    // half-segment starting at an anchored end e and ending at m
    auto from_anchor = [&](const PathPoint& e, cplx m) -> cplx {
        const cplx dd = m - e.xi;
        const double beta = pv_[e.anchor].beta;
        const double p = is_nonneg_integer(beta) ? 1.0 : 1.0 / (beta + 1.0);
        QuadResult r = integrate_unit(
            [&](double s) {
                PathPoint q = e;
                double sp = std::pow(s, p);
                q.offset = dd * sp;
                q.xi = e.xi + q.offset;
                cplx L = log_integrand(q) + (p - 1.0) * std::log(s);
                return std::exp(L) * dd * p;
            },
            quad_);
        last_error_ += r.error;
        return r.value;
    };

    if (a.anchor < 0 && b.anchor < 0) return plain(a.xi, b.xi);
    const cplx m = a.xi + 0.5 * d;
    cplx first = a.anchor >= 0 ? from_anchor(a, m) : plain(a.xi, m);
    cplx second = b.anchor >= 0 ? -from_anchor(b, m) : plain(m, b.xi);
    return first + second;
}

cplx ScMap::integrate_path(const std::vector<PathPoint>& nodes) const {
    cplx s = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) s += raw_segment(nodes[i], nodes[i + 1]);
    return s;
}

PathPoint ScMap::snap(cplx z) const {
    for (int v = 0; v < int(pv_.size()); ++v) {
        cplx d = z - pv_[v].z;
        long k = std::lround(d.real() / kOmega1);
        if (std::abs(d - kOmega1 * double(k)) < kMatch * std::max(1.0, std::abs(z))) {
            return anchored(v, k);
        }
    }
    return free_point(z);
}

PathPoint ScMap::free_point(cplx z) {
    PathPoint p;
    p.xi = z;
    return p;
}

cplx ScMap::path_to(const PathPoint& end) const {
    last_error_ = 0.0;
    const double mid = 0.25 * state_.height;
    PathPoint start = snap(0.0);
    if (start.anchor >= 0 && start.anchor == end.anchor && start.shift == end.shift) return 0.0;
    std::vector<PathPoint> nodes{start, free_point(cplx(0.0, mid)),
                                 free_point(cplx(end.xi.real(), mid)), end};
    return integrate_path(nodes);
}

cplx ScMap::raw_integral(cplx z) const { return path_to(snap(z)); }

cplx ScMap::raw_integral_to(Side side, int index) const {
    return path_to(anchored(global_index(side, index)));
}

std::vector<long> ScMap::line_shifts(Side side) const {
    const int n = side == Side::outer ? int(state_.x1.size()) : int(state_.x2.size());
    std::vector<long> k(n, 0);
    double prev = n ? pv_[global_index(side, 0)].z.real() : 0.0;
    for (int i = 1; i < n; ++i) {
        double x = pv_[global_index(side, i)].z.real();
        k[i] = static_cast<long>(std::floor((prev - x) / kOmega1)) + 1;
        prev = x + kOmega1 * double(k[i]);
    }
    return k;
}

std::vector<cplx> ScMap::boundary_images(Side side) const {
    const int n = side == Side::outer ? int(state_.x1.size()) : int(state_.x2.size());
    std::vector<cplx> out(n);
    if (n == 0) return out;
    std::vector<long> k = line_shifts(side);
    cplx acc = raw_integral_to(side, 0);
    out[0] = state_.C1 * acc + state_.C2;
    for (int i = 1; i < n; ++i) {
        acc += raw_segment(anchored(global_index(side, i - 1), k[i - 1]),
                           anchored(global_index(side, i), k[i]));
        out[i] = state_.C1 * acc + state_.C2;
    }
    return out;
}

ResidualReport ScMap::vertex_residuals() const {
    ResidualReport rep;
    for (Side side : {Side::outer, Side::inner}) {
        const auto& verts = side == Side::outer ? spec_.outer : spec_.inner;
        std::vector<cplx> img = boundary_images(side);
        const int n = int(verts.size());
        for (int i = 0; i < n; ++i) {
            double e = std::abs(img[i] - verts[i].w);
            rep.vertices.push_back({side, i, img[i], verts[i].w, e});
            rep.max_vertex_error = std::max(rep.max_vertex_error, e);
        }
        for (int i = 0; i < n; ++i) {
            int j = (i + 1) % n;
            double len = std::abs(img[j] - img[i]);
            double tgt = std::abs(verts[j].w - verts[i].w);
            double e = std::abs(len - tgt);
            rep.sides.push_back({side, i, len, tgt, e});
            rep.max_side_error = std::max(rep.max_side_error, e);
        }
    }
    return rep;
}

std::pair<cplx, cplx> ScMap::frame_constants(const DomainSpec& spec, const AccessoryState& state,
                                             QuadOptions quad) {
    AccessoryState raw = state;
    raw.C1 = 1.0;
    raw.C2 = 0.0;
    ScMap m(spec, raw, quad);
    std::vector<cplx> I = m.boundary_images(Side::outer);
    const cplx wa = spec.outer[0].w, wb = spec.outer[1].w;
    cplx C1 = (wb - wa) / (I[1] - I[0]);
    cplx C2 = wa - C1 * I[0];
    return {C1, C2};
}

double ScMap::diameter() const {
    double d = 0.0;
    for (const auto& a : spec_.outer)
        for (const auto& b : spec_.outer) d = std::max(d, std::abs(a.w - b.w));
    return d;
}

std::vector<cplx> ScMap::sample_segment(const PathPoint& a, const PathPoint& b, cplx fa,
                                        double step) const {
    // images of points strictly after a up to and including b
    std::vector<cplx> out;
    struct Item {
        PathPoint a, b;
        cplx fa, fb;
        int depth;
    };
    std::vector<Item> stack{{a, b, fa, fa + state_.C1 * raw_segment(a, b), 0}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        if (std::abs(it.fb - it.fa) > step && it.depth < 24) {
            PathPoint m = free_point(0.5 * (it.a.xi + it.b.xi));
            cplx fm = it.fa + state_.C1 * raw_segment(it.a, m);
            stack.push_back({m, it.b, fm, it.fb, it.depth + 1});
            stack.push_back({it.a, m, it.fa, fm, it.depth + 1});
            continue;
        }
        out.push_back(it.fb);
    }
    return out;
}

std::vector<Polyline> ScMap::grid_image(int n_radii, int n_rays, double max_step) const {
    if (n_radii < 1 || n_rays < 1) throw ValidationError("grid", "n_radii and n_rays must be >= 1");
    const double step = max_step * diameter();
    const double h2 = 0.5 * state_.height;
    std::vector<Polyline> out;
    const int pieces = 64;
    for (int j = 1; j <= n_radii; ++j) {
        double y = h2 * double(j) / double(n_radii + 1);
        Polyline pl{"circle", std::exp(-y), {}};
        cplx f = eval(cplx(0.0, y));
        pl.points.push_back(f);
        for (int k = 0; k < pieces; ++k) {
            PathPoint a = free_point(cplx(kOmega1 * k / pieces, y));
            PathPoint b = free_point(cplx(kOmega1 * (k + 1) / pieces, y));
            auto seg = sample_segment(a, b, f, step);
            pl.points.insert(pl.points.end(), seg.begin(), seg.end());
            f = pl.points.back();
        }
        out.push_back(std::move(pl));
    }
    for (int k = 0; k < n_rays; ++k) {
        double th = kOmega1 * double(k) / double(n_rays);
        Polyline pl{"ray", th, {}};
        const int n = 16;
        PathPoint a = snap(cplx(th, 0.0));
        cplx f = state_.C1 * path_to(a) + state_.C2;
        pl.points.push_back(f);
        for (int i = 0; i < n; ++i) {
            PathPoint b = i + 1 == n ? snap(cplx(th, h2)) : free_point(cplx(th, h2 * (i + 1) / n));
            auto seg = sample_segment(a, b, f, step);
            pl.points.insert(pl.points.end(), seg.begin(), seg.end());
            f = pl.points.back();
            a = b;
        }
        out.push_back(std::move(pl));
    }
    return out;
}

Polyline ScMap::boundary_curve(Side side, double max_step) const {
    const double step = max_step * diameter();
    const int n = side == Side::outer ? int(state_.x1.size()) : int(state_.x2.size());
    Polyline pl{side == Side::outer ? "outer" : "inner",
                side == Side::outer ? 1.0 : std::exp(-0.5 * state_.height), {}};
    std::vector<long> k = line_shifts(side);
    const int g0 = global_index(side, 0);
    cplx f = eval_at(side, 0);
    pl.points.push_back(f);
    for (int i = 1; i <= n; ++i) {
        PathPoint a = anchored(global_index(side, i - 1), k[i - 1]);
        PathPoint b = i < n ? anchored(global_index(side, i), k[i]) : anchored(g0, 1);
        // a few pieces per side so the refinement starts from a sane grid
        const int pieces = 8;
        PathPoint prev = a;
        for (int j = 1; j <= pieces; ++j) {
            PathPoint next = j == pieces ? b : free_point(a.xi + (b.xi - a.xi) * (double(j) / pieces));
            auto seg = sample_segment(prev, next, f, step);
            pl.points.insert(pl.points.end(), seg.begin(), seg.end());
            f = pl.points.back();
            prev = next;
        }
    }
    return pl;
}

}  // namespace ringmap
