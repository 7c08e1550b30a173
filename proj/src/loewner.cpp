#include "ringmap/loewner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "ringmap/errors.hpp"

namespace ringmap {

namespace {

std::vector<Vertex>& side_of(DomainSpec& s, Side side) { return side == Side::outer ? s.outer : s.inner; }
const std::vector<Vertex>& side_of(const DomainSpec& s, Side side) {
    return side == Side::outer ? s.outer : s.inner;
}
std::vector<double>& xs_of(AccessoryState& s, Side side) { return side == Side::outer ? s.x1 : s.x2; }

std::string side_name(Side s) { return s == Side::outer ? "outer" : "inner"; }

std::string sci(double v, const char* fmt = "%.3e") {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

// counter-clockwise angle from a to b in (0, 2 pi]
double sweep(cplx a, cplx b) {
    double t = std::arg(b / a);
    if (t <= 1e-14) t += 2.0 * kPi;
    return t;
}

double wrap_gap(double d) { return d - kOmega1 * std::floor(d / kOmega1); }

struct Branched {
    DomainSpec spec;
    std::vector<MovingTip> tips;
    // for every new prevertex: the original index and the seed offset (-1, 0, +1)
    std::vector<std::pair<int, int>> origin_outer, origin_inner;
};

Branched branch_spec(const DomainSpec& spec, const std::vector<StageTip>& req) {
    Branched b;
    b.spec = spec;
    for (Side side : {Side::outer, Side::inner}) {
        auto& origin = side == Side::outer ? b.origin_outer : b.origin_inner;
        const auto& vs = side_of(spec, side);
        for (int i = 0; i < int(vs.size()); ++i) origin.push_back({i, 0});
    }

    // validate and collect per side, then insert from the back so indices hold
    struct Item {
        int req;
        double phi1, phi2;
    };
    std::vector<Item> items;
    for (int r = 0; r < int(req.size()); ++r) {
        const StageTip& t = req[r];
        const std::string path = "tips[" + std::to_string(r) + "]";
        const auto& vs = side_of(spec, t.side);
        const int n = int(vs.size());
        if (t.vertex < 0 || t.vertex >= n) throw ValidationError(path + ".vertex", "index out of range");
        for (int q = 0; q < r; ++q)
            if (req[q].side == t.side && req[q].vertex == t.vertex)
                throw ValidationError(path + ".vertex", "vertex already carries a tip");
        const Vertex& base = vs[t.vertex];
        const cplx d = t.end - base.w;
        const cplx P = vs[(t.vertex + n - 1) % n].w - base.w;
        const cplx N = vs[(t.vertex + 1) % n].w - base.w;
        if (!t.branch) {
            if (std::abs(base.alpha - 2.0) > 1e-12)
                throw ValidationError(path, "a moving vertex must be a slit end (alpha = 2)");
            if (std::abs(d) > 0.0) {
                // the slit is straight at its end: P and N point back along it
                const cplx back = P / std::abs(P);
                if (std::abs((d / std::abs(d) * std::conj(back)).imag()) > 1e-9)
                    throw ValidationError(path + ".end", "tip must move along its own slit");
            }
            items.push_back({r, 0.0, 0.0});
            continue;
        }
        if (std::abs(d) == 0.0) throw ValidationError(path + ".end", "new slit has zero length");
        double phi1, phi2;
        if (t.side == Side::outer) {
            phi1 = sweep(d, P) / kPi;
            phi2 = sweep(N, d) / kPi;
        } else {
            phi1 = sweep(P, d) / kPi;
            phi2 = sweep(d, N) / kPi;
        }
        if (std::abs(phi1 + phi2 - base.alpha) > 1e-9)
            throw ValidationError(path, "slit direction leaves the domain at this vertex");
        if (t.phi1 && std::abs(*t.phi1 - phi1) > 1e-9)
            throw ValidationError(path + ".phi1", "does not match the slit direction (" + std::to_string(phi1) + ")");
        if (t.phi2 && std::abs(*t.phi2 - phi2) > 1e-9)
            throw ValidationError(path + ".phi2", "does not match the slit direction (" + std::to_string(phi2) + ")");
        if (t.phi1 && t.phi2 && std::abs(*t.phi1 + *t.phi2 - base.alpha) > 1e-12)
            throw ValidationError(path, "phi1 + phi2 must equal the vertex exponent");
        if (!(phi1 > 0.0 && phi2 > 0.0 && phi1 <= 2.0 && phi2 <= 2.0))
            throw ValidationError(path, "slit runs along the boundary");
        items.push_back({r, phi1, phi2});
    }

    std::sort(items.begin(), items.end(), [&](const Item& a, const Item& c) {
        if (req[a.req].side != req[c.req].side) return req[a.req].side < req[c.req].side;
        return req[a.req].vertex > req[c.req].vertex;
    });
    for (const Item& it : items) {
        const StageTip& t = req[it.req];
        if (!t.branch) continue;
        auto& vs = side_of(b.spec, t.side);
        auto& origin = t.side == Side::outer ? b.origin_outer : b.origin_inner;
        const cplx w = vs[t.vertex].w;
        vs[t.vertex] = {w, it.phi1};
        vs.insert(vs.begin() + t.vertex + 1, {{w, 2.0}, {w, it.phi2}});
        origin[t.vertex] = {t.vertex, -1};
        origin.insert(origin.begin() + t.vertex + 1, {{t.vertex, 0}, {t.vertex, 1}});
    }

    // final indices of the tips
    for (int r = 0; r < int(req.size()); ++r) {
        const StageTip& t = req[r];
        const auto& origin = t.side == Side::outer ? b.origin_outer : b.origin_inner;
        MovingTip m{t.side, -1, side_of(spec, t.side)[t.vertex].w, t.end, {}};
        for (int i = 0; i < int(origin.size()); ++i) {
            if (origin[i].first != t.vertex) continue;
            if (origin[i].second == 0)
                m.index = i;
            else
                m.own.push_back(i);
        }
        b.tips.push_back(m);
    }
    return b;
}

}  // namespace

cplx villat_kernel(cplx z, cplx z0, const PeriodLattice& lat) {
    return weierstrass_zeta(z - z0, lat) - lat.eta1() * z / kOmega1 + weierstrass_zeta(z0, lat);
}

PreparedStage plan_stage(const DomainSpec& spec, const std::vector<StageTip>& tips) {
    Branched b = branch_spec(spec, tips);
    b.spec.validate();
    return {b.spec, {}, b.tips};
}

PreparedStage prepare_stage(const DomainSpec& spec, const AccessoryState& state,
                            const std::vector<StageTip>& tips, double seed) {
    if (state.x1.size() != spec.outer.size() || state.x2.size() != spec.inner.size())
        throw ValidationError("state", "prevertex count does not match the domain");
    Branched b = branch_spec(spec, tips);
    b.spec.validate();
    AccessoryState s = state;
    for (Side side : {Side::outer, Side::inner}) {
        const auto& origin = side == Side::outer ? b.origin_outer : b.origin_inner;
        const auto& old = side == Side::outer ? state.x1 : state.x2;
        auto& xs = xs_of(s, side);
        xs.clear();
        for (auto [i, off] : origin) xs.push_back(old[i] + seed * off);
    }
    return {b.spec, s, b.tips};
}

LoewnerSystem::LoewnerSystem(DomainSpec spec, std::vector<MovingTip> tips, TipFormula formula)
    : spec_(std::move(spec)), tips_(std::move(tips)), formula_(formula) {
    for (const auto& t : tips_) {
        const auto& vs = side_of(spec_, t.side);
        if (t.index < 0 || t.index >= int(vs.size()) || std::abs(vs[t.index].alpha - 2.0) > 1e-12)
            throw ValidationError("tips", "tip does not refer to a vertex with alpha = 2");
    }
}

std::vector<double> LoewnerSystem::pack(const AccessoryState& s) const {
    std::vector<double> y(s.x1);
    y.insert(y.end(), s.x2.begin(), s.x2.end());
    y.push_back(s.height);
    y.push_back(s.C1.real());
    y.push_back(s.C1.imag());
    return y;
}

AccessoryState LoewnerSystem::unpack(const std::vector<double>& y, cplx C2) const {
    const std::size_t n1 = spec_.outer.size(), n2 = spec_.inner.size();
    AccessoryState s;
    s.x1.assign(y.begin(), y.begin() + n1);
    s.x2.assign(y.begin() + n1, y.begin() + n1 + n2);
    s.height = y[n1 + n2];
    s.C1 = {y[n1 + n2 + 1], y[n1 + n2 + 2]};
    s.C2 = C2;
    return s;
}

cplx LoewnerSystem::tip_coefficient(const MovingTip& tip, const ScMap& map) {
    const cplx v = tip.velocity();
    if (v == 0.0) return 0.0;
    const cplx f2 = map.second_derivative_at_tip(tip.side, tip.index);
    if (!(std::abs(f2) >= 1e-14)) throw DegeneracyError("second derivative vanishes at a moving tip");
    return v / f2;
}

cplx LoewnerSystem::loewner_field(const AccessoryState& s, cplx z) const {
    ScMap map(spec_, s);
    cplx H = 0.0;
    for (const auto& t : tips_) {
        const cplx L = tip_coefficient(t, map);
        H += L * villat_kernel(z, map.prevertices()[map.global_index(t.side, t.index)].z, map.lattice());
    }
    return H;
}

LoewnerSystem::Rhs LoewnerSystem::evaluate(const AccessoryState& s) const {
    ScMap map(spec_, s);
    const PeriodLattice& lat = map.lattice();
    const auto& pv = map.prevertices();
    const int n = int(pv.size());
    const double e1w = lat.eta1() / kOmega1;

    Rhs r;
    std::vector<int> tip_of(n, -1);
    std::vector<int> tip_g;
    cplx sumL = 0.0;
    for (int j = 0; j < int(tips_.size()); ++j) {
        const cplx L = tip_coefficient(tips_[j], map);
        r.L.push_back(L);
        sumL += L;
        const int g = map.global_index(tips_[j].side, tips_[j].index);
        tip_of[g] = j;
        tip_g.push_back(g);
    }
    r.omega2_dot = kI * sumL;
    r.modulus_dot = r.omega2_dot / (2.0 * kOmega1 * kI);

    // zeta(z_v) and zeta(z_v - z_j) only ever needed on the difference grid
    std::vector<cplx> zeta_at(n);
    for (int v = 0; v < n; ++v) zeta_at[v] = weierstrass_zeta(pv[v].z, lat);
    auto zdiff = [&](int a, int b) {
        cplx u = pv[a].z - pv[b].z;
        if (pv[a].side == pv[b].side) u = cplx(u.real(), 0.0);
        if (std::abs(u) < 1e-15) throw DegeneracyError("prevertices collide");
        return weierstrass_zeta(u, lat);
    };

    std::vector<cplx> zdot(n, 0.0);
    for (int v = 0; v < n; ++v) {
        cplx d = 0.0;
        for (int j = 0; j < int(tips_.size()); ++j) {
            const int g = tip_g[j];
            if (g == v) continue;
            d -= r.L[j] * (zdiff(v, g) - e1w * pv[v].z + zeta_at[g]);
        }
        if (tip_of[v] >= 0) {
            const int j = tip_of[v];
            const auto& own = tips_[j].own;
            cplx q = map.c();
            for (int u = 0; u < n; ++u) {
                if (u == v || pv[u].beta == 0.0) continue;
                if (formula_ == TipFormula::literal && pv[u].side == tips_[j].side &&
                    std::find(own.begin(), own.end(), pv[u].index) != own.end())
                    continue;
                q += pv[u].beta * zdiff(v, u);
            }
            if (formula_ == TipFormula::derived) q += zeta_at[v] - e1w * pv[v].z;
            d -= r.L[j] * q;
        }
        zdot[v] = d;
    }

    // C1 from F(0, t) = const
    cplx lc = 0.0;
    for (int v = 0; v < n; ++v) {
        if (pv[v].beta == 0.0) continue;
        lc += pv[v].beta * (zeta_at[v] * zdot[v] + r.omega2_dot * dlog_sigma_domega2(pv[v].z, lat));
    }
    for (int j = 0; j < int(tips_.size()); ++j)
        lc += r.L[j] * (weierstrass_p(pv[tip_g[j]].z, lat) + e1w);
    const cplx C1dot = -s.C1 * lc;

    auto real_part = [&](cplx val) {
        r.drift = std::max(r.drift, std::abs(val.imag()) / (1.0 + std::abs(val)));
        return val.real();
    };
    for (int v = 0; v < n; ++v) {
        cplx d = zdot[v];
        if (pv[v].side == Side::inner) d -= 0.5 * r.omega2_dot;
        r.dy.push_back(real_part(d));
    }
    r.dy.push_back(real_part(-kI * r.omega2_dot));
    r.dy.push_back(C1dot.real());
    r.dy.push_back(C1dot.imag());
    return r;
}

double LoewnerSystem::check_order(const std::vector<double>& y) const {
    double gap = std::numeric_limits<double>::infinity();
    std::size_t off = 0;
    for (Side side : {Side::outer, Side::inner}) {
        const std::size_t m = side_of(spec_, side).size();
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = y[off + i], b = y[off + (i + 1) % m];
            const double g = wrap_gap(b - a);
            total += g;
            gap = std::min(gap, g);
        }
        // cyclic order is intact iff the forward gaps add up to one turn
        if (std::abs(total - kOmega1) > 1e-9)
            throw TopologyError(side_name(side) + " prevertices changed their cyclic order");
        off += m;
    }
    return gap;
}

namespace {

// Dormand-Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

using Vec = std::vector<double>;

Vec axpy(const Vec& y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
    Vec out(y);
    for (auto [c, k] : terms) {
        if (c == 0.0) continue;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
    }
    return out;
}

}  // namespace

StageResult integrate_stage(const PreparedStage& stage, const StageOptions& opt, double t0, double t1) {
    LoewnerSystem sys(stage.spec, stage.tips, opt.tip_formula);
    const cplx C2 = stage.state.C2;
    const double t_stop = t1 - opt.end_trim;

    StageResult res;
    res.spec = stage.spec;
    res.tips = stage.tips;
    ContinuationDiagnostics& dg = res.diag;

    Vec y = sys.pack(stage.state);
    dg.min_gap = sys.check_order(y);
    dg.modulus_trace.push_back({t0, y[y.size() - 3] / (2.0 * kOmega1)});

    auto f = [&](const Vec& yy, bool check_drift) {
        auto r = sys.evaluate(sys.unpack(yy, C2));
        if (check_drift) dg.max_drift = std::max(dg.max_drift, r.drift);
        return r;
    };

    const std::size_t n1 = stage.spec.outer.size(), n2 = stage.spec.inner.size();
    // neighbouring pairs whose gap error is controlled relative to the gap
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n1; ++i) pairs.push_back({i, (i + 1) % n1});
    for (std::size_t i = 0; i < n2; ++i) pairs.push_back({n1 + i, n1 + (i + 1) % n2});

    double t = t0;
    if (t_stop > t0) {
        auto r0 = f(y, true);
        Vec k1 = r0.dy;
        if (r0.drift > opt.drift_tol)
            throw DegeneracyError("imaginary drift " + sci(r0.drift) + " at stage start");

        // initial step from the fastest relative gap change
        double h = std::min(opt.edge_step, t_stop - t0);
        for (auto [a, b] : pairs) {
            const double g = wrap_gap(y[b] - y[a]);
            const double rate = std::abs(k1[b] - k1[a]);
            if (rate > 0.0) h = std::min(h, 1e-3 * g / rate);
        }
        h = std::max(h, 1e-300);

        while (t < t_stop) {
            if (dg.accepted + dg.rejected > opt.max_steps)
                throw DegeneracyError("step limit reached at t = " + sci(t, "%.9g"));
            double hmax = t_stop - t;
            if (t - t0 < opt.edge_window || t1 - t < opt.edge_window + opt.end_trim)
                hmax = std::min(hmax, opt.edge_step);
            h = std::min(h, hmax);
            if (t + h == t) throw DegeneracyError("step size underflow at t = " + sci(t, "%.9g"));

            Vec k2, k3, k4, k5, k6, k7, y5;
            bool ok = true;
            try {
                k2 = f(axpy(y, h, {{a21, &k1}}), false).dy;
                k3 = f(axpy(y, h, {{a31, &k1}, {a32, &k2}}), false).dy;
                k4 = f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), false).dy;
                k5 = f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), false).dy;
                k6 = f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), false).dy;
                y5 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
                sys.check_order(y5);
            } catch (const Error&) {
                ok = false;
            }
            double err = 0.0;
            if (ok) {
                Vec yn = y5;
                try {
                    k7 = f(yn, false).dy;
                } catch (const Error&) {
                    ok = false;
                }
                if (ok) {
                    Vec e(y.size());
                    for (std::size_t i = 0; i < y.size(); ++i)
                        e[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                    for (std::size_t i = 0; i < y.size(); ++i) {
                        const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
                        err = std::max(err, std::abs(e[i]) / sc);
                    }
                    for (auto [a, b] : pairs) {
                        const double g = std::min(wrap_gap(y[b] - y[a]), wrap_gap(y5[b] - y5[a]));
                        err = std::max(err, std::abs(e[b] - e[a]) / (opt.gap_atol + opt.rtol * g));
                    }
                    if (!std::isfinite(err)) ok = false;
                }
            }
            if (!ok) {
                ++dg.rejected;
                h *= 0.25;
                continue;
            }
            if (err <= 1.0) {
                t = (h == t_stop - t) ? t_stop : t + h;
                y = std::move(y5);
                ++dg.accepted;
                auto rn = f(y, true);
                k1 = rn.dy;
                if (rn.drift > opt.drift_tol)
                    throw DegeneracyError("imaginary drift " + sci(rn.drift) + " at t = " + sci(t, "%.9g"));
                dg.min_gap = std::min(dg.min_gap, sys.check_order(y));
                if (dg.min_gap < opt.min_gap) throw DegeneracyError("prevertices collide at t = " + sci(t, "%.9g"));
                dg.modulus_trace.push_back({t, y[y.size() - 3] / (2.0 * kOmega1)});
                h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
            } else {
                ++dg.rejected;
                h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            }
        }
    }
    dg.t_end = std::max(t, t0);
    res.state = sys.unpack(y, C2);
    for (const auto& tip : res.tips) side_of(res.spec, tip.side)[tip.index].w = tip.position(dg.t_end);
    return res;
}

const std::vector<std::pair<double, double>>& modulus_trace(const ContinuationDiagnostics& d) {
    return d.modulus_trace;
}

AccessoryState shift_representative(const DomainSpec& spec, const AccessoryState& state, Side side,
                                    int index, long k) {
    if (k == 0) return state;
    AccessoryState s = state;
    xs_of(s, side)[index] += kOmega1 * double(k);
    ScMap before(spec, state), after(spec, s);
    // any regular point of the strip will do
    const cplx xi(0.5 * (state.x1[0] + state.x1[1 % state.x1.size()]) + 0.1, 0.25 * state.height);
    s.C1 = state.C1 * std::exp(before.log_integrand(xi) - after.log_integrand(xi));
    return s;
}

AccessoryState canonical_representatives(const DomainSpec& spec, const AccessoryState& state) {
    AccessoryState s = state;
    for (Side side : {Side::outer, Side::inner}) {
        const std::size_t m = side == Side::outer ? s.x1.size() : s.x2.size();
        for (std::size_t i = 0; i < m; ++i) {
            const double x = xs_of(s, side)[i];
            const long k = -static_cast<long>(std::floor(x / kOmega1));
            s = shift_representative(spec, s, side, int(i), k);
        }
    }
    return s;
}

std::pair<DomainSpec, AccessoryState> merge_prevertices(const DomainSpec& spec, const AccessoryState& state,
                                                        std::vector<MergeGroup> groups, double tolerance,
                                                        MergeReport* report) {
    DomainSpec sp = spec;
    AccessoryState st = state;
    if (report) report->c_before = compute_c(state, spec);
    // process from the highest index down so earlier groups keep their indices
    std::sort(groups.begin(), groups.end(), [](const MergeGroup& a, const MergeGroup& b) {
        if (a.side != b.side) return a.side < b.side;
        return a.first > b.first;
    });
    std::vector<double> spreads;
    for (const MergeGroup& g : groups) {
        auto& vs = side_of(sp, g.side);
        const int n = int(vs.size());
        const std::string path = side_name(g.side) + " merge at " + std::to_string(g.first);
        if (g.count < 2 || g.count > n - 1 || g.first < 0 || g.first >= n)
            throw ValidationError(path, "bad group");
        // bring the members next to the first one
        std::vector<int> idx;
        for (int i = 0; i < g.count; ++i) idx.push_back((g.first + i) % n);
        const double x0 = xs_of(st, g.side)[idx[0]];
        for (int i : idx) {
            const double x = xs_of(st, g.side)[i];
            const long k = std::lround((x0 - x) / kOmega1);
            st = shift_representative(sp, st, g.side, i, k);
        }
        auto& xs = xs_of(st, g.side);
        double lo = xs[idx[0]], hi = lo, sum = 0.0, bsum = 0.0, beta = 0.0;
        cplx wsum = 0.0;
        for (int i : idx) {
            lo = std::min(lo, xs[i]);
            hi = std::max(hi, xs[i]);
            sum += xs[i];
            bsum += (vs[i].alpha - 1.0) * (xs[i] - xs[idx[0]]);
            beta += vs[i].alpha - 1.0;
            wsum += vs[i].w;
        }
        const double spread = hi - lo;
        spreads.push_back(spread);
        if (spread > tolerance)
            throw TopologyError(path + ": spread " + sci(spread) + " exceeds " + sci(tolerance));
        const double mean = g.weighted && std::abs(beta) > 1e-12 ? xs[idx[0]] + bsum / beta : sum / g.count;
        const Vertex merged{g.w.value_or(wsum / double(g.count)), 1.0 + beta};
        if (!(merged.alpha > 0.0 && merged.alpha <= 2.0 + 1e-12))
            throw ValidationError(path, "merged exponent out of range");

        // erase members (descending) and insert at the smallest index
        std::vector<int> sorted = idx;
        std::sort(sorted.rbegin(), sorted.rend());
        const int at = *std::min_element(idx.begin(), idx.end());
        for (int i : sorted) {
            vs.erase(vs.begin() + i);
            xs.erase(xs.begin() + i);
        }
        if (std::abs(beta) > 1e-12) {
            vs.insert(vs.begin() + at, merged);
            xs.insert(xs.begin() + at, mean);
        }
    }
    sp.validate();
    if (report) {
        report->spreads = spreads;
        report->c_after = compute_c(st, sp);
    }
    return {sp, st};
}

}  // namespace ringmap
