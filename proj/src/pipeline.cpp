#include "ringmap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ringmap/errors.hpp"

namespace ringmap {

namespace {

namespace fs = std::filesystem;

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ValidationError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ValidationError(at(path, it.key()), "unknown key");
    }
}

double num(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() && *end == '\0') return v;
    }
    throw ValidationError(path, "expected a number");
}

double num_or(const json& j, const char* key, double def, const std::string& path) {
    return j.contains(key) ? num(j.at(key), at(path, key)) : def;
}

// number, [re, im] or {"re": .., "im": ..}
cplx complex_of(const json& j, const std::string& path) {
    if (j.is_array()) {
        if (j.size() != 2) throw ValidationError(path, "expected [re, im]");
        return {num(j[0], at(path, 0)), num(j[1], at(path, 1))};
    }
    return {num(j, path), 0.0};
}

Side side_of_name(const json& j, const std::string& path) {
    if (j == "outer") return Side::outer;
    if (j == "inner") return Side::inner;
    throw ValidationError(path, "expected \"outer\" or \"inner\"");
}

const char* side_name(Side s) { return s == Side::outer ? "outer" : "inner"; }

json complex_json(cplx z) { return json::array({format17(z.real()), format17(z.imag())}); }

RectSlitInput parse_rect(const json& j, const std::string& path) {
    allow_keys(j, path, {"b", "a1", "a2", "scale", "offset"});
    RectSlitInput in;
    in.b = num_or(j, "b", in.b, path);
    in.a1 = num_or(j, "a1", in.a1, path);
    in.a2 = num_or(j, "a2", in.a2, path);
    in.scale = num_or(j, "scale", in.scale, path);
    if (j.contains("offset")) in.offset = complex_of(j["offset"], at(path, "offset"));
    try {
        in.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(at(path, e.path()), e.what());
    }
    return in;
}

StageOptions parse_options(const json& j, const std::string& path) {
    allow_keys(j, path, {"rtol", "atol", "seed", "gap_atol", "end_trim", "edge_window", "edge_step",
                         "drift_tol", "min_gap", "max_steps", "tip_formula"});
    StageOptions o;
    o.rtol = num_or(j, "rtol", o.rtol, path);
    o.atol = num_or(j, "atol", o.atol, path);
    o.seed = num_or(j, "seed", o.seed, path);
    o.gap_atol = num_or(j, "gap_atol", o.gap_atol, path);
    o.end_trim = num_or(j, "end_trim", o.end_trim, path);
    o.edge_window = num_or(j, "edge_window", o.edge_window, path);
    o.edge_step = num_or(j, "edge_step", o.edge_step, path);
    o.drift_tol = num_or(j, "drift_tol", o.drift_tol, path);
    o.min_gap = num_or(j, "min_gap", o.min_gap, path);
    o.max_steps = long(num_or(j, "max_steps", double(o.max_steps), path));
    if (j.contains("tip_formula")) {
        if (j["tip_formula"] == "derived")
            o.tip_formula = TipFormula::derived;
        else if (j["tip_formula"] == "literal")
            o.tip_formula = TipFormula::literal;
        else
            throw ValidationError(at(path, "tip_formula"), "expected \"derived\" or \"literal\"");
    }
    if (!(o.rtol > 0 && o.atol > 0)) throw ValidationError(path, "tolerances must be positive");
    if (!(o.end_trim >= 0 && o.end_trim < 0.5)) throw ValidationError(at(path, "end_trim"), "must lie in [0, 0.5)");
    if (!(o.seed > 0 && o.seed < 1e-3)) throw ValidationError(at(path, "seed"), "must lie in (0, 1e-3)");
    return o;
}

StageTip parse_tip(const json& j, const std::string& path) {
    allow_keys(j, path, {"side", "vertex", "branch", "end", "phi1", "phi2"});
    for (const char* k : {"side", "vertex", "end"})
        if (!j.contains(k)) throw ValidationError(at(path, k), "missing");
    StageTip t;
    t.side = side_of_name(j["side"], at(path, "side"));
    if (!j["vertex"].is_number_integer()) throw ValidationError(at(path, "vertex"), "expected an integer");
    t.vertex = j["vertex"].get<int>();
    t.branch = j.value("branch", false);
    t.end = complex_of(j["end"], at(path, "end"));
    if (j.contains("phi1")) t.phi1 = num(j["phi1"], at(path, "phi1"));
    if (j.contains("phi2")) t.phi2 = num(j["phi2"], at(path, "phi2"));
    return t;
}

// [[p0, q0], [p1, q1]] as {"t0": [p0, q0], "t1": [p1, q1]}
SlitSegment parse_segment(const json& j, const std::string& path) {
    allow_keys(j, path, {"t0", "t1"});
    SlitSegment s;
    auto ends = [&](const char* key, cplx& a, cplx& b) {
        if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2)
            throw ValidationError(at(path, key), "expected two endpoints");
        a = complex_of(j[key][0], at(at(path, key), 0));
        b = complex_of(j[key][1], at(at(path, key), 1));
    };
    ends("t0", s.from0, s.to0);
    ends("t1", s.from1, s.to1);
    return s;
}

MergeGroup parse_merge(const json& j, const std::string& path) {
    allow_keys(j, path, {"side", "first", "count", "w", "weighted"});
    MergeGroup g;
    if (!j.contains("side")) throw ValidationError(at(path, "side"), "missing");
    g.side = side_of_name(j["side"], at(path, "side"));
    if (!j.contains("first") || !j["first"].is_number_integer())
        throw ValidationError(at(path, "first"), "expected an integer");
    if (!j.contains("count") || !j["count"].is_number_integer())
        throw ValidationError(at(path, "count"), "expected an integer");
    g.first = j["first"].get<int>();
    g.count = j["count"].get<int>();
    if (j.contains("w")) g.w = complex_of(j["w"], at(path, "w"));
    g.weighted = j.value("weighted", false);
    return g;
}

// same bookkeeping as merge_prevertices, on the vertex lists only
DomainSpec merge_spec(DomainSpec sp, std::vector<MergeGroup> groups, const std::string& path) {
    std::sort(groups.begin(), groups.end(), [](const MergeGroup& a, const MergeGroup& b) {
        if (a.side != b.side) return a.side < b.side;
        return a.first > b.first;
    });
    for (const MergeGroup& g : groups) {
        auto& vs = g.side == Side::outer ? sp.outer : sp.inner;
        const int n = int(vs.size());
        if (g.count < 2 || g.count > n - 1 || g.first < 0 || g.first >= n)
            throw ValidationError(path, std::string("bad ") + side_name(g.side) + " group at " +
                                            std::to_string(g.first));
        std::vector<int> idx;
        double beta = 0.0;
        cplx wsum = 0.0;
        for (int i = 0; i < g.count; ++i) {
            idx.push_back((g.first + i) % n);
            beta += vs[idx.back()].alpha - 1.0;
            wsum += vs[idx.back()].w;
        }
        const Vertex merged{g.w.value_or(wsum / double(g.count)), 1.0 + beta};
        const int pos = *std::min_element(idx.begin(), idx.end());
        std::sort(idx.rbegin(), idx.rend());
        for (int i : idx) vs.erase(vs.begin() + i);
        if (std::abs(beta) > 1e-12) vs.insert(vs.begin() + pos, merged);
    }
    try {
        sp.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(at(path, e.path()), std::string("after merge: ") + e.what());
    }
    return sp;
}

bool close(cplx a, cplx b) { return std::abs(a - b) <= 1e-6 * (1.0 + std::abs(a)); }

// every moving endpoint is a tip and every tip runs along a segment end
void check_segments(const StageConfig& st, const DomainSpec& spec, const std::string& path) {
    if (st.segments.empty()) return;
    std::vector<std::pair<cplx, cplx>> tracks;
    for (const StageTip& t : st.tips) {
        const auto& vs = t.side == Side::outer ? spec.outer : spec.inner;
        tracks.push_back({vs[t.vertex].w, t.end});
    }
    auto has_tip = [&](cplx a, cplx b) {
        return std::any_of(tracks.begin(), tracks.end(),
                           [&](const auto& p) { return close(p.first, a) && close(p.second, b); });
    };
    for (std::size_t i = 0; i < st.segments.size(); ++i) {
        const SlitSegment& s = st.segments[i];
        if (s.from0 != s.from1 && !has_tip(s.from0, s.from1))
            throw ValidationError(at(at(path, "segments"), i), "moving endpoint without a matching tip");
        if (s.to0 != s.to1 && !has_tip(s.to0, s.to1))
            throw ValidationError(at(at(path, "segments"), i), "moving endpoint without a matching tip");
    }
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        bool found = false;
        for (const SlitSegment& s : st.segments)
            found = found || (close(s.from0, tracks[k].first) && close(s.from1, tracks[k].second)) ||
                    (close(s.to0, tracks[k].first) && close(s.to1, tracks[k].second));
        if (!found) throw ValidationError(at(at(path, "tips"), k), "tip path is not a segment end");
    }
}

DomainSpec start_spec(const PipelineConfig& c) {
    if (c.saved) return c.saved->first;
    if (c.rect) return solve_rect_slit(*c.rect, false).spec;
    return {};
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

int PipelineConfig::segment_count() const {
    int n = 0;
    for (const auto& s : stages) n += int(s.segments.size());
    return n;
}

std::string format17(double v) { return fmt("%.17g", v); }

PipelineConfig parse_config(const json& j, const fs::path& base) {
    allow_keys(j, "", {"name", "descriptor", "note", "init", "stages", "outputs"});
    PipelineConfig c;
    c.name = j.value("name", std::string());
    if (j.contains("descriptor")) {
        const json& d = j["descriptor"];
        if (!d.is_array() || d.size() != 4) throw ValidationError("descriptor", "expected [a, b, c, d]");
        c.descriptor = descriptor(num(d[0], "descriptor[0]"), num(d[1], "descriptor[1]"), num(d[2], "descriptor[2]"),
                                  num(d[3], "descriptor[3]"));
    }

    if (!j.contains("init")) throw ValidationError("init", "missing");
    const json& init = j["init"];
    allow_keys(init, "init", {"rect_slit", "state"});
    if (init.contains("rect_slit") == init.contains("state"))
        throw ValidationError("init", "give exactly one of rect_slit, state");
    if (init.contains("rect_slit")) {
        c.rect = parse_rect(init["rect_slit"], "init.rect_slit");
    } else {
        json sj = init["state"];
        if (sj.is_string()) {
            const fs::path p = base / sj.get<std::string>();
            std::ifstream f(p);
            if (!f) throw ValidationError("init.state", "cannot read " + p.string());
            try {
                sj = json::parse(f);
            } catch (const json::exception& e) {
                throw ValidationError("init.state", e.what());
            }
        }
        try {
            c.saved = state_from_json(sj);
        } catch (const ValidationError& e) {
            throw ValidationError(at("init.state", e.path()), e.what());
        }
    }

    if (j.contains("stages")) {
        if (!j["stages"].is_array()) throw ValidationError("stages", "expected an array");
        for (std::size_t k = 0; k < j["stages"].size(); ++k) {
            const json& sj = j["stages"][k];
            const std::string path = at("stages", k);
            allow_keys(sj, path, {"name", "note", "tips", "segments", "options", "merge", "merge_tolerance"});
            StageConfig st;
            st.name = sj.value("name", "stage " + std::to_string(k + 1));
            if (sj.contains("tips"))
                for (std::size_t i = 0; i < sj["tips"].size(); ++i)
                    st.tips.push_back(parse_tip(sj["tips"][i], at(at(path, "tips"), i)));
            if (sj.contains("segments"))
                for (std::size_t i = 0; i < sj["segments"].size(); ++i)
                    st.segments.push_back(parse_segment(sj["segments"][i], at(at(path, "segments"), i)));
            if (sj.contains("options")) st.options = parse_options(sj["options"], at(path, "options"));
            if (sj.contains("merge"))
                for (std::size_t i = 0; i < sj["merge"].size(); ++i)
                    st.merges.push_back(parse_merge(sj["merge"][i], at(at(path, "merge"), i)));
            st.merge_tolerance = num_or(sj, "merge_tolerance", st.merge_tolerance, path);
            c.stages.push_back(std::move(st));
        }
    }

    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        allow_keys(o, "outputs", {"state", "parameters", "trace", "report", "grid", "table1"});
        c.outputs.state = o.value("state", std::string());
        c.outputs.parameters = o.value("parameters", std::string());
        c.outputs.trace = o.value("trace", std::string());
        c.outputs.report = o.value("report", std::string());
        if (o.contains("grid")) {
            const json& g = o["grid"];
            allow_keys(g, "outputs.grid", {"svg", "radii", "rays"});
            GridOutput go;
            go.svg = g.value("svg", std::string("grid.svg"));
            go.radii = g.value("radii", go.radii);
            go.rays = g.value("rays", go.rays);
            if (go.radii < 1 || go.rays < 1) throw ValidationError("outputs.grid", "radii and rays must be >= 1");
            c.outputs.grid = go;
        }
        if (o.contains("table1")) {
            const json& t = o["table1"];
            allow_keys(t, "outputs.table1", {"csv", "rows"});
            Table1Output to;
            to.csv = t.value("csv", std::string("table1.csv"));
            if (!t.contains("rows") || !t["rows"].is_array())
                throw ValidationError("outputs.table1.rows", "expected an array");
            for (std::size_t i = 0; i < t["rows"].size(); ++i)
                to.rows.push_back(parse_rect(t["rows"][i], at("outputs.table1.rows", i)));
            c.outputs.table1 = to;
        }
    }

    // walk the topology through the stages
    DomainSpec spec = start_spec(c);
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(at("init", e.path()), e.what());
    }
    for (std::size_t k = 0; k < c.stages.size(); ++k) {
        const StageConfig& st = c.stages[k];
        const std::string path = at("stages", k);
        PreparedStage plan;
        try {
            plan = plan_stage(spec, st.tips);
        } catch (const ValidationError& e) {
            throw ValidationError(at(path, e.path()), e.what());
        }
        check_segments(st, spec, path);
        for (const MovingTip& t : plan.tips) (t.side == Side::outer ? plan.spec.outer : plan.spec.inner)[t.index].w = t.end;
        spec = st.merges.empty() ? plan.spec : merge_spec(plan.spec, st.merges, at(path, "merge"));
    }
    return c;
}

PipelineConfig load_config(const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw ValidationError("", "cannot read " + file.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ValidationError("", file.string() + ": " + e.what());
    }
    return parse_config(j, file.parent_path());
}

json config_to_json(const PipelineConfig& c) {
    json j;
    if (!c.name.empty()) j["name"] = c.name;
    if (!c.descriptor.empty()) {
        double v[4];
        std::sscanf(c.descriptor.c_str(), "%lg,%lg,%lg,%lg", &v[0], &v[1], &v[2], &v[3]);
        j["descriptor"] = {v[0], v[1], v[2], v[3]};
    }
    auto rect_json = [](const RectSlitInput& r) {
        return json{{"b", r.b}, {"a1", r.a1}, {"a2", r.a2}, {"scale", r.scale},
                    {"offset", {r.offset.real(), r.offset.imag()}}};
    };
    if (c.rect) j["init"]["rect_slit"] = rect_json(*c.rect);
    if (c.saved) j["init"]["state"] = state_to_json(c.saved->first, c.saved->second);
    j["stages"] = json::array();
    for (const StageConfig& st : c.stages) {
        json s;
        s["name"] = st.name;
        s["tips"] = json::array();
        for (const StageTip& t : st.tips) {
            json tj{{"side", side_name(t.side)}, {"vertex", t.vertex}, {"branch", t.branch},
                    {"end", {t.end.real(), t.end.imag()}}};
            if (t.phi1) tj["phi1"] = *t.phi1;
            if (t.phi2) tj["phi2"] = *t.phi2;
            s["tips"].push_back(tj);
        }
        if (!st.segments.empty()) {
            s["segments"] = json::array();
            for (const SlitSegment& g : st.segments)
                s["segments"].push_back({{"t0", {{g.from0.real(), g.from0.imag()}, {g.to0.real(), g.to0.imag()}}},
                                         {"t1", {{g.from1.real(), g.from1.imag()}, {g.to1.real(), g.to1.imag()}}}});
        }
        const StageOptions& o = st.options;
        s["options"] = {{"rtol", o.rtol},
                        {"atol", o.atol},
                        {"seed", o.seed},
                        {"gap_atol", o.gap_atol},
                        {"end_trim", o.end_trim},
                        {"edge_window", o.edge_window},
                        {"edge_step", o.edge_step},
                        {"drift_tol", o.drift_tol},
                        {"min_gap", o.min_gap},
                        {"max_steps", o.max_steps},
                        {"tip_formula", o.tip_formula == TipFormula::derived ? "derived" : "literal"}};
        if (!st.merges.empty()) {
            s["merge"] = json::array();
            for (const MergeGroup& g : st.merges) {
                json gj{{"side", side_name(g.side)}, {"first", g.first}, {"count", g.count}, {"weighted", g.weighted}};
                if (g.w) gj["w"] = {g.w->real(), g.w->imag()};
                s["merge"].push_back(gj);
            }
            s["merge_tolerance"] = st.merge_tolerance;
        }
        j["stages"].push_back(s);
    }
    json o = json::object();
    if (!c.outputs.state.empty()) o["state"] = c.outputs.state;
    if (!c.outputs.parameters.empty()) o["parameters"] = c.outputs.parameters;
    if (!c.outputs.trace.empty()) o["trace"] = c.outputs.trace;
    if (!c.outputs.report.empty()) o["report"] = c.outputs.report;
    if (c.outputs.grid) o["grid"] = {{"svg", c.outputs.grid->svg}, {"radii", c.outputs.grid->radii}, {"rays", c.outputs.grid->rays}};
    if (c.outputs.table1) {
        json rows = json::array();
        for (const auto& r : c.outputs.table1->rows) rows.push_back(rect_json(r));
        o["table1"] = {{"csv", c.outputs.table1->csv}, {"rows", rows}};
    }
    j["outputs"] = o;
    return j;
}

std::pair<DomainSpec, AccessoryState> initial_state(const PipelineConfig& c) {
    if (c.saved) return *c.saved;
    if (!c.rect) throw ValidationError("init", "missing");
    auto sol = solve_rect_slit(*c.rect);
    return {sol.spec, sol.state};
}

PipelineResult run_pipeline(const PipelineConfig& c, PipelineResult* partial,
                            const std::function<void(const StageReport&)>& on_stage) {
    PipelineResult r;
    int k = -1;
    try {
        std::tie(r.spec, r.state) = initial_state(c);
        r.residual = ScMap(r.spec, r.state).vertex_residuals().max_vertex_error;
        for (k = 0; k < int(c.stages.size()); ++k) {
            const StageConfig& st = c.stages[k];
            PreparedStage prep = prepare_stage(r.spec, r.state, st.tips, st.options.seed);
            StageResult res = integrate_stage(prep, st.options);
            StageReport rep;
            rep.index = k;
            rep.name = st.name;
            rep.diag = std::move(res.diag);
            r.spec = std::move(res.spec);
            r.state = std::move(res.state);
            if (!st.merges.empty()) {
                MergeReport mr;
                std::tie(r.spec, r.state) = merge_prevertices(r.spec, r.state, st.merges, st.merge_tolerance, &mr);
                rep.merge_spreads = mr.spreads;
                std::tie(r.state.C1, r.state.C2) = ScMap::frame_constants(r.spec, r.state);
            } else {
                // C2 refresh: first outer vertex matched exactly
                ScMap m(r.spec, r.state);
                r.state.C2 = r.spec.outer[0].w - r.state.C1 * m.raw_integral_to(Side::outer, 0);
            }
            ScMap m(r.spec, r.state);
            rep.modulus = r.state.modulus();
            rep.residual = m.vertex_residuals().max_vertex_error;
            r.residual = rep.residual;
            r.stages.push_back(std::move(rep));
            if (on_stage) on_stage(r.stages.back());
        }
    } catch (const ValidationError& e) {
        if (partial) *partial = r;
        throw StageError(k, e.what(), false);
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        if (partial) *partial = r;
        throw StageError(k, e.what(), true);
    }
    return r;
}

json state_to_json(const DomainSpec& spec, const AccessoryState& s) {
    json j;
    auto side = [&](const std::vector<Vertex>& vs, const std::vector<double>& xs) {
        json a = json::array();
        for (std::size_t i = 0; i < vs.size(); ++i)
            a.push_back({{"w", complex_json(vs[i].w)}, {"alpha", format17(vs[i].alpha)}, {"x", format17(xs[i])}});
        return a;
    };
    j["outer"] = side(spec.outer, s.x1);
    j["inner"] = side(spec.inner, s.x2);
    j["height"] = format17(s.height);
    j["C1"] = complex_json(s.C1);
    j["C2"] = complex_json(s.C2);
    j["modulus"] = format17(s.modulus());
    return j;
}

std::pair<DomainSpec, AccessoryState> state_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("", "expected an object");
    DomainSpec spec;
    AccessoryState s;
    for (const char* key : {"outer", "inner"}) {
        if (!j.contains(key) || !j[key].is_array()) throw ValidationError(key, "expected an array");
        auto& vs = std::string(key) == "outer" ? spec.outer : spec.inner;
        auto& xs = std::string(key) == "outer" ? s.x1 : s.x2;
        for (std::size_t i = 0; i < j[key].size(); ++i) {
            const json& v = j[key][i];
            const std::string path = at(key, i);
            allow_keys(v, path, {"w", "alpha", "x"});
            if (!v.contains("w") || !v.contains("alpha") || !v.contains("x"))
                throw ValidationError(path, "needs w, alpha and x");
            vs.push_back({complex_of(v["w"], at(path, "w")), num(v["alpha"], at(path, "alpha"))});
            xs.push_back(num(v["x"], at(path, "x")));
        }
    }
    if (!j.contains("height")) throw ValidationError("height", "missing");
    s.height = num(j["height"], "height");
    if (!(s.height > 0)) throw ValidationError("height", "must be positive");
    if (j.contains("C1")) s.C1 = complex_of(j["C1"], "C1");
    if (j.contains("C2")) s.C2 = complex_of(j["C2"], "C2");
    spec.validate();
    if (!j.contains("C1")) std::tie(s.C1, s.C2) = ScMap::frame_constants(spec, s);
    return {spec, s};
}

std::string parameters_csv(const DomainSpec& spec, const AccessoryState& s) {
    std::ostringstream o;
    auto row = [&](const std::string& name, cplx v) {
        o << name << ',' << format17(v.real()) << ',' << format17(v.imag()) << '\n';
    };
    o << "name,value_re,value_im\n";
    row("omega2", s.omega2());
    row("Mod", s.modulus());
    row("Cap", 1.0 / s.modulus());
    row("c", compute_c(s, spec));
    row("C1", s.C1);
    row("C2", s.C2);
    for (std::size_t i = 0; i < s.x1.size(); ++i) row("z1_" + std::to_string(i + 1), s.x1[i]);
    for (std::size_t i = 0; i < s.x2.size(); ++i) row("z2_" + std::to_string(i + 1), cplx(s.x2[i], 0.5 * s.height));
    return o.str();
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
    std::ostringstream o;
    o << "a1,a2,omega2_im,z11,z12,Mod\n";
    for (const auto& r : rows)
        o << format17(r.a1) << ',' << format17(r.a2) << ',' << format17(r.omega2_im) << ',' << format17(r.z11)
          << ',' << format17(r.z12) << ',' << format17(r.modulus) << '\n';
    return o.str();
}

std::string trace_csv(const std::vector<StageReport>& stages) {
    std::ostringstream o;
    o << "stage,t,m\n";
    for (const auto& s : stages)
        for (auto [t, m] : s.diag.modulus_trace) o << s.index << ',' << format17(t) << ',' << format17(m) << '\n';
    return o.str();
}

std::string grid_svg(const ScMap& map, int radii, int rays) {
    const auto& outer = map.spec().outer;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const Vertex& v : outer) {
        x0 = std::min(x0, v.w.real());
        x1 = std::max(x1, v.w.real());
        y0 = std::min(y0, v.w.imag());
        y1 = std::max(y1, v.w.imag());
    }
    const double mx = 0.02 * (x1 - x0), my = 0.02 * (y1 - y0);
    const double vw = x1 - x0 + 2 * mx, vh = y1 - y0 + 2 * my;
    const double stroke = 0.002 * std::max(vw, vh);

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt("%.9g", x0 - mx) << ' '
      << fmt("%.9g", -(y1 + my)) << ' ' << fmt("%.9g", vw) << ' ' << fmt("%.9g", vh) << "\" width=\"800\" height=\""
      << fmt("%.0f", 800.0 * vh / vw) << "\">\n";
    auto poly = [&](const Polyline& p, const char* cls, const char* color, double width) {
        o << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
          << fmt("%.6g", width) << "\" points=\"";
        for (std::size_t i = 0; i < p.points.size(); ++i) {
            if (i) o << ' ';
            // y axis points down in SVG
            o << fmt("%.7g", p.points[i].real()) << ',' << fmt("%.7g", -p.points[i].imag());
        }
        o << "\"/>\n";
    };
    for (const Polyline& p : map.grid_image(radii, rays))
        poly(p, p.kind.c_str(), p.kind == "circle" ? "#1f5fa8" : "#b03a2e", stroke);
    poly(map.boundary_curve(Side::outer), "boundary", "#000000", 2 * stroke);
    poly(map.boundary_curve(Side::inner), "boundary", "#000000", 2 * stroke);
    o << "</svg>\n";
    return o.str();
}

void emit_outputs(const PipelineConfig& c, const PipelineResult& r, const fs::path& dir) {
    const OutputConfig& o = c.outputs;
    if (!o.state.empty()) write_file(dir / o.state, state_to_json(r.spec, r.state).dump(2) + "\n");
    if (!o.parameters.empty()) write_file(dir / o.parameters, parameters_csv(r.spec, r.state));
    if (!o.trace.empty()) write_file(dir / o.trace, trace_csv(r.stages));
    if (!o.report.empty()) {
        json j;
        j["name"] = c.name;
        if (!c.descriptor.empty()) j["descriptor"] = c.descriptor;
        j["stages"] = json::array();
        for (const auto& s : r.stages) {
            json sj{{"index", s.index},
                    {"name", s.name},
                    {"accepted", s.diag.accepted},
                    {"rejected", s.diag.rejected},
                    {"t_end", format17(s.diag.t_end)},
                    {"max_drift", fmt("%.3e", s.diag.max_drift)},
                    {"min_gap", fmt("%.3e", s.diag.min_gap)},
                    {"modulus", format17(s.modulus)},
                    {"residual", fmt("%.3e", s.residual)}};
            json sp = json::array();
            for (double v : s.merge_spreads) sp.push_back(fmt("%.3e", v));
            sj["merge_spreads"] = sp;
            j["stages"].push_back(sj);
        }
        j["modulus"] = format17(r.state.modulus());
        j["capacity"] = format17(1.0 / r.state.modulus());
        j["residual"] = fmt("%.3e", r.residual);
        write_file(dir / o.report, j.dump(2) + "\n");
    }
    if (o.grid) write_file(dir / o.grid->svg, grid_svg(ScMap(r.spec, r.state), o.grid->radii, o.grid->rays));
    if (o.table1) write_file(dir / o.table1->csv, table1_csv(table1_report(o.table1->rows)));
}

std::string descriptor(double a, double b, double c, double d) {
    return fmt("%.12g", a) + "," + fmt("%.12g", b) + "," + fmt("%.12g", c) + "," + fmt("%.12g", d);
}

std::vector<ReferenceRow> load_reference(const json& j) {
    if (!j.contains("rows") || !j["rows"].is_array()) throw ValidationError("rows", "expected an array");
    std::vector<ReferenceRow> out;
    for (std::size_t i = 0; i < j["rows"].size(); ++i) {
        const json& r = j["rows"][i];
        const std::string path = at("rows", i);
        ReferenceRow base;
        base.a = num(r.at("a"), at(path, "a"));
        base.b = num(r.at("b"), at(path, "b"));
        base.c = num(r.at("c"), at(path, "c"));
        base.d = num(r.at("d"), at(path, "d"));
        base.label = descriptor(base.a, base.b, base.c, base.d);
        if (!r.contains("entries")) throw ValidationError(at(path, "entries"), "missing");
        for (std::size_t e = 0; e < r["entries"].size(); ++e) {
            const json& ej = r["entries"][e];
            const std::string ep = at(at(path, "entries"), e);
            ReferenceRow row = base;
            row.source = ej.value("source", std::string());
            row.modulus = num(ej.at("modulus"), at(ep, "modulus"));
            row.capacity = num(ej.at("capacity"), at(ep, "capacity"));
            if (std::abs(row.modulus * row.capacity - 1.0) > 1e-12)
                throw ValidationError(ep, "capacity is not 1/modulus");
            out.push_back(row);
        }
    }
    return out;
}

Comparison compare_reference(const std::vector<std::pair<std::string, double>>& computed,
                             const std::vector<ReferenceRow>& table, const std::string& source) {
    Comparison cmp;
    for (const auto& [label, m] : computed) {
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const ReferenceRow& r) { return r.label == label && r.source == source; });
        if (it == table.end()) throw ValidationError(label, "no reference row for source " + source);
        ComparisonRow row;
        row.ref = *it;
        row.modulus = m;
        row.abs_dev = std::abs(m - it->modulus);
        row.rel_dev = row.abs_dev / it->modulus;
        row.cap_dev = std::abs(1.0 / m - it->capacity);
        if (row.abs_dev >= cmp.worst_abs) {
            cmp.worst_abs = row.abs_dev;
            cmp.worst_label = label;
        }
        cmp.rows.push_back(row);
    }
    return cmp;
}

}  // namespace ringmap
