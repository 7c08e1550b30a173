// ringmap: closed-form start states, staged slit continuation, grid images
// and reference comparisons for annulus maps onto polygonal ring domains.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "ringmap/errors.hpp"
#include "ringmap/pipeline.hpp"

using namespace ringmap;
namespace fs = std::filesystem;

namespace {

constexpr int kValidation = 2;
constexpr int kNumerical = 3;

void setup_logging() {
    auto log = spdlog::stderr_logger_mt("ringmap");
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::info);
    if (const char* env = std::getenv("RINGMAP_LOG")) log->set_level(spdlog::level::from_str(env));
    spdlog::set_default_logger(log);
}

cplx parse_offset(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    if (v.size() != 2) throw ValidationError("--offset", "expected two numbers");
    return {v[0], v[1]};
}

void log_stage(const StageReport& s) {
    spdlog::info("{}: {} steps ({} rejected), t_end {:.6f}, drift {:.1e}, m = {:.15f}, residual {:.1e}", s.name,
                 s.diag.accepted, s.diag.rejected, s.diag.t_end, s.diag.max_drift, s.modulus, s.residual);
    for (double sp : s.merge_spreads) spdlog::info("  merge spread {:.3e}", sp);
}

int cmd_init_rect(double b, double a1, double a2, double scale, const std::vector<double>& offset, bool table,
                  const std::string& state_out) {
    RectSlitInput in{b, a1, a2, scale, parse_offset(offset)};
    in.validate();
    if (table) {
        std::cout << table1_csv(table1_report({in}));
    } else {
        auto sol = solve_rect_slit(in);
        std::cout << parameters_csv(sol.spec, sol.state);
        if (!state_out.empty()) {
            std::ofstream f(state_out);
            if (!f) throw std::runtime_error("cannot write " + state_out);
            f << state_to_json(sol.spec, sol.state).dump(2) << '\n';
        }
    }
    return 0;
}

int cmd_run(const std::string& config, const std::string& out) {
    PipelineConfig c = load_config(config);
    spdlog::info("{}: {} stages, {} slit segments", c.name.empty() ? config : c.name, c.stages.size(),
                 c.segment_count());
    PipelineResult partial;
    PipelineResult r;
    try {
        r = run_pipeline(c, &partial, log_stage);
    } catch (const StageError&) {
        // keep what was computed
        PipelineConfig keep = c;
        keep.outputs.state.clear();
        keep.outputs.parameters.clear();
        keep.outputs.grid.reset();
        keep.outputs.table1.reset();
        emit_outputs(keep, partial, out);
        throw;
    }
    emit_outputs(c, r, out);
    std::cout << "Mod " << format17(r.state.modulus()) << "\nCap " << format17(1.0 / r.state.modulus())
              << "\nresidual " << r.residual << '\n';
    return 0;
}

int cmd_grid(const std::string& state, int radii, int rays, const std::string& svg) {
    std::ifstream f(state);
    if (!f) throw ValidationError("--state", "cannot read " + state);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ValidationError("--state", e.what());
    }
    auto [spec, st] = state_from_json(j);
    ScMap m(spec, st);
    std::ofstream o(svg, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + svg);
    o << grid_svg(m, radii, rays);
    return 0;
}

int cmd_verify(const std::vector<std::string>& configs, const std::string& reference) {
    std::ifstream f(reference);
    if (!f) throw ValidationError("--reference", "cannot read " + reference);
    json rj;
    try {
        rj = json::parse(f);
    } catch (const json::exception& e) {
        throw ValidationError("--reference", e.what());
    }
    const auto table = load_reference(rj);
    std::vector<std::string> sources;
    for (const auto& r : table)
        if (std::find(sources.begin(), sources.end(), r.source) == sources.end()) sources.push_back(r.source);

    std::vector<std::pair<std::string, double>> computed;
    for (const auto& path : configs) {
        PipelineConfig c = load_config(path);
        if (c.descriptor.empty()) throw ValidationError(path, "config has no descriptor");
        spdlog::info("{} [{}]", c.name.empty() ? path : c.name, c.descriptor);
        PipelineResult r = run_pipeline(c, nullptr, log_stage);
        computed.push_back({c.descriptor, r.state.modulus()});
    }
    for (const auto& src : sources) {
        Comparison cmp = compare_reference(computed, table, src);
        std::cout << "source " << src << "\n";
        std::cout << "descriptor,Mod,Mod_ref,abs_dev,rel_dev,Cap,Cap_ref,cap_dev\n";
        for (const auto& row : cmp.rows) {
            std::cout << '"' << row.ref.label << "\"," << format17(row.modulus) << ',' << format17(row.ref.modulus)
                      << ',' << row.abs_dev << ',' << row.rel_dev << ',' << format17(1.0 / row.modulus) << ','
                      << format17(row.ref.capacity) << ',' << row.cap_dev << '\n';
        }
        std::cout << "worst " << cmp.worst_label << ' ' << cmp.worst_abs << "\n\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Annulus maps onto polygonal ring domains"};
    app.require_subcommand(1);

    double b = 0.5, a1 = -0.5, a2 = 0.5, scale = 1.0;
    std::vector<double> offset;
    bool table = false;
    std::string state_out;
    auto* init = app.add_subcommand("init-rect", "closed-form rectangle with a centre-line slit");
    init->add_option("--b", b, "half height of the rectangle (-1,1)x(-b,b)")->required();
    init->add_option("--a1", a1, "left slit end")->required();
    init->add_option("--a2", a2, "right slit end")->required();
    init->add_option("--scale", scale, "w -> scale*w + offset");
    init->add_option("--offset", offset, "re im")->expected(2);
    init->add_flag("--table", table, "one table row: a1,a2,omega2_im,z11,z12,Mod");
    init->add_option("--state", state_out, "also write the state as JSON");

    std::string config, out = ".";
    auto* run = app.add_subcommand("run", "run a pipeline config");
    run->add_option("--config", config)->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory");

    std::string state, svg = "grid.svg";
    int radii = 10, rays = 24;
    auto* grid = app.add_subcommand("grid", "grid image of a saved state");
    grid->add_option("--state", state)->required()->check(CLI::ExistingFile);
    grid->add_option("--radii", radii)->check(CLI::PositiveNumber);
    grid->add_option("--rays", rays)->check(CLI::PositiveNumber);
    grid->add_option("--svg", svg);

    std::vector<std::string> configs;
    std::string reference;
    auto* verify = app.add_subcommand("verify", "run configs and compare moduli with a reference table");
    verify->add_option("--config", configs)->required()->check(CLI::ExistingFile);
    verify->add_option("--reference", reference)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        if (*init) return cmd_init_rect(b, a1, a2, scale, offset, table, state_out);
        if (*run) return cmd_run(config, out);
        if (*grid) return cmd_grid(state, radii, rays, svg);
        if (*verify) return cmd_verify(configs, reference);
    } catch (const ValidationError& e) {
        spdlog::error("invalid input: {}", e.what());
        return kValidation;
    } catch (const StageError& e) {
        spdlog::error("{}", e.what());
        return e.numerical() ? kNumerical : kValidation;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kNumerical;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
