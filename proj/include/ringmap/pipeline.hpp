#pragma once

// Stage chaining: closed-form start, a list of continuation stages with
// merges in between, and the files written at the end.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringmap/errors.hpp"
#include "ringmap/loewner.hpp"
#include "ringmap/rect_slit.hpp"

namespace ringmap {

using json = nlohmann::json;

/// One segment of the slit polyline, endpoints at t = 0 and at t = 1.
/// Only used to cross-check the tips; a fixed segment has equal pairs.
struct SlitSegment {
    cplx from0, to0;
    cplx from1, to1;
    bool moving() const { return from0 != from1 || to0 != to1; }
};

struct StageConfig {
    std::string name;
    std::vector<StageTip> tips;
    std::vector<SlitSegment> segments;
    StageOptions options;
    /// Applied after the stage; indices refer to the stage's final vertex list.
    std::vector<MergeGroup> merges;
    double merge_tolerance = 1e-3;
};

struct GridOutput {
    std::string svg;
    int radii = 10;
    int rays = 24;
};

struct Table1Output {
    std::string csv;
    std::vector<RectSlitInput> rows;
};

struct OutputConfig {
    std::string state;       ///< final state, JSON
    std::string parameters;  ///< final parameters, CSV
    std::string trace;       ///< m(t) of every stage, CSV
    std::string report;      ///< stage reports, JSON
    std::optional<GridOutput> grid;
    std::optional<Table1Output> table1;
};

struct PipelineConfig {
    std::string name;
    std::string descriptor;  ///< "a,b,c,d" key for reference comparisons
    std::optional<RectSlitInput> rect;
    /// Saved state (spec + parameters) used instead of `rect`.
    std::optional<std::pair<DomainSpec, AccessoryState>> saved;
    std::vector<StageConfig> stages;
    OutputConfig outputs;

    int segment_count() const;
};

/// Parses and checks a config. Relative paths in `init.state` resolve
/// against `base`. Throws ValidationError with a field path.
PipelineConfig parse_config(const json& j, const std::filesystem::path& base = {});
PipelineConfig load_config(const std::filesystem::path& file);
json config_to_json(const PipelineConfig& c);

struct StageReport {
    int index = 0;
    std::string name;
    ContinuationDiagnostics diag;
    std::vector<double> merge_spreads;
    double modulus = 0.0;
    double residual = 0.0;  ///< max vertex error after merges
};

struct PipelineResult {
    DomainSpec spec;
    AccessoryState state;
    std::vector<StageReport> stages;
    double residual = 0.0;
};

/// Wraps an error raised by stage `stage` (-1 for the start state).
class StageError : public Error {
public:
    StageError(int stage, const std::string& what, bool numerical)
        : Error("stage " + std::to_string(stage) + ": " + what), stage_(stage), numerical_(numerical) {}
    int stage() const noexcept { return stage_; }
    bool numerical() const noexcept { return numerical_; }

private:
    int stage_;
    bool numerical_;
};

std::pair<DomainSpec, AccessoryState> initial_state(const PipelineConfig& c);
/// Runs every stage. `partial` (if given) receives the stages completed
/// before an error.
PipelineResult run_pipeline(const PipelineConfig& c, PipelineResult* partial = nullptr,
                            const std::function<void(const StageReport&)>& on_stage = {});
/// Writes the requested outputs, paths relative to `dir`.
void emit_outputs(const PipelineConfig& c, const PipelineResult& r, const std::filesystem::path& dir);

// serialisation; doubles as %.17g strings

std::string format17(double v);
json state_to_json(const DomainSpec& spec, const AccessoryState& state);
std::pair<DomainSpec, AccessoryState> state_from_json(const json& j);

/// name,value_re,value_im rows: omega2, Mod, Cap, c, C1, C2, z1_i, z2_i.
std::string parameters_csv(const DomainSpec& spec, const AccessoryState& state);
std::string table1_csv(const std::vector<Table1Row>& rows);
std::string trace_csv(const std::vector<StageReport>& stages);
/// Grid image with the two boundary curves; viewBox fitted to the outer
/// polygon with a 2% margin.
std::string grid_svg(const ScMap& map, int radii, int rays);

struct ReferenceRow {
    std::string label;
    double a = 0, b = 0, c = 0, d = 0;
    double modulus = 0, capacity = 0;
    std::string source;
};

struct ComparisonRow {
    ReferenceRow ref;
    double modulus = 0;
    double abs_dev = 0;
    double rel_dev = 0;
    double cap_dev = 0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    double worst_abs = 0;
    std::string worst_label;
};

/// Reads a table of {a, b, c, d, entries: [{source, modulus, capacity}]}.
/// Checks Cap * Mod = 1 per entry.
std::vector<ReferenceRow> load_reference(const json& j);
/// Computed moduli keyed by descriptor "a,b,c,d"; throws ValidationError on
/// a computed descriptor missing from the table.
Comparison compare_reference(const std::vector<std::pair<std::string, double>>& computed,
                             const std::vector<ReferenceRow>& table, const std::string& source);
std::string descriptor(double a, double b, double c, double d);

}  // namespace ringmap
