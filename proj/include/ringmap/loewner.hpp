#pragma once

// Parametric continuation of the annulus map: slit tips move with prescribed
// constant velocities and the prevertices, the period omega2 and C1 follow a
// Loewner-Komatu type ODE. H(z, t) = sum_j L_j K(z; z_j) with
//
//   K(z; z0) = zeta(z - z0) - eta1 z / omega1 + zeta(z0),   L_j = E_j' / F''(z_j).
//
// A passive prevertex moves by z' = -H(z); omega2' = i sum L_j; C1 is fixed by
// F(0, t) = C2 = const.

#include <optional>
#include <utility>
#include <vector>

#include "ringmap/sc_map.hpp"

namespace ringmap {

cplx villat_kernel(cplx z, cplx z0, const PeriodLattice& lattice);

/// Tip equation. `derived` keeps the regular part of H at the tip and every
/// other prevertex in the log-derivative of F''; `literal` drops the regular
/// self term and the factors of the tip's own slit corners.
enum class TipFormula { derived, literal };

/// Request for one moving tip at the start of a stage.
struct StageTip {
    Side side = Side::inner;
    int vertex = 0;  ///< index in the vertex list at stage start
    /// true: grow a new slit from the vertex (it becomes corner, tip, corner);
    /// false: the vertex is already a tip (alpha = 2) and moves along its slit.
    bool branch = false;
    cplx end;  ///< tip position at t = 1
    std::optional<double> phi1;
    std::optional<double> phi2;
};

struct MovingTip {
    Side side;
    int index;                  ///< prevertex index on its side
    cplx start;
    cplx end;
    std::vector<int> own;       ///< corner prevertices of this slit
    cplx position(double t) const { return start + (end - start) * t; }
    cplx velocity() const { return end - start; }
};

struct StageOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double seed = 1e-12;        ///< split of a fresh triple point
    double gap_atol = 1e-16;    ///< absolute floor of the relative gap error
    double end_trim = 0.0;      ///< stop at t1 - end_trim
    double edge_window = 1e-3;  ///< near both ends of the span ...
    double edge_step = 1e-5;    ///< ... the step is capped by this
    double drift_tol = 1e-7;
    double min_gap = 1e-15;
    long max_steps = 2000000;
    TipFormula tip_formula = TipFormula::derived;
};

struct ContinuationDiagnostics {
    double max_drift = 0.0;
    double min_gap = 0.0;
    long accepted = 0;
    long rejected = 0;
    double t_end = 0.0;
    std::vector<std::pair<double, double>> modulus_trace;  ///< (t, m)
};

struct PreparedStage {
    DomainSpec spec;
    AccessoryState state;
    std::vector<MovingTip> tips;
};

/// Applies branching to the spec only (used for config validation).
PreparedStage plan_stage(const DomainSpec& spec, const std::vector<StageTip>& tips);
/// Branching plus the seeded prevertices x - seed, x, x + seed.
PreparedStage prepare_stage(const DomainSpec& spec, const AccessoryState& state,
                            const std::vector<StageTip>& tips, double seed = 1e-12);

/// Derivative of the real state vector [x1..., x2..., h, Re C1, Im C1].
class LoewnerSystem {
public:
    LoewnerSystem(DomainSpec spec, std::vector<MovingTip> tips,
                  TipFormula formula = TipFormula::derived);

    struct Rhs {
        std::vector<double> dy;
        std::vector<cplx> L;
        cplx omega2_dot;
        cplx modulus_dot;  ///< omega2' / (2 omega1 i)
        double drift = 0.0;  ///< max |Im| / (1 + |rhs|) over real equations
    };

    std::vector<double> pack(const AccessoryState& s) const;
    AccessoryState unpack(const std::vector<double>& y, cplx C2) const;
    Rhs evaluate(const AccessoryState& s) const;
    /// L for one tip; DegeneracyError when |F''| < 1e-14.
    static cplx tip_coefficient(const MovingTip& tip, const ScMap& map);
    /// H(z) for the current state.
    cplx loewner_field(const AccessoryState& s, cplx z) const;
    /// Smallest cyclic gap between neighbouring prevertices; TopologyError on
    /// a change of the cyclic order.
    double check_order(const std::vector<double>& y) const;

    const DomainSpec& spec() const { return spec_; }
    const std::vector<MovingTip>& tips() const { return tips_; }

private:
    DomainSpec spec_;
    std::vector<MovingTip> tips_;
    TipFormula formula_;
};

struct StageResult {
    DomainSpec spec;
    AccessoryState state;
    std::vector<MovingTip> tips;
    ContinuationDiagnostics diag;
};

/// Integrates a prepared stage from t0 to t1 (end_trim applies at t1) with a
/// Dormand-Prince 5(4) pair. Tip vertices of the returned spec sit at E(t_end).
StageResult integrate_stage(const PreparedStage& stage, const StageOptions& opt = {},
                            double t0 = 0.0, double t1 = 1.0);

const std::vector<std::pair<double, double>>& modulus_trace(const ContinuationDiagnostics& d);

struct MergeGroup {
    Side side = Side::inner;
    int first = 0;  ///< cyclic run of `count` prevertices starting here
    int count = 2;
    std::optional<cplx> w;  ///< image of the merged vertex; default mean of the members
    /// Place the merged prevertex at the (alpha - 1)-weighted mean instead of
    /// the arithmetic one. Keeps c unchanged and the map correct to second
    /// order in the spread. Falls back to the arithmetic mean when the
    /// exponents cancel.
    bool weighted = false;
};

struct MergeReport {
    std::vector<double> spreads;
    cplx c_before;
    cplx c_after;
};

/// Replaces each group by one prevertex at the mean position carrying the
/// summed exponent; a zero exponent drops the vertex. TopologyError when a
/// spread exceeds `tolerance`.
std::pair<DomainSpec, AccessoryState> merge_prevertices(const DomainSpec& spec,
                                                        const AccessoryState& state,
                                                        std::vector<MergeGroup> groups,
                                                        double tolerance = 1e-3,
                                                        MergeReport* report = nullptr);

/// Moves prevertex `index` by 2 pi k and rescales C1 so the map is unchanged.
AccessoryState shift_representative(const DomainSpec& spec, const AccessoryState& state,
                                    Side side, int index, long k);
/// All representatives into [0, 2 pi), map unchanged.
AccessoryState canonical_representatives(const DomainSpec& spec, const AccessoryState& state);

}  // namespace ringmap
