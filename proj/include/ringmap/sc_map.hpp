#pragma once

// Schwarz-Christoffel map from the annulus q < |tau| < 1 onto a doubly
// connected polygonal domain, written in the strip coordinate z = -i log tau:
//
//   F(z) = C1 * int_0^z exp(c xi) prod_v sigma(xi - z_v)^(alpha_v - 1) dxi + C2
//
// Outer prevertices sit on Im z = 0 (z = x), inner ones on Im z = h/2
// (z = x + omega2/2). Increasing x on the outer line runs around the outer
// polygon counter-clockwise; on the inner line it runs around the hole
// counter-clockwise as well, so the domain stays on the right.

#include <optional>
#include <string>
#include <vector>

#include "ringmap/elliptic.hpp"
#include "ringmap/quadrature.hpp"

namespace ringmap {

enum class Side { outer, inner };

struct Vertex {
    cplx w;
    double alpha;  ///< interior angle / pi
};

struct DomainSpec {
    std::vector<Vertex> outer;
    std::vector<Vertex> inner;

    /// Angle sums and vertex counts; throws ValidationError.
    void validate() const;
};

struct AccessoryState {
    std::vector<double> x1;  ///< outer prevertices
    std::vector<double> x2;  ///< inner prevertices, z = x + omega2/2
    double height = 0.0;     ///< |omega2|
    cplx C1{1.0, 0.0};
    cplx C2{0.0, 0.0};

    PeriodLattice lattice() const { return PeriodLattice(height); }
    cplx omega2() const { return {0.0, height}; }
    /// Mod = |omega2| / (2 omega1).
    double modulus() const { return height / (2.0 * kOmega1); }
};

/// c = (eta1/omega1) sum_v (alpha_v - 1) x_v + eta2 with x_v the stored
/// representatives. Moving a representative by 2 pi changes c by
/// (alpha_v - 1) eta1 and is compensated by a constant factor in C1.
cplx compute_c(const AccessoryState& state, const DomainSpec& spec);

struct Prevertex {
    Side side;
    int index;   ///< position within its side
    cplx z;      ///< strip coordinate
    double beta; ///< alpha - 1
};

/// Point on an integration path. When `anchor` is set, xi equals
/// z_anchor + 2 pi shift + offset and the anchor's own factor is evaluated
/// from `offset` directly.
struct PathPoint {
    cplx xi;
    int anchor = -1;
    long shift = 0;
    cplx offset{0.0, 0.0};
};

struct VertexResidual {
    Side side;
    int index;
    cplx image;
    cplx target;
    double error;
};

struct SideResidual {
    Side side;
    int from;
    double length;
    double target;
    double error;
};

struct ResidualReport {
    std::vector<VertexResidual> vertices;
    std::vector<SideResidual> sides;
    double max_vertex_error = 0.0;
    double max_side_error = 0.0;
};

struct Polyline {
    std::string kind;  ///< "circle", "ray" or "boundary"
    double parameter;  ///< radius or angle
    std::vector<cplx> points;
};

class ScMap {
public:
    ScMap(DomainSpec spec, AccessoryState state, QuadOptions quad = {});

    const DomainSpec& spec() const { return spec_; }
    const AccessoryState& state() const { return state_; }
    const PeriodLattice& lattice() const { return lattice_; }
    cplx c() const { return c_; }
    const std::vector<Prevertex>& prevertices() const { return pv_; }
    /// Global index into prevertices() of a side-local index.
    int global_index(Side side, int index) const;

    /// log F'(xi)/C1 on the analytic branch of the strip.
    cplx log_integrand(cplx xi) const;
    cplx log_integrand(const PathPoint& p) const;
    /// Same product with prevertex `skip` left out; F''(tip) = C1 exp(...).
    cplx log_integrand_without(cplx xi, int skip) const;

    cplx derivative(cplx z) const;
    /// F''(z_tip) for a prevertex with alpha = 2.
    cplx second_derivative_at_tip(Side side, int index) const;

    /// int_0^z F'/C1 along 0 -> i h/4 -> Re z + i h/4 -> z.
    cplx raw_integral(cplx z) const;
    /// Same, ending exactly at a prevertex.
    cplx raw_integral_to(Side side, int index) const;
    /// Raw integral between two points of the strip, straight segment.
    /// Either end may be anchored at a prevertex.
    cplx raw_segment(const PathPoint& a, const PathPoint& b) const;

    cplx eval(cplx z) const { return state_.C1 * raw_integral(z) + state_.C2; }
    cplx eval_at(Side side, int index) const {
        return state_.C1 * raw_integral_to(side, index) + state_.C2;
    }
    /// Images of every prevertex of one side, marching along its line.
    std::vector<cplx> boundary_images(Side side) const;

    ResidualReport vertex_residuals() const;

    /// Images of n_radii circles |tau| = r (geometric in (q, 1)) and
    /// n_rays rays, refined until consecutive points differ by at most
    /// `max_step` times the diameter of the outer polygon.
    std::vector<Polyline> grid_image(int n_radii, int n_rays, double max_step = 0.01) const;
    /// Image of one boundary line, sampled densely.
    Polyline boundary_curve(Side side, double max_step = 0.01) const;

    /// C1 and C2 from the first two outer vertices (raw integrals with C1 = 1).
    static std::pair<cplx, cplx> frame_constants(const DomainSpec& spec,
                                                 const AccessoryState& state,
                                                 QuadOptions quad = {});

    PathPoint anchored(int v, long shift = 0) const;

    /// Accumulated quadrature error estimate of the last call (diagnostic).
    double last_error() const { return last_error_; }

private:
    cplx factor(int v, cplx xi) const;
    cplx integrate_path(const std::vector<PathPoint>& nodes) const;
    cplx path_to(const PathPoint& end) const;
    PathPoint snap(cplx z) const;
    static PathPoint free_point(cplx z);
    /// 2 pi shifts that make the prevertices of one side increase along the line.
    std::vector<long> line_shifts(Side side) const;
    std::vector<cplx> sample_segment(const PathPoint& a, const PathPoint& b, cplx fa,
                                     double step) const;
    double diameter() const;

    DomainSpec spec_;
    AccessoryState state_;
    QuadOptions quad_;
    PeriodLattice lattice_;
    cplx c_;
    std::vector<Prevertex> pv_;
    mutable double last_error_ = 0.0;
};

}  // namespace ringmap
