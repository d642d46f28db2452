#ifndef NLACF_QUADRATURE_HPP
#define NLACF_QUADRATURE_HPP

#include <functional>
#include <limits>
#include <vector>

#include "nlacf/types.hpp"

namespace nlacf {

/// All discretization knobs for the singular-integral engine.
struct QuadratureSpec {
    int panels = 40;             // graded panels per singular endpoint
    double grading_ratio = 0.5;  // geometric ratio in (0,1)
    int nodes_per_panel = 12;    // Gauss-Legendre order per panel
    int angular_nodes = 64;      // n=2: equispaced nodes on the circle
    int polar_nodes = 16;        // n=3: Gauss nodes in cos(phi)
    int azimuth_nodes = 32;      // n=3: equispaced azimuth nodes
    int outer_nodes = 24;        // Gauss nodes for functional r-integrals
    double tail_tol = 1e-12;
    double target_rel_tol = 1e-8;

    void validate() const;
    /// Half-resolution companion used for error estimates.
    QuadratureSpec halved() const;
    /// Doubled resolution (convergence checks).
    QuadratureSpec doubled() const;
    /// Defaults with the per-dimension target tolerance.
    static QuadratureSpec for_dim(int n);
};

/// Declared far-field bound |u(y)| <= A*|y|^(-p) for |y| >= R0.
/// p = +inf encodes compact support of radius R0; p < 0 encodes growth.
struct TailEnvelope {
    double A = 1.0;
    double p = 0.0;
    double R0 = 1.0;

    bool compact() const { return std::isinf(p) && p > 0; }
    static TailEnvelope compact_support(double radius) {
        return {0.0, std::numeric_limits<double>::infinity(), radius};
    }
    /// Envelope valid for distances measured from a point at |shift| from
    /// the origin (coarser constants, same decay rate).
    TailEnvelope shifted(double shift) const;
};

/// Radius T such that the closed-form bound on
///   int_{|y|>T} A*|y|^(-p) * |y|^(-kernel_decay) dy
/// is below tol. Rejects non-integrable combinations (p + kernel_decay <= n).
double truncation_radius(const TailEnvelope& envelope, double kernel_decay, double tol, int n);

using Fn1D = std::function<double(double)>;

/// Integral of f over offsets t in (0, len], where f ~ c * t^beta as t -> 0
/// with beta > -1. Graded geometric panels toward 0 down to
/// max(len * ratio^panels, core_floor); the remaining core is closed by the
/// power-law extrapolation f(t0) * t0 / (beta + 1). core_floor guards
/// integrands whose evaluation cancels catastrophically at tiny offsets.
Integral integrate_singular(const Fn1D& f, double len, double beta, double core_floor,
                            const QuadratureSpec& spec);

/// Smooth integral over [a, b] on a uniform mesh of `panels` panels.
Integral integrate_smooth(const Fn1D& f, double a, double b, int panels,
                          const QuadratureSpec& spec);

/// Far-field integral over [a, b], 0 < a < b, on geometrically spaced panels
/// (suited to algebraically decaying integrands over wide ranges).
Integral integrate_geometric(const Fn1D& f, double a, double b, const QuadratureSpec& spec);

/// Angular rule: unit directions and weights summing to the surface measure
/// of S^{n-1}. Symmetric under dir -> -dir, so odd integrands cancel exactly.
/// Nodes are offset so no direction lies on a coordinate axis for n >= 2.
struct AngularRule {
    std::vector<Vec> dir;
    std::vector<double> w;
    std::size_t size() const { return dir.size(); }
};

AngularRule angular_rule(int n, const QuadratureSpec& spec);
/// Rule with every direction rotated (rotation invariance tests).
AngularRule rotated(const AngularRule& rule, double angle_xy, double angle_xz = 0.0);

/// Integrand for the radial-angular engine: value at radius rho in direction
/// dir, with `delta` the exact distance |rho - singular_radius| (avoids
/// cancellation when evaluating kernels like (rho^2 - r^2)^(-s)).
struct RadialIntegrand {
    double beta = 0.0;           // radial profile ~ delta^beta near singular_radius
    double singular_radius = 0.0;
    double core_floor = 0.0;     // minimum trustworthy offset for the evaluator
    std::function<double(double rho, double delta, const Vec& dir)> eval;
};

/// integral over the annulus singular_radius < |y| < outer_radius of
/// eval(|y|, |y| - singular_radius, y/|y|), with the surface measure applied
/// by the angular rule and the radial measure rho^{n-1} applied here.
Integral integrate_radial(const RadialIntegrand& integrand, const QuadratureSpec& spec,
                          double outer_radius, int n,
                          const AngularRule* rule_override = nullptr);

/// Resolution-doubling convergence report for integrate_radial.
struct ConvergenceReport {
    double value_coarse = 0.0;
    double value_fine = 0.0;
    double value_finest = 0.0;
    double observed_order = 0.0;  // log2 of consecutive error ratio
    bool monotone_decay = false;
};

ConvergenceReport self_check(const QuadratureSpec& spec, const RadialIntegrand& integrand,
                             double outer_radius, int n);

}  // namespace nlacf

#endif
