#ifndef NLACF_FUNCTIONALS_HPP
#define NLACF_FUNCTIONALS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nlacf/operators.hpp"

namespace nlacf {

/// Which nonlocal ACF functional / monotonicity hypothesis is exercised.
/// G:     density G_u,        hypothesis (-Delta)^s G_u <= 0 near 0.
/// Grad:  density |grad^s u|^2, hypothesis (-Delta)^s |grad^s u|^2 <= 0.
/// GradF: density |grad^s u|^2, hypothesis <grad^s u, grad^s f> <= 0 with
///        f = (-Delta)^s u.
enum class AcfVariant { G, Grad, GradF };

/// Record of the numerically sampled sign hypothesis.
struct PreconditionReport {
    std::string description;
    std::vector<Vec> points;
    std::vector<double> samples;
    std::vector<double> errors;
    double max_positive_excursion = 0.0;
    double tolerance = 0.0;
    bool met = false;
};

struct FunctionalCurve {
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> error_estimates;
    double monotonicity_defect = 0.0;  // max over pairs of (J(R_i) - J(R_{i+1}))_+
    std::size_t monotone_prefix = 0;   // #points in the largest passing prefix
    bool defect_pass = false;          // defect <= 3 * summed error estimates
    PreconditionReport precondition;
};

/// Core outer integral: R^(-1-s) int_0^R r^s M_s(density, r)(0) dr by
/// Gauss-Legendre with spec.outer_nodes nodes (exterior-ball route).
OperatorValue acf_outer(const ScalarField& density, double R, const FracParams& params,
                        const QuadratureSpec& spec);

/// Kelvin-transformed interior-ball route for the same quantity:
/// (a/R^(1+s)) int_0^R r^s int_{B_r} (r^2-|x|^2)^(-s) |x|^(2s-n)
///     density(r^2 x / |x|^2) dx dr.
OperatorValue acf_outer_kelvin(const ScalarField& density, double R, const FracParams& params,
                               const QuadratureSpec& spec);

// Convenience wrappers constructing the derived density internally.
OperatorValue j_acf(const ScalarField& u, double R, const FracParams& params,
                    const QuadratureSpec& spec);
OperatorValue j_acf_kelvin(const ScalarField& u, double R, const FracParams& params,
                           const QuadratureSpec& spec);
OperatorValue j_acf_grad(const ScalarField& u, double R, const FracParams& params,
                         const QuadratureSpec& spec);

/// Local ACF integrand: (1/R^2) int_{B_R} |grad u|^2 |x|^(2-n) dx. Uses the
/// gradient oracle when present, central differences otherwise (C^2 needed).
double j_acf_local(const ScalarField& u, double R, int n, const QuadratureSpec& spec);

/// Radius sweep of the chosen functional with the sign hypothesis sampled
/// first (9 points: origin, axis points at 0.1*min(R_grid), seeded fill).
FunctionalCurve monotonicity_experiment(const ScalarField& u, const std::vector<double>& R_grid,
                                        const FracParams& params, const QuadratureSpec& spec,
                                        AcfVariant which, std::uint64_t seed = 0);

struct StabilityRow {
    double s = 0.0;
    double value = 0.0;
    double target = 0.0;
    double abs_err = 0.0;
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
    double local_target = 0.0;       // (2/(n omega_n)) * local functional
    double extrapolated = 0.0;       // Richardson in (1-s) from the last two rows
    double extrapolated_rel_err = 0.0;
    bool tail_decreasing = false;    // |J^s - target| decreasing over the grid tail
};

/// s -> 1 limit: J^s against the fixed local target over an s-grid.
StabilityReport stability_experiment(const ScalarField& u, double R,
                                     const std::vector<double>& s_grid, int n,
                                     const QuadratureSpec& spec, AcfVariant which);

struct BoundRow {
    double R = 0.0;
    double value = 0.0;     // J^s(u, R)
    double ratio = 0.0;     // J^s * R^(2s) / weighted integral
};

struct BoundReport {
    std::vector<BoundRow> rows;
    double weighted_integral = 0.0;  // int density(x) |x|^(2s-n) dx
    double max_ratio = 0.0;
    double max_ratio_refined = 0.0;  // same at doubled quadrature resolution
    bool stable = false;             // refined within 10%
};

/// ACF-type upper bound: the constant is existential, so only boundedness
/// and refinement-stability of the ratio are asserted. Rejects 2s = n.
BoundReport acf_bound_experiment(const ScalarField& u, const std::vector<double>& R_grid,
                                 const FracParams& params, const QuadratureSpec& spec,
                                 AcfVariant which);

struct GradEstimateReport {
    double g0 = 0.0;                  // G_u(0)
    double bracket = 0.0;             // u(0)^2 + sup|u| sup|f|
    std::vector<double> radii;
    std::vector<double> ratios;       // G_u(0) R^(2s) / bracket
    double normalization_drift = 0.0; // ratio change under u -> u/(sup|u|+sup|f|)
    PreconditionReport precondition;
    bool finite = false;
};

/// Interior gradient-estimate experiment for u supported in the unit ball,
/// f = (-Delta)^s u.
GradEstimateReport gradient_estimate_experiment(const ScalarField& u, const FracParams& params,
                                                const QuadratureSpec& spec,
                                                std::uint64_t seed = 0);

}  // namespace nlacf

#endif
