#ifndef NLACF_OPERATORS_HPP
#define NLACF_OPERATORS_HPP

#include <functional>

#include "nlacf/constants.hpp"
#include "nlacf/fields.hpp"
#include "nlacf/quadrature.hpp"
#include "nlacf/types.hpp"

namespace nlacf {

/// Result of a pointwise operator evaluation. Gradient-type operators fill
/// `vector`; scalar operators fill `value`.
struct OperatorValue {
    double value = 0.0;
    Vec vector = vec0();
    double abs_error_estimate = 0.0;
    double truncation_radius_used = 0.0;
};

struct VectorField {
    int dim = 1;
    std::function<Vec(const Vec&)> eval;
    TailEnvelope tail;
};

/// Fractional Laplacian in the principal-value-free second-difference form
///   (c/2) int (2u(x) - u(x+z) - u(x-z)) / |z|^(n+2s) dz.
/// Far field truncated by the envelope with an analytic compensation term for
/// the non-decaying 2u(x) part. Declared singular points of u are carved out
/// by a radially-continued substitute plus an explicitly graded correction
/// integral around each singular point.
OperatorValue frac_laplacian(const ScalarField& u, const Vec& x, const FracParams& params,
                             const QuadratureSpec& spec);

/// Nonlocal energy density G_u(y) = c int (u(y) - u(eta))^2 / |y-eta|^(n+2s).
OperatorValue energy_density_G(const ScalarField& u, const Vec& y, const FracParams& params,
                               const QuadratureSpec& spec);

/// Riesz fractional gradient: component i is
///   mu int (eta_i - y_i)(u(eta) - u(y)) / |eta - y|^(n+s+1) d eta.
/// No principal value needed: the antipodally symmetric angular rule cancels
/// the odd kernel against the constant term exactly.
OperatorValue frac_gradient(const ScalarField& u, const Vec& y, const FracParams& params,
                            const QuadratureSpec& spec);

/// Fractional divergence, dual to frac_gradient:
///   mu int (y - x) . (phi(y) - phi(x)) / |y - x|^(n+s+1) dy.
OperatorValue frac_divergence(const VectorField& phi, const Vec& x, const FracParams& params,
                              const QuadratureSpec& spec);

/// Nonlocal normal derivative N_s^D f(x) = int_D (f(x)-f(y))/|x-y|^(n+2s) dy
/// for x strictly outside the closed ball D. Unnormalized, as defined.
OperatorValue nonlocal_normal(const ScalarField& f, const Ball& D, const Vec& x,
                              const FracParams& params, const QuadratureSpec& spec);

/// s-mean M_s(g, r)(x) = int_{|y|>r} a r^(2s) ((|y|^2-r^2)^s |y|^n)^(-1) g(x-y) dy.
OperatorValue s_mean(const ScalarField& g, const Vec& x, double r, const FracParams& params,
                     const QuadratureSpec& spec);

/// u^2 as a field (for the product-rule identity); oracles propagated.
ScalarField squared_field(const ScalarField& u);

// --- Derived fields -------------------------------------------------------
// Each wraps a pointwise operator as a ScalarField with a concurrent memo
// cache (quantized coordinates) and a sampled tail envelope. The declared
// regularity of the derived fields is trusted metadata.

ScalarField derived_G(const ScalarField& u, const FracParams& params, const QuadratureSpec& spec);
ScalarField derived_grad_sq(const ScalarField& u, const FracParams& params,
                            const QuadratureSpec& spec);
ScalarField derived_partial_s(const ScalarField& u, int component, const FracParams& params,
                              const QuadratureSpec& spec);
ScalarField derived_frac_lap(const ScalarField& u, const FracParams& params,
                             const QuadratureSpec& spec);

// --- Identity drivers -----------------------------------------------------

/// Both sides of the nonlocal divergence theorem on the ball D:
///   int_D [-(-Delta)^s f] = c int_{D^c} N_s^D f.
struct TwoSided {
    double lhs = 0.0;
    double rhs = 0.0;
    double error = 0.0;
    double rel_residual() const {
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
    }
};

TwoSided divergence_identity(const ScalarField& f, const Ball& D, const FracParams& params,
                             const QuadratureSpec& spec);

/// Integration-by-parts identity: bilinear Gagliardo form over pairs meeting
/// D against int_D g (-Delta)^s f + c int_{D^c} g N_s^D f.
TwoSided parts_identity(const ScalarField& f, const ScalarField& g, const Ball& D,
                        const FracParams& params, const QuadratureSpec& spec);

/// Green's second identity:
///   int_D (g [-(-Δ)^s f] - f [-(-Δ)^s g]) = c int_{D^c} (g N_s^D f - f N_s^D g).
TwoSided green_identity(const ScalarField& f, const ScalarField& g, const Ball& D,
                        const FracParams& params, const QuadratureSpec& spec);

}  // namespace nlacf

#endif
