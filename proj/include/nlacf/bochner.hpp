#ifndef NLACF_BOCHNER_HPP
#define NLACF_BOCHNER_HPP

#include <array>
#include <vector>

#include "nlacf/operators.hpp"

namespace nlacf {

/// Term-by-term evaluation of a nonlocal Bochner-type identity
///   lhs = term_cross - term_square
/// where lhs is (-Delta)^s of the squared-gradient surrogate at x.
struct BochnerResidual {
    double lhs = 0.0;
    double term_cross = 0.0;
    double term_square = 0.0;  // nonnegative up to quadrature error
    double residual = 0.0;     // lhs - (term_cross - term_square)
    double combined_error = 0.0;

    double scale() const {
        return std::max({std::abs(lhs), std::abs(term_cross), std::abs(term_square)});
    }
};

/// Pointwise fractional inner product
///   (c/2) int (u(x)-u(y))(v(x)-v(y)) / |x-y|^(n+2s) dy,
/// which converges to <grad u(x), grad v(x)> as s -> 1.
OperatorValue fractional_inner_product(const ScalarField& u, const ScalarField& v, const Vec& x,
                                       const FracParams& params, const QuadratureSpec& spec);

/// Identity for the energy density G_u: lhs = (-Delta)^s G_u(x),
/// term_cross = 2c int (u(x)-u(x-z)) ((-Δ)^s u(x) - (-Δ)^s u(x-z)) /|z|^(n+2s),
/// term_square = c^2 double integral of the squared double difference.
/// Cost guard: n >= 2 requires an explicitly lowered target tolerance.
BochnerResidual bochner_residual_G(const ScalarField& u, const Vec& x, const FracParams& params,
                                   const QuadratureSpec& spec);

/// Identity for |grad^s u|^2: term_cross = 2 <grad^s u, (-Delta)^s grad^s u>,
/// term_square = sum_i G_{partial^s_i u}. With commute_route, the middle
/// operator is evaluated as partial^s_i (-Delta)^s u instead (the operators
/// commute).
BochnerResidual bochner_residual_grad(const ScalarField& u, const Vec& x,
                                      const FracParams& params, const QuadratureSpec& spec,
                                      bool commute_route = false);

/// s-mean kernel integral over the ball,
///   a_ns int_{B_r} (r^2-|y|^2)^(-s) |y|^(2s-n) g(y) dy,
/// which converges to the surface average of g over the sphere of radius r
/// as s -> 1 (and equals it exactly for constants).
OperatorValue kernel_mean(const ScalarField& g, double r, const FracParams& params,
                          const QuadratureSpec& spec);

/// Plain surface average of g over the sphere of radius r.
double surface_average(const ScalarField& g, double r, int n, const QuadratureSpec& spec);

struct LimitCheck {
    double value = 0.0;
    double target = 0.0;
    double abs_err() const { return std::abs(value - target); }
};

struct LimitRow {
    double s = 0.0;
    LimitCheck inner_product;  // vs <grad u, grad v>
    LimitCheck grad_sq;        // G_u/2 vs |grad u|^2
    LimitCheck second_diff;    // term_square vs 4 |D^2 u|^2
    LimitCheck kernel;         // kernel_mean vs surface average
};

struct LimitReport {
    std::vector<LimitRow> rows;
    std::array<bool, 4> decreasing{};  // per check, over the s grid
    bool all_decreasing() const {
        return decreasing[0] && decreasing[1] && decreasing[2] && decreasing[3];
    }
};

/// s -> 1 limits of the four nonlocal objects at the point x; u must be C^4
/// with gradient and Hessian oracles; n = 1 only. The companion field for the
/// inner-product check is a shifted Gaussian.
LimitReport local_limit_check(const ScalarField& u, const Vec& x,
                              const std::vector<double>& s_grid, const QuadratureSpec& spec);

/// Moment integral of the squared symmetrized monomial of height k over the
/// unit ball against the |h|^(-n-2s) kernel: closed form
///   n omega_n / (2 C(n,k) (k - s)),  C(n,k) = max(1, binom(n,k)).
double moment_integral_closed(int n, int k, const std::array<int, 3>& alpha, double s);

/// Companion quadrature evaluation of the same quantity.
double moment_integral_quadrature(int n, int k, const std::array<int, 3>& alpha, double s,
                                  const QuadratureSpec& spec);

}  // namespace nlacf

#endif
