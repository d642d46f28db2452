#ifndef NLACF_CONSTANTS_HPP
#define NLACF_CONSTANTS_HPP

#include <optional>

#include "nlacf/quadrature.hpp"
#include "nlacf/types.hpp"

namespace nlacf {

/// Normalization constants for the fractional operators at order s in R^n.
struct FracParams {
    int n = 1;
    double s = 0.5;
    double c_ns = 0.0;    // fractional Laplacian normalization
    double a_ns = 0.0;    // boundary/Poisson normalization
    double mu_ns = 0.0;   // fractional gradient normalization
    double omega_n = 0.0; // unit ball volume
    // Fundamental-solution constant; absent exactly when 2s = n (log case).
    std::optional<double> kappa_ns;
};

/// I(s) = int_0^inf (1 - cos t) t^(-1-2s) dt, evaluated numerically with an
/// analytic oscillatory tail. Valid for s in (0, 1).
double defining_integral(double s, const QuadratureSpec& spec);

/// S_n(s) = int_{S^{n-1}} |w_1|^(2s) dw.
double sphere_factor(int n, double s, const QuadratureSpec& spec);

/// c_{n,s} from its defining integral: 1 / (S_n(s) * I(s)).
double c_from_integral(int n, double s, const QuadratureSpec& spec);

/// Gamma-function closed forms (cross-checks for the integral route).
double closed_form_c(int n, double s);
double closed_form_a(int n, double s);
double closed_form_mu(int n, double s);
std::optional<double> closed_form_kappa(int n, double s);

/// lim_{s->1} c_{n,s} / (1 - s) = 4 / omega_n.
double asymptotic_c(int n);
/// lim_{s->1} 2 a_{n,s} / (1 - s) = 4 / (n omega_n).
double asymptotic_a(int n);

/// Full constant set; c_ns comes from the defining integral (the closed form
/// is kept as an independent cross-check in the tests).
FracParams make_params(int n, double s, const QuadratureSpec& spec = QuadratureSpec{});

}  // namespace nlacf

#endif
