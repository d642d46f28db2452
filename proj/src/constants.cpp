#include "nlacf/constants.hpp"

#include <cmath>

#include "nlacf/gauss.hpp"
#include "nlacf/parallel.hpp"

namespace nlacf {

namespace {

void check_order(int n, double s) {
    if (n < 1 || n > 3) throw NlacfError("constants: n must be 1, 2 or 3");
    if (!(s > 0.0 && s < 1.0)) throw NlacfError("constants: s must lie in (0, 1)");
}

}  // namespace

double defining_integral(double s, const QuadratureSpec& spec) {
    check_order(1, s);
    spec.validate();
    const double nu = 1.0 + 2.0 * s;
    // Near zero 1 - cos t = 2 sin^2(t/2): cancellation-free, profile ~ t^(1-2s).
    auto near = [&](double t) {
        const double h = std::sin(0.5 * t);
        return 2.0 * h * h * std::pow(t, -nu);
    };
    Integral head = integrate_singular(near, 1.0, 1.0 - 2.0 * s, 0.0, spec);

    // Oscillatory middle range on pi-aligned panels, summed via the panel
    // backend; period-long panels keep each Gauss sum well resolved.
    const long long k_max = 20000;  // T = k_max * pi
    const double T = k_max * M_PI;
    const GaussRule& g = gauss_legendre(spec.nodes_per_panel);
    std::vector<double> partial;
    panel_sums(static_cast<std::size_t>(k_max), [&](std::size_t k) {
        double a = (k == 0) ? 1.0 : k * M_PI;
        double b = (k + 1) * M_PI;
        if (b <= a) return 0.0;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double t = mid + half * g.x[i];
            acc += g.w[i] * (1.0 - std::cos(t)) * std::pow(t, -nu);
        }
        return acc * half;
    }, partial);
    double middle = 0.0;
    for (double v : partial) middle += v;

    // Tail beyond T: int t^(-nu) dt = T^(-2s)/(2s) exactly, and by parts
    // int_T^inf cos(t) t^(-nu) dt = -sin(T) T^(-nu) + nu cos(T) T^(-nu-1) + O(T^(-nu-2)).
    const double tail = std::pow(T, -2.0 * s) / (2.0 * s) + std::sin(T) * std::pow(T, -nu) -
                        nu * std::cos(T) * std::pow(T, -nu - 1.0);
    return head.value + middle + tail;
}

double sphere_factor(int n, double s, const QuadratureSpec& spec) {
    check_order(n, s);
    switch (n) {
        case 1:
            return 2.0;
        case 2: {
            // 4 int_0^{pi/2} cos(th)^{2s} dth; integrand ~ u^{2s} at u = pi/2 - th.
            auto f = [&](double u) { return std::pow(std::sin(u), 2.0 * s); };
            return 4.0 * integrate_singular(f, 0.5 * M_PI, 2.0 * s, 0.0, spec).value;
        }
        case 3:
            return 4.0 * M_PI / (2.0 * s + 1.0);
    }
    return 0.0;
}

double c_from_integral(int n, double s, const QuadratureSpec& spec) {
    return 1.0 / (sphere_factor(n, s, spec) * defining_integral(s, spec));
}

double closed_form_c(int n, double s) {
    check_order(n, s);
    return s * std::pow(4.0, s) * std::tgamma(0.5 * n + s) /
           (std::pow(M_PI, 0.5 * n) * std::tgamma(1.0 - s));
}

double closed_form_a(int n, double s) {
    check_order(n, s);
    return std::tgamma(0.5 * n) * std::pow(M_PI, -0.5 * n - 1.0) * std::sin(M_PI * s);
}

double closed_form_mu(int n, double s) {
    check_order(n, s);
    return std::pow(2.0, s) * std::pow(M_PI, -0.5 * n) *
           std::tgamma(0.5 * (n + s + 1.0)) / std::tgamma(0.5 * (1.0 - s));
}

std::optional<double> closed_form_kappa(int n, double s) {
    check_order(n, s);
    if (2.0 * s == static_cast<double>(n)) return std::nullopt;
    return std::pow(2.0, -2.0 * s) * std::tgamma(0.5 * n - s) /
           (std::tgamma(s) * std::pow(M_PI, 0.5 * n));
}

double asymptotic_c(int n) { return 4.0 / unit_ball_volume(n); }

double asymptotic_a(int n) { return 4.0 / (n * unit_ball_volume(n)); }

FracParams make_params(int n, double s, const QuadratureSpec& spec) {
    check_order(n, s);
    FracParams p;
    p.n = n;
    p.s = s;
    p.c_ns = c_from_integral(n, s, spec);
    p.a_ns = closed_form_a(n, s);
    p.mu_ns = closed_form_mu(n, s);
    p.omega_n = unit_ball_volume(n);
    p.kappa_ns = closed_form_kappa(n, s);
    return p;
}

}  // namespace nlacf
