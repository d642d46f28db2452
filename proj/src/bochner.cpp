#include "nlacf/bochner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace nlacf {

namespace {

constexpr double kFirstDiffFloor = 1e-7;
constexpr double kSecondDiffFloor = 1e-6;

void cost_guard(const char* who, int n, const QuadratureSpec& spec) {
    // The squared term is an iterated double integral; at default tolerances
    // it is only affordable in one dimension. Higher dimensions must opt in
    // by relaxing the target tolerance explicitly.
    if (n >= 2 && spec.target_rel_tol < 9.9e-5)
        throw NlacfError(std::string(who) +
                         ": n >= 2 requires an explicitly relaxed target tolerance");
}

/// c^2 double integral of the squared double difference
///   (u(x) - u(x-z) - u(y) + u(y-z))^2 / (|x-y|^(n+2s) |z|^(n+2s))
/// over z and y, with analytic compensation of the constant far-field parts.
OperatorValue squared_term(const ScalarField& u, const Vec& x, const FracParams& params,
                           const QuadratureSpec& spec) {
    if (!u.singular_points.empty())
        throw NlacfError("bochner squared term: singular fields not supported");
    const int n = params.n;
    const double s = params.s;
    const double kd = n + 2.0 * s;
    const double ux = u.eval(x);
    const double tail_factor = unit_sphere_measure(n) * std::pow(2.0, -2.0 * s) / (2.0 * s);

    const double Tz =
        std::max(2.0, truncation_radius(u.tail.shifted(norm(x)), kd, spec.tail_tol, n));

    // Worst-case inner-quadrature error observed across outer nodes; folded
    // into the overall estimate at the end.
    std::atomic<double> inner_err{0.0};

    // F(z) = int (D(y,z))^2 |x-y|^(-n-2s) dy with
    // D(y,z) = (u(x) - u(x-z)) - (u(y) - u(y-z)).
    auto inner_integral = [&](const Vec& z) {
        const double diff_x = ux - u.eval(x - z);
        const double Ty = std::max(
            2.0, truncation_radius(u.tail.shifted(norm(x) + norm(z)), kd, spec.tail_tol, n));
        RadialIntegrand inner;
        inner.beta = 1.0 - 2.0 * s;  // D ~ |y - x| for fixed z
        inner.core_floor = kSecondDiffFloor;
        inner.eval = [&](double rho, double, const Vec& dir) {
            const Vec y = x + rho * dir;
            const double d = diff_x - (u.eval(y) - u.eval(y - z));
            return d * d * std::pow(rho, -kd);
        };
        Integral val = integrate_radial(inner, spec, Ty, n);
        double prev = inner_err.load();
        while (prev < val.error && !inner_err.compare_exchange_weak(prev, val.error)) {
        }
        // Beyond Ty the double difference tends to the constant diff_x.
        return val.value + diff_x * diff_x * unit_sphere_measure(n) * std::pow(Ty, -2.0 * s) /
                               (2.0 * s);
    };

    RadialIntegrand outer;
    outer.beta = 1.0 - 2.0 * s;  // F(z) ~ |z|^2 near z = 0
    outer.core_floor = kSecondDiffFloor;
    outer.eval = [&](double rho, double, const Vec& dir) {
        return inner_integral(rho * dir) * std::pow(rho, -kd);
    };
    Integral main = integrate_radial(outer, spec, Tz, n);

    // As |z| -> infinity, F(z) -> int (u(x)-u(y))^2 |x-y|^(-n-2s) dy, which is
    // the energy density without its normalizing constant.
    const OperatorValue g = energy_density_G(u, x, params, spec);
    const double f_inf = g.value / params.c_ns;
    const double tail = f_inf * unit_sphere_measure(n) * std::pow(Tz, -2.0 * s) / (2.0 * s);

    OperatorValue out;
    out.truncation_radius_used = Tz;
    out.value = params.c_ns * params.c_ns * (main.value + tail);
    out.abs_error_estimate =
        params.c_ns * params.c_ns *
        (main.error + inner_err.load() * tail_factor + spec.tail_tol * (1.0 + f_inf)) +
        g.abs_error_estimate * tail_factor;
    return out;
}

bool decreasing(const std::vector<double>& e) {
    for (std::size_t i = 1; i < e.size(); ++i)
        if (!(e[i] < e[i - 1] + 1e-12)) return false;
    return e.size() >= 2;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
    return r;
}

double factorial(int m) {
    double r = 1.0;
    for (int i = 2; i <= m; ++i) r *= i;
    return r;
}

void validate_moment_args(int n, int k, const std::array<int, 3>& alpha, double s) {
    if (n < 1 || n > 3) throw NlacfError("moment_integral: n must be 1, 2 or 3");
    if (k < 1) throw NlacfError("moment_integral: k must be positive");
    if (!(s > 0.0 && s < 1.0)) throw NlacfError("moment_integral: s must lie in (0,1)");
    int total = 0;
    for (int i = 0; i < 3; ++i) {
        if (alpha[i] < 0) throw NlacfError("moment_integral: negative multi-index entry");
        if (i >= n && alpha[i] != 0)
            throw NlacfError("moment_integral: multi-index exceeds dimension");
        total += alpha[i];
    }
    if (total != k) throw NlacfError("moment_integral: |alpha| must equal k");
}

}  // namespace

OperatorValue fractional_inner_product(const ScalarField& u, const ScalarField& v, const Vec& x,
                                       const FracParams& params, const QuadratureSpec& spec) {
    if (!u.singular_points.empty() || !v.singular_points.empty())
        throw NlacfError("fractional_inner_product: singular fields not supported");
    const int n = params.n;
    const double s = params.s;
    const double kd = n + 2.0 * s;
    const double ux = u.eval(x);
    const double vx = v.eval(x);

    const double Tu =
        std::max(2.0, truncation_radius(u.tail.shifted(norm(x)), kd, spec.tail_tol, n));
    const double Tv =
        std::max(2.0, truncation_radius(v.tail.shifted(norm(x)), kd, spec.tail_tol, n));
    const double T = std::max(Tu, Tv);

    RadialIntegrand prod;
    prod.beta = 1.0 - 2.0 * s;  // product of two first differences ~ rho^2
    prod.core_floor = kFirstDiffFloor;
    prod.eval = [&](double rho, double, const Vec& dir) {
        const Vec y = x + rho * dir;
        return (ux - u.eval(y)) * (vx - v.eval(y)) * std::pow(rho, -kd);
    };
    Integral main = integrate_radial(prod, spec, T, n);

    OperatorValue out;
    out.truncation_radius_used = T;
    // Beyond T only the constant ux*vx part of the product survives.
    out.value = 0.5 * params.c_ns *
                (main.value +
                 ux * vx * unit_sphere_measure(n) * std::pow(T, -2.0 * s) / (2.0 * s));
    out.abs_error_estimate =
        0.5 * params.c_ns * main.error + params.c_ns * spec.tail_tol * (1.0 + std::abs(ux * vx));
    return out;
}

BochnerResidual bochner_residual_G(const ScalarField& u, const Vec& x, const FracParams& params,
                                   const QuadratureSpec& spec) {
    cost_guard("bochner_residual_G", params.n, spec);
    const ScalarField G = derived_G(u, params, spec);
    const ScalarField w = derived_frac_lap(u, params, spec);

    const OperatorValue lhs = frac_laplacian(G, x, params, spec);
    const OperatorValue ip = fractional_inner_product(u, w, x, params, spec);
    const OperatorValue sq = squared_term(u, x, params, spec);

    BochnerResidual out;
    out.lhs = lhs.value;
    out.term_cross = 4.0 * ip.value;
    out.term_square = sq.value;
    out.residual = out.lhs - (out.term_cross - out.term_square);
    out.combined_error =
        lhs.abs_error_estimate + 4.0 * ip.abs_error_estimate + sq.abs_error_estimate;
    return out;
}

BochnerResidual bochner_residual_grad(const ScalarField& u, const Vec& x,
                                      const FracParams& params, const QuadratureSpec& spec,
                                      bool commute_route) {
    if (params.n >= 3)
        throw NlacfError("bochner_residual_grad: supported for n <= 2 only");
    cost_guard("bochner_residual_grad", params.n, spec);
    const int n = params.n;

    const ScalarField gsq = derived_grad_sq(u, params, spec);
    const OperatorValue lhs = frac_laplacian(gsq, x, params, spec);
    const OperatorValue gx = frac_gradient(u, x, params, spec);

    double cross = 0.0;
    double cross_err = 0.0;
    double square = 0.0;
    double square_err = 0.0;
    ScalarField w;  // built lazily for the commutation route
    if (commute_route) w = derived_frac_lap(u, params, spec);
    OperatorValue w_grad;
    if (commute_route) w_grad = frac_gradient(w, x, params, spec);

    for (int i = 0; i < n; ++i) {
        const ScalarField di = derived_partial_s(u, i, params, spec);
        double mid = 0.0;
        double mid_err = 0.0;
        if (commute_route) {
            // partial^s_i and (-Delta)^s commute (Fourier multipliers).
            mid = w_grad.vector[i];
            mid_err = w_grad.abs_error_estimate;
        } else {
            const OperatorValue lap_di = frac_laplacian(di, x, params, spec);
            mid = lap_di.value;
            mid_err = lap_di.abs_error_estimate;
        }
        cross += 2.0 * gx.vector[i] * mid;
        cross_err += 2.0 * (std::abs(gx.vector[i]) * mid_err +
                            std::abs(mid) * gx.abs_error_estimate);
        const OperatorValue gi = energy_density_G(di, x, params, spec);
        square += gi.value;
        square_err += gi.abs_error_estimate;
    }

    BochnerResidual out;
    out.lhs = lhs.value;
    out.term_cross = cross;
    out.term_square = square;
    out.residual = out.lhs - (out.term_cross - out.term_square);
    out.combined_error = lhs.abs_error_estimate + cross_err + square_err;
    return out;
}

OperatorValue kernel_mean(const ScalarField& g, double r, const FracParams& params,
                          const QuadratureSpec& spec) {
    if (!(r > 0.0)) throw NlacfError("kernel_mean: radius must be positive");
    const int n = params.n;
    const double s = params.s;
    const double a = params.a_ns;

    // Inner region |y| <= r/2: singular only at the origin.
    RadialIntegrand inner;
    inner.beta = 2.0 * s - 1.0;  // |y|^(2s-n) times the rho^(n-1) measure
    inner.eval = [&](double rho, double, const Vec& dir) {
        return std::pow(rho, 2.0 * s - double(n)) * std::pow(r * r - rho * rho, -s) *
               g.eval(rho * dir);
    };
    Integral part_in = integrate_radial(inner, spec, 0.5 * r, n);

    // Outer region r/2 <= |y| < r in boundary offsets t = r - rho, so the
    // (r^2 - |y|^2)^(-s) factor is evaluated as (t (2r - t))^(-s).
    const AngularRule rule = angular_rule(n, spec);
    auto profile = [&](double t) {
        const double rho = r - t;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i)
            acc += rule.w[i] * g.eval(rho * rule.dir[i]);
        return acc * std::pow(rho, 2.0 * s - 1.0) * std::pow(t * (2.0 * r - t), -s);
    };
    Integral part_out = integrate_singular(profile, 0.5 * r, -s, 0.0, spec);

    OperatorValue out;
    out.value = a * (part_in.value + part_out.value);
    out.abs_error_estimate = a * (part_in.error + part_out.error);
    out.truncation_radius_used = r;
    return out;
}

double surface_average(const ScalarField& g, double r, int n, const QuadratureSpec& spec) {
    const AngularRule rule = angular_rule(n, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.w[i] * g.eval(r * rule.dir[i]);
    return acc / unit_sphere_measure(n);
}

LimitReport local_limit_check(const ScalarField& u, const Vec& x,
                              const std::vector<double>& s_grid, const QuadratureSpec& spec) {
    if (u.dim != 1) throw NlacfError("local_limit_check: implemented for n = 1");
    if (!u.has_grad() || !u.has_hess())
        throw NlacfError("local_limit_check: needs gradient and Hessian oracles");
    if (s_grid.size() < 2) throw NlacfError("local_limit_check: need at least two s values");
    for (std::size_t i = 1; i < s_grid.size(); ++i)
        if (!(s_grid[i] > s_grid[i - 1]))
            throw NlacfError("local_limit_check: s grid must increase toward 1");

    const ScalarField v = shifted_field(gaussian_field(1, 0.8), vec(0.3));
    const Vec gu = u.grad(x);
    const Vec gv = v.grad(x);
    const Mat hu = u.hess(x);
    double hess_sq = 0.0;
    for (int i = 0; i < 1; ++i)
        for (int j = 0; j < 1; ++j) hess_sq += hu[i][j] * hu[i][j];
    const double kernel_r = 0.5;

    LimitReport rep;
    for (double s : s_grid) {
        FracParams p = make_params(1, s, spec);
        LimitRow row;
        row.s = s;

        row.inner_product.value = fractional_inner_product(u, v, x, p, spec).value;
        row.inner_product.target = dot(gu, gv);

        row.grad_sq.value = 0.5 * energy_density_G(u, x, p, spec).value;
        row.grad_sq.target = dot(gu, gu);

        row.second_diff.value = squared_term(u, x, p, spec).value;
        row.second_diff.target = 4.0 * hess_sq;

        row.kernel.value = kernel_mean(u, kernel_r, p, spec).value;
        row.kernel.target = surface_average(u, kernel_r, 1, spec);

        rep.rows.push_back(row);
    }

    std::vector<double> e0, e1, e2, e3;
    for (const LimitRow& r : rep.rows) {
        e0.push_back(r.inner_product.abs_err());
        e1.push_back(r.grad_sq.abs_err());
        e2.push_back(r.second_diff.abs_err());
        e3.push_back(r.kernel.abs_err());
    }
    rep.decreasing = {decreasing(e0), decreasing(e1), decreasing(e2), decreasing(e3)};
    return rep;
}

double moment_integral_closed(int n, int k, const std::array<int, 3>& alpha, double s) {
    validate_moment_args(n, k, alpha, s);
    const double C = std::max(1.0, binom(n, k));
    return double(n) * unit_ball_volume(n) / (2.0 * C * (double(k) - s));
}

double moment_integral_quadrature(int n, int k, const std::array<int, 3>& alpha, double s,
                                  const QuadratureSpec& spec) {
    validate_moment_args(n, k, alpha, s);
    const double C = std::max(1.0, binom(n, k));
    // Multinomial-weighted sum of squared monomials of total degree k,
    // evaluated pointwise (it collapses to |h|^(2k) analytically; summing it
    // term by term keeps the quadrature an independent check).
    auto poly = [&](const Vec& h) {
        double acc = 0.0;
        for (int a0 = 0; a0 <= k; ++a0)
            for (int a1 = 0; a1 + a0 <= k; ++a1) {
                const int a2 = k - a0 - a1;
                if ((n < 2 && a1 > 0) || (n < 3 && a2 > 0)) continue;
                const double coef =
                    factorial(k) / (factorial(a0) * factorial(a1) * factorial(a2));
                acc += coef * std::pow(h[0] * h[0], a0) * std::pow(h[1] * h[1], a1) *
                       std::pow(h[2] * h[2], a2);
            }
        return acc;
    };
    RadialIntegrand integrand;
    integrand.beta = 2.0 * double(k) - 2.0 * s - 1.0;
    integrand.eval = [&](double rho, double, const Vec& dir) {
        return poly(rho * dir) * std::pow(rho, -double(n) - 2.0 * s);
    };
    Integral val = integrate_radial(integrand, spec, 1.0, n);
    return val.value / C;
}

}  // namespace nlacf
