#include "nlacf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlacf {

namespace {

// Trustworthy-offset floors for difference quotients of O(1) fields: below
// these, finite differences are dominated by rounding noise.
constexpr double kFirstDiffFloor = 1e-7;
constexpr double kSecondDiffFloor = 1e-6;

Vec unit_or(const Vec& v, const Vec& fallback) {
    const double len = norm(v);
    return len > 0.0 ? (1.0 / len) * v : fallback;
}

/// Substitute evaluator that replaces u inside small balls around its
/// declared singular points by the radial continuation from the ball surface
/// (continuous, bounded). The difference lives in the carved balls and is
/// integrated separately with a graded mesh.
struct CarvedField {
    const ScalarField* u;
    std::vector<Vec> centers;
    std::vector<double> radii;

    double eval(const Vec& y) const {
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Vec d = y - centers[k];
            if (norm2(d) < radii[k] * radii[k])
                return u->eval(centers[k] + radii[k] * unit_or(d, vec(1.0)));
        }
        return u->eval(y);
    }
};

CarvedField carve(const ScalarField& u, const Vec& x) {
    CarvedField c{&u, {}, {}};
    for (const Vec& p : u.singular_points) {
        const double dist = norm(x - p);
        if (dist == 0.0) throw NlacfError("operator evaluation at a singular point of the field");
        c.centers.push_back(p);
        c.radii.push_back(std::min(0.5 * dist, 0.5));
    }
    return c;
}

}  // namespace

OperatorValue frac_laplacian(const ScalarField& u, const Vec& x, const FracParams& params,
                             const QuadratureSpec& spec) {
    const int n = params.n;
    const double s = params.s;
    const double kd = n + 2.0 * s;
    const CarvedField cu = carve(u, x);
    const double ux = u.eval(x);

    const double T =
        std::max(2.0, truncation_radius(u.tail.shifted(norm(x)), kd, spec.tail_tol, n));

    RadialIntegrand second_diff;
    second_diff.beta = 1.0 - 2.0 * s;
    second_diff.core_floor = kSecondDiffFloor;
    second_diff.eval = [&](double rho, double, const Vec& dir) {
        const Vec z = rho * dir;
        return (2.0 * ux - cu.eval(x + z) - cu.eval(x - z)) * std::pow(rho, -kd);
    };
    Integral main = integrate_radial(second_diff, spec, T, n);

    OperatorValue out;
    out.truncation_radius_used = T;
    double value = 0.5 * params.c_ns * main.value;
    double error = 0.5 * params.c_ns * main.error;
    // Analytic tail of the non-decaying 2u(x) part beyond T; the u(x±z)
    // parts there are below tail_tol by the choice of T.
    value += params.c_ns * ux * unit_sphere_measure(n) * std::pow(T, -2.0 * s) / (2.0 * s);

    // Carved-ball corrections: -c int_{B_delta(p)} (u - substitute) K(y-x) dy.
    for (std::size_t k = 0; k < cu.centers.size(); ++k) {
        const Vec p = cu.centers[k];
        const double delta = cu.radii[k];
        RadialIntegrand corr;
        // Profile ~ rho^(exponent) * rho^(n-1) after the surface measure.
        corr.beta = u.singular_exponent + n - 1.0;
        corr.eval = [&](double rho, double, const Vec& dir) {
            const Vec y = p + rho * dir;
            return (u.eval(y) - u.eval(p + delta * dir)) * std::pow(norm(y - x), -kd);
        };
        Integral c = integrate_radial(corr, spec, delta, n);
        value -= params.c_ns * c.value;
        error += params.c_ns * c.error;
    }
    out.value = value;
    // The envelope-bounded far-field remainder is part of the uncertainty.
    out.abs_error_estimate = error + params.c_ns * spec.tail_tol;
    return out;
}

OperatorValue energy_density_G(const ScalarField& u, const Vec& y, const FracParams& params,
                               const QuadratureSpec& spec) {
    if (!u.singular_points.empty())
        throw NlacfError("energy_density_G: singular fields not supported");
    const int n = params.n;
    const double s = params.s;
    const double kd = n + 2.0 * s;
    const double uy = u.eval(y);

    TailEnvelope env = u.tail.shifted(norm(y));
    if (!env.compact()) env.A *= 2.0 * std::abs(uy) + env.A * std::pow(env.R0, -env.p);
    const double T = std::max(2.0, truncation_radius(env, kd, spec.tail_tol, n));

    RadialIntegrand sq_diff;
    sq_diff.beta = 1.0 - 2.0 * s;  // (u(y)-u(eta))^2 ~ rho^2 for C^1 u
    sq_diff.core_floor = kFirstDiffFloor;
    sq_diff.eval = [&](double rho, double, const Vec& dir) {
        const double d = uy - u.eval(y + rho * dir);
        return d * d * std::pow(rho, -kd);
    };
    Integral main = integrate_radial(sq_diff, spec, T, n);

    OperatorValue out;
    out.truncation_radius_used = T;
    out.value = params.c_ns * main.value +
                params.c_ns * uy * uy * unit_sphere_measure(n) * std::pow(T, -2.0 * s) / (2.0 * s);
    out.abs_error_estimate = params.c_ns * (main.error + spec.tail_tol);
    return out;
}

OperatorValue frac_gradient(const ScalarField& u, const Vec& y, const FracParams& params,
                            const QuadratureSpec& spec) {
    if (!u.singular_points.empty())
        throw NlacfError("frac_gradient: singular fields not supported");
    const int n = params.n;
    const double s = params.s;
    const double kd = n + s;  // after the |z| factor from the kernel numerator
    const double uy = u.eval(y);
    const double T =
        std::max(2.0, truncation_radius(u.tail.shifted(norm(y)), kd, spec.tail_tol, n));

    OperatorValue out;
    out.truncation_radius_used = T;
    for (int i = 0; i < n; ++i) {
        RadialIntegrand comp;
        comp.beta = -s;
        comp.core_floor = kFirstDiffFloor;
        comp.eval = [&](double rho, double, const Vec& dir) {
            // The -u(y) part cancels exactly in the antipodal angular sum.
            return dir[i] * (u.eval(y + rho * dir) - uy) * std::pow(rho, -kd);
        };
        Integral c = integrate_radial(comp, spec, T, n);
        out.vector[i] = params.mu_ns * c.value;
        out.abs_error_estimate += params.mu_ns * (c.error + spec.tail_tol);
    }
    return out;
}

OperatorValue frac_divergence(const VectorField& phi, const Vec& x, const FracParams& params,
                              const QuadratureSpec& spec) {
    const int n = params.n;
    const double s = params.s;
    const double kd = n + s;
    const Vec px = phi.eval(x);
    const double T =
        std::max(2.0, truncation_radius(phi.tail.shifted(norm(x)), kd, spec.tail_tol, n));

    RadialIntegrand contracted;
    contracted.beta = -s;
    contracted.core_floor = kFirstDiffFloor;
    contracted.eval = [&](double rho, double, const Vec& dir) {
        return dot(dir, phi.eval(x + rho * dir) - px) * std::pow(rho, -kd);
    };
    Integral c = integrate_radial(contracted, spec, T, n);

    OperatorValue out;
    out.truncation_radius_used = T;
    out.value = params.mu_ns * c.value;
    out.abs_error_estimate = params.mu_ns * (c.error + spec.tail_tol);
    return out;
}

OperatorValue nonlocal_normal(const ScalarField& f, const Ball& D, const Vec& x,
                              const FracParams& params, const QuadratureSpec& spec) {
    const int n = params.n;
    const double kd = n + 2.0 * params.s;
    if (norm(x - D.center) <= D.radius)
        throw NlacfError("nonlocal_normal: point must lie strictly outside the ball");
    const double fx = f.eval(x);
    const AngularRule rule = angular_rule(n, spec);
    // Integrate over D in boundary-offset coordinates t = r - rho: the
    // integrand steepens as x approaches the boundary, so grade toward t = 0.
    auto profile = [&](double t) {
        const double rho = D.radius - t;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const Vec y = D.center + rho * rule.dir[i];
            acc += rule.w[i] * (fx - f.eval(y)) * std::pow(norm(x - y), -kd);
        }
        return acc * std::pow(rho, n - 1);
    };
    Integral c = integrate_singular(profile, D.radius, 0.0, 0.0, spec);
    OperatorValue out;
    out.value = c.value;
    out.abs_error_estimate = c.error;
    out.truncation_radius_used = D.radius;
    return out;
}

OperatorValue s_mean(const ScalarField& g, const Vec& x, double r, const FracParams& params,
                     const QuadratureSpec& spec) {
    if (!(r > 0.0)) throw NlacfError("s_mean: radius must be positive");
    const int n = params.n;
    const double s = params.s;
    const double a = params.a_ns;
    const double r2s = std::pow(r, 2.0 * s);

    TailEnvelope env = g.tail.shifted(norm(x));
    if (!env.compact()) env.A *= a * r2s;
    double T = truncation_radius(env, n + 2.0 * s, spec.tail_tol, n);

    OperatorValue out;
    if (T <= r) {  // compactly supported data entirely inside B_r
        out.truncation_radius_used = r;
        return out;
    }
    RadialIntegrand kernel;
    kernel.beta = -s;
    kernel.singular_radius = r;
    kernel.eval = [&](double rho, double delta, const Vec& dir) {
        // |y|^2 - r^2 = delta (delta + 2r), cancellation-free.
        return a * r2s * std::pow(delta * (delta + 2.0 * r), -s) * std::pow(rho, -double(n)) *
               g.eval(x - rho * dir);
    };
    Integral c = integrate_radial(kernel, spec, T, n);
    out.value = c.value;
    out.abs_error_estimate = c.error + spec.tail_tol;
    out.truncation_radius_used = T;
    return out;
}

ScalarField squared_field(const ScalarField& u) {
    ScalarField v;
    v.dim = u.dim;
    v.id = "sq(" + u.id + ")";
    auto ueval = u.eval;
    v.eval = [ueval](const Vec& x) {
        const double t = ueval(x);
        return t * t;
    };
    v.regularity = u.regularity;
    if (u.tail.compact()) {
        v.tail = u.tail;
    } else {
        v.tail = {u.tail.A * u.tail.A, 2.0 * u.tail.p, u.tail.R0};
    }
    v.singular_points = u.singular_points;
    v.singular_exponent = 2.0 * u.singular_exponent;
    if (u.has_grad()) {
        auto ugrad = u.grad;
        v.grad = [ueval, ugrad](const Vec& x) { return (2.0 * ueval(x)) * ugrad(x); };
    }
    return v;
}

// ---------------------------------------------------------------------------
// Derived fields

namespace {

ScalarField wrap_derived(const ScalarField& u, const std::string& opname, double decay,
                         const FracParams& params, const QuadratureSpec& spec,
                         std::function<double(const Vec&)> point_eval) {
    std::ostringstream tag;
    tag << opname << "(" << u.id << ")|n=" << params.n << "|s=" << params.s
        << "|tol=" << spec.target_rel_tol;
    auto cache = std::make_shared<MemoCache>(tag.str());
    auto fn = std::make_shared<std::function<double(const Vec&)>>(std::move(point_eval));

    ScalarField d;
    d.dim = u.dim;
    d.id = opname + "(" + u.id + ")";
    d.regularity = Regularity::C2;  // trusted metadata for derived fields
    d.eval = [cache, fn](const Vec& x) {
        double memo = 0.0;
        if (cache->lookup(x, memo)) return memo;
        const double value = (*fn)(x);
        cache->store(x, value);
        return value;
    };
    // Sampled envelope: |derived| <= A |y|^(-decay) beyond R0, amplitude
    // measured on the onset sphere and inflated x2.
    const double R0 = std::max(2.0 * u.tail.R0, 1.0);
    double amp = 0.0;
    for (double rho : {R0, 1.5 * R0}) {
        amp = std::max(amp, std::abs(d.eval(vec(rho))) * std::pow(rho, decay));
        amp = std::max(amp, std::abs(d.eval(vec(-rho))) * std::pow(rho, decay));
    }
    d.tail = {2.0 * amp, decay, R0};
    return d;
}

}  // namespace

ScalarField derived_G(const ScalarField& u, const FracParams& params, const QuadratureSpec& spec) {
    return wrap_derived(u, "G", params.n + 2.0 * params.s, params, spec, [=](const Vec& x) {
        return energy_density_G(u, x, params, spec).value;
    });
}

ScalarField derived_grad_sq(const ScalarField& u, const FracParams& params,
                            const QuadratureSpec& spec) {
    return wrap_derived(u, "grad_s_sq", 2.0 * (params.n + params.s), params, spec,
                        [=](const Vec& x) {
                            const OperatorValue g = frac_gradient(u, x, params, spec);
                            return norm2(g.vector);
                        });
}

ScalarField derived_partial_s(const ScalarField& u, int component, const FracParams& params,
                              const QuadratureSpec& spec) {
    if (component < 0 || component >= params.n)
        throw NlacfError("derived_partial_s: component out of range");
    std::ostringstream op;
    op << "partial_s_" << component;
    return wrap_derived(u, op.str(), params.n + params.s, params, spec, [=](const Vec& x) {
        return frac_gradient(u, x, params, spec).vector[component];
    });
}

ScalarField derived_frac_lap(const ScalarField& u, const FracParams& params,
                             const QuadratureSpec& spec) {
    return wrap_derived(u, "frac_lap", params.n + 2.0 * params.s, params, spec,
                        [=](const Vec& x) { return frac_laplacian(u, x, params, spec).value; });
}

// ---------------------------------------------------------------------------
// Identity drivers

namespace {

/// Integral of fn over the ball D (no interior singularity assumed).
Integral integrate_ball(const std::function<double(const Vec&)>& fn, const Ball& D, int n,
                        const QuadratureSpec& spec) {
    const AngularRule rule = angular_rule(n, spec);
    auto profile = [&](double rho) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i)
            acc += rule.w[i] * fn(D.center + rho * rule.dir[i]);
        return acc * std::pow(rho, n - 1);
    };
    return integrate_smooth(profile, 0.0, D.radius, 16, spec);
}

/// Integral of fn over the exterior of D up to radius T, graded toward the
/// boundary sphere with profile exponent beta there.
Integral integrate_exterior(const std::function<double(const Vec&)>& fn, const Ball& D, int n,
                            double T, double beta, const QuadratureSpec& spec) {
    RadialIntegrand annulus;
    annulus.beta = beta;
    annulus.singular_radius = D.radius;
    annulus.eval = [&](double rho, double, const Vec& dir) {
        return fn(D.center + rho * dir);
    };
    return integrate_radial(annulus, spec, T, n);
}

double sup_on_ball(const ScalarField& f, const Ball& D, int n, const QuadratureSpec& spec) {
    const AngularRule rule = angular_rule(n, spec);
    double m = std::abs(f.eval(D.center));
    for (int k = 1; k <= 8; ++k)
        for (std::size_t i = 0; i < rule.size(); ++i)
            m = std::max(m, std::abs(f.eval(D.center + (D.radius * k / 8.0) * rule.dir[i])));
    return m;
}

/// Truncation radius for exterior integrals of weight(x) * N_s^D f(x):
/// |N_s^D f(x)| <= sup|f| (over D union {x}) * |D| * dist^(-n-2s).
double exterior_T(const ScalarField& f, const ScalarField* weight, const Ball& D,
                  const FracParams& params, const QuadratureSpec& spec) {
    if (weight && weight->tail.compact())
        return std::max(2.0 * D.radius, weight->tail.R0 * 1.0001);
    const int n = params.n;
    const double kd = n + 2.0 * params.s;
    const double volD = unit_ball_volume(n) * std::pow(D.radius, n);
    double amp = 2.0 * sup_on_ball(f, D, n, spec) * volD * std::pow(2.0, kd);
    if (weight) amp *= std::max(1.0, weight->tail.A);
    return truncation_radius({amp, kd, 2.0 * D.radius}, 0.0, spec.tail_tol, n);
}

}  // namespace

TwoSided divergence_identity(const ScalarField& f, const Ball& D, const FracParams& params,
                             const QuadratureSpec& spec) {
    const int n = params.n;
    TwoSided out;
    Integral lhs = integrate_ball(
        [&](const Vec& x) { return -frac_laplacian(f, x, params, spec).value; }, D, n, spec);
    const double T = exterior_T(f, nullptr, D, params, spec);
    const double beta = std::min(0.0, 1.0 - 2.0 * params.s);
    Integral rhs = integrate_exterior(
        [&](const Vec& x) { return nonlocal_normal(f, D, x, params, spec).value; }, D, n, T,
        beta, spec);
    out.lhs = lhs.value;
    out.rhs = params.c_ns * rhs.value;
    out.error = lhs.error + params.c_ns * rhs.error;
    return out;
}

TwoSided parts_identity(const ScalarField& f, const ScalarField& g, const Ball& D,
                        const FracParams& params, const QuadratureSpec& spec) {
    const int n = params.n;
    const double s = params.s;
    const double kd = n + 2.0 * s;
    const AngularRule rule = angular_rule(n, spec);

    // Bilinear form over pairs meeting D:
    //   int_{x in D or y in D} = 2 int_{x in D, y in R^n} - int_{x in D, y in D}.
    auto inner_full = [&](const Vec& x) {
        const double fx = f.eval(x), gx = g.eval(x);
        const double T = std::max(
            {2.0 * D.radius, truncation_radius(f.tail.shifted(norm(x)), kd, spec.tail_tol, n),
             truncation_radius(g.tail.shifted(norm(x)), kd, spec.tail_tol, n)});
        RadialIntegrand pair;
        pair.beta = 1.0 - 2.0 * s;
        pair.core_floor = kFirstDiffFloor;
        pair.eval = [&](double rho, double, const Vec& dir) {
            const Vec y = x + rho * dir;
            return (fx - f.eval(y)) * (gx - g.eval(y)) * std::pow(rho, -kd);
        };
        double v = integrate_radial(pair, spec, T, n).value;
        // Analytic tail of the constant fx*gx part (differences -> fx, gx).
        v += fx * gx * unit_sphere_measure(n) * std::pow(T, -2.0 * s) / (2.0 * s);
        return v;
    };
    auto inner_in_D = [&](const Vec& x) {
        const double fx = f.eval(x), gx = g.eval(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const Vec dir = rule.dir[i];
            // Distance from x to the sphere along dir (x interior).
            const Vec xc = x - D.center;
            const double b = dot(xc, dir);
            const double reach = -b + std::sqrt(std::max(
                                          0.0, b * b + D.radius * D.radius - norm2(xc)));
            if (!(reach > 0.0)) continue;
            auto seg = [&](double rho) {
                const Vec y = x + rho * dir;
                return (fx - f.eval(y)) * (gx - g.eval(y)) * std::pow(rho, -kd);
            };
            acc += rule.w[i] *
                   integrate_singular(
                       [&](double rho) { return seg(rho) * std::pow(rho, n - 1); }, reach,
                       1.0 - 2.0 * s, kFirstDiffFloor, spec)
                       .value;
        }
        return acc;
    };

    TwoSided out;
    Integral bilinear = integrate_ball(
        [&](const Vec& x) { return 2.0 * inner_full(x) - inner_in_D(x); }, D, n, spec);
    out.lhs = 0.5 * params.c_ns * bilinear.value;

    Integral interior = integrate_ball(
        [&](const Vec& x) { return g.eval(x) * frac_laplacian(f, x, params, spec).value; }, D, n,
        spec);
    const double T = exterior_T(f, &g, D, params, spec);
    const double beta = std::min(0.0, 1.0 - 2.0 * s);
    Integral exterior = integrate_exterior(
        [&](const Vec& x) {
            return g.eval(x) * nonlocal_normal(f, D, x, params, spec).value;
        },
        D, n, T, beta, spec);
    out.rhs = interior.value + params.c_ns * exterior.value;
    out.error = 0.5 * params.c_ns * bilinear.error + interior.error + params.c_ns * exterior.error;
    return out;
}

TwoSided green_identity(const ScalarField& f, const ScalarField& g, const Ball& D,
                        const FracParams& params, const QuadratureSpec& spec) {
    const int n = params.n;
    TwoSided out;
    Integral lhs = integrate_ball(
        [&](const Vec& x) {
            return g.eval(x) * (-frac_laplacian(f, x, params, spec).value) -
                   f.eval(x) * (-frac_laplacian(g, x, params, spec).value);
        },
        D, n, spec);
    const double Tf = exterior_T(f, &g, D, params, spec);
    const double Tg = exterior_T(g, &f, D, params, spec);
    const double beta = std::min(0.0, 1.0 - 2.0 * params.s);
    Integral rhs = integrate_exterior(
        [&](const Vec& x) {
            return g.eval(x) * nonlocal_normal(f, D, x, params, spec).value -
                   f.eval(x) * nonlocal_normal(g, D, x, params, spec).value;
        },
        D, n, std::max(Tf, Tg), beta, spec);
    out.lhs = lhs.value;
    out.rhs = params.c_ns * rhs.value;
    out.error = lhs.error + params.c_ns * rhs.error;
    return out;
}

}  // namespace nlacf
