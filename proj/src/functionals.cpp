#include "nlacf/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlacf/gauss.hpp"
#include "nlacf/parallel.hpp"

namespace nlacf {

namespace {

ScalarField density_for(AcfVariant which, const ScalarField& u, const FracParams& params,
                        const QuadratureSpec& spec) {
    return which == AcfVariant::G ? derived_G(u, params, spec)
                                  : derived_grad_sq(u, params, spec);
}

/// Outer Gauss sum at a given node count; inner s-mean errors propagated.
Integral outer_sum(const ScalarField& density, double R, const FracParams& params,
                   const QuadratureSpec& spec, int nodes) {
    const GaussRule& g = gauss_legendre(nodes);
    std::vector<double> values, errors;
    const std::size_t count = g.x.size();
    values.resize(count);
    errors.resize(count);
    // The M_s evaluations dominate; parallel across outer nodes.
    std::vector<double> packed;
    panel_sums(count, [&](std::size_t i) {
        const double r = 0.5 * R * (1.0 + g.x[i]);
        OperatorValue m = s_mean(density, vec0(), r, params, spec);
        errors[i] = 0.5 * R * g.w[i] * std::pow(r, params.s) * m.abs_error_estimate;
        return 0.5 * R * g.w[i] * std::pow(r, params.s) * m.value;
    }, packed);
    Integral out;
    for (std::size_t i = 0; i < count; ++i) {
        out.value += packed[i];
        out.error += errors[i];
    }
    return out;
}

double grad_component(const ScalarField& u, const Vec& x, int i) {
    if (u.has_grad()) return u.grad(x)[i];
    const double h = 1e-6;
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    return (u.eval(a) - u.eval(b)) / (2.0 * h);
}

std::vector<Vec> precondition_points(int n, double radius, std::uint64_t seed) {
    std::vector<Vec> pts;
    pts.push_back(vec0());
    for (int i = 0; i < n; ++i) {
        Vec p = vec0();
        p[i] = radius;
        pts.push_back(p);
        p[i] = -radius;
        pts.push_back(p);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-radius, radius);
    while (pts.size() < 9) {
        Vec p = vec0();
        for (int i = 0; i < n; ++i) p[i] = coord(rng);
        pts.push_back(p);
    }
    return pts;
}

PreconditionReport sample_precondition(const ScalarField& u, const ScalarField& density,
                                       AcfVariant which, const FracParams& params,
                                       const QuadratureSpec& spec, double radius,
                                       std::uint64_t seed) {
    PreconditionReport rep;
    rep.points = precondition_points(params.n, radius, seed);
    ScalarField f;  // only for GradF
    if (which == AcfVariant::GradF) {
        f = derived_frac_lap(u, params, spec);
        rep.description = "<grad^s u, grad^s f> <= 0 near 0, f = (-Delta)^s u";
    } else {
        rep.description = "(-Delta)^s " + density.id + " <= 0 near 0";
    }
    double max_err = 0.0;
    for (const Vec& p : rep.points) {
        double value = 0.0, err = 0.0;
        if (which == AcfVariant::GradF) {
            const OperatorValue gu = frac_gradient(u, p, params, spec);
            const OperatorValue gf = frac_gradient(f, p, params, spec);
            value = dot(gu.vector, gf.vector);
            err = norm(gu.vector) * gf.abs_error_estimate +
                  norm(gf.vector) * gu.abs_error_estimate;
        } else {
            const OperatorValue lap = frac_laplacian(density, p, params, spec);
            value = lap.value;
            err = lap.abs_error_estimate;
        }
        rep.samples.push_back(value);
        rep.errors.push_back(err);
        rep.max_positive_excursion = std::max(rep.max_positive_excursion, value);
        max_err = std::max(max_err, err);
    }
    rep.tolerance = 10.0 * max_err;
    rep.met = rep.max_positive_excursion <= rep.tolerance;
    return rep;
}

}  // namespace

OperatorValue acf_outer(const ScalarField& density, double R, const FracParams& params,
                        const QuadratureSpec& spec) {
    if (!(R > 0.0)) throw NlacfError("acf_outer: R must be positive");
    const double norm_factor = std::pow(R, -1.0 - params.s);
    Integral fine = outer_sum(density, R, params, spec, spec.outer_nodes);
    Integral coarse = outer_sum(density, R, params, spec, std::max(4, spec.outer_nodes / 2));
    OperatorValue out;
    out.value = norm_factor * fine.value;
    out.abs_error_estimate =
        norm_factor * (fine.error + std::abs(fine.value - coarse.value));
    out.truncation_radius_used = R;
    return out;
}

OperatorValue acf_outer_kelvin(const ScalarField& density, double R, const FracParams& params,
                               const QuadratureSpec& spec) {
    if (!(R > 0.0)) throw NlacfError("acf_outer_kelvin: R must be positive");
    const int n = params.n;
    const double s = params.s;
    const AngularRule rule = angular_rule(n, spec);

    // Interior integral over B_r with singular weights at 0 and at |x| = r,
    // split at r/2. The density is evaluated at the inverted point r^2 x/|x|^2.
    auto inner = [&](double r, const QuadratureSpec& sp) {
        auto weight = [&](double rho, double r2_minus_rho2) {
            return std::pow(r2_minus_rho2, -s) * std::pow(rho, 2.0 * s - n);
        };
        auto angular_sum = [&](double rho) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.size(); ++i)
                acc += rule.w[i] * density.eval((r * r / rho) * rule.dir[i]);
            return acc;
        };
        // [0, r/2]: weight ~ rho^(2s-n), with the measure: beta = 2s-1.
        Fn1D near_zero = [&](double rho) {
            return weight(rho, (r - rho) * (r + rho)) * angular_sum(rho) *
                   std::pow(rho, n - 1);
        };
        Integral a = integrate_singular(near_zero, 0.5 * r, 2.0 * s - 1.0, 0.0, sp);
        // (r/2, r]: offset t = r - rho, weight ~ t^(-s): beta = -s.
        Fn1D near_sphere = [&](double t) {
            const double rho = r - t;
            return weight(rho, t * (r + rho)) * angular_sum(rho) * std::pow(rho, n - 1);
        };
        Integral b = integrate_singular(near_sphere, 0.5 * r, -s, 0.0, sp);
        return Integral{a.value + b.value, a.error + b.error};
    };

    auto outer = [&](int nodes, const QuadratureSpec& sp) {
        const GaussRule& g = gauss_legendre(nodes);
        Integral acc;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double r = 0.5 * R * (1.0 + g.x[i]);
            Integral in = inner(r, sp);
            acc.value += 0.5 * R * g.w[i] * std::pow(r, s) * in.value;
            acc.error += 0.5 * R * g.w[i] * std::pow(r, s) * in.error;
        }
        return acc;
    };

    const double norm_factor = params.a_ns * std::pow(R, -1.0 - s);
    Integral fine = outer(spec.outer_nodes, spec);
    Integral coarse = outer(std::max(4, spec.outer_nodes / 2), spec);
    OperatorValue out;
    out.value = norm_factor * fine.value;
    out.abs_error_estimate =
        norm_factor * (fine.error + std::abs(fine.value - coarse.value));
    out.truncation_radius_used = R;
    return out;
}

OperatorValue j_acf(const ScalarField& u, double R, const FracParams& params,
                    const QuadratureSpec& spec) {
    return acf_outer(derived_G(u, params, spec), R, params, spec);
}

OperatorValue j_acf_kelvin(const ScalarField& u, double R, const FracParams& params,
                           const QuadratureSpec& spec) {
    return acf_outer_kelvin(derived_G(u, params, spec), R, params, spec);
}

OperatorValue j_acf_grad(const ScalarField& u, double R, const FracParams& params,
                         const QuadratureSpec& spec) {
    return acf_outer(derived_grad_sq(u, params, spec), R, params, spec);
}

double j_acf_local(const ScalarField& u, double R, int n, const QuadratureSpec& spec) {
    if (!(R > 0.0)) throw NlacfError("j_acf_local: R must be positive");
    const AngularRule rule = angular_rule(n, spec);
    auto profile = [&](double rho) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const Vec x = rho * rule.dir[i];
            double g2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double gk = grad_component(u, x, k);
                g2 += gk * gk;
            }
            acc += rule.w[i] * g2;
        }
        // |x|^(2-n) weight and the rho^(n-1) measure combine to rho.
        return acc * rho;
    };
    return integrate_smooth(profile, 0.0, R, 16, spec).value / (R * R);
}

FunctionalCurve monotonicity_experiment(const ScalarField& u, const std::vector<double>& R_grid,
                                        const FracParams& params, const QuadratureSpec& spec,
                                        AcfVariant which, std::uint64_t seed) {
    if (R_grid.empty() || !std::is_sorted(R_grid.begin(), R_grid.end()) ||
        R_grid.front() <= 0.0)
        throw NlacfError("monotonicity_experiment: R grid must be sorted and positive");
    ScalarField density = density_for(which, u, params, spec);

    FunctionalCurve curve;
    curve.precondition =
        sample_precondition(u, density, which, params, spec, 0.1 * R_grid.front(), seed);

    for (double R : R_grid) {
        OperatorValue j = acf_outer(density, R, params, spec);
        curve.radii.push_back(R);
        curve.values.push_back(j.value);
        curve.error_estimates.push_back(j.abs_error_estimate);
    }

    double sum_err = 0.0;
    for (double e : curve.error_estimates) sum_err += e;
    curve.monotone_prefix = curve.radii.empty() ? 0 : 1;
    bool prefix_alive = true;
    for (std::size_t i = 0; i + 1 < curve.values.size(); ++i) {
        const double drop = curve.values[i] - curve.values[i + 1];
        curve.monotonicity_defect = std::max(curve.monotonicity_defect, std::max(drop, 0.0));
        const double pair_tol =
            3.0 * (curve.error_estimates[i] + curve.error_estimates[i + 1]);
        if (prefix_alive && drop <= pair_tol)
            ++curve.monotone_prefix;
        else
            prefix_alive = false;
    }
    curve.defect_pass = curve.monotonicity_defect <= 3.0 * sum_err;
    return curve;
}

StabilityReport stability_experiment(const ScalarField& u, double R,
                                     const std::vector<double>& s_grid, int n,
                                     const QuadratureSpec& spec, AcfVariant which) {
    if (s_grid.size() < 2 || !std::is_sorted(s_grid.begin(), s_grid.end()))
        throw NlacfError("stability_experiment: need a sorted s grid with >= 2 entries");
    if (which == AcfVariant::GradF) which = AcfVariant::Grad;

    StabilityReport rep;
    // G_u -> 2|grad u|^2 while |grad^s u|^2 -> |grad u|^2 as s -> 1, so the
    // local target carries a factor 2 only for the energy-density variant.
    const double factor = (which == AcfVariant::G) ? 2.0 : 1.0;
    rep.local_target = factor / unit_sphere_measure(n) * j_acf_local(u, R, n, spec);

    for (double s : s_grid) {
        FracParams params = make_params(n, s, spec);
        ScalarField density = density_for(which, u, params, spec);
        OperatorValue j = acf_outer(density, R, params, spec);
        rep.rows.push_back({s, j.value, rep.local_target, std::abs(j.value - rep.local_target)});
    }

    // "Decreasing along the grid tail": the last three errors.
    const std::size_t m = rep.rows.size();
    rep.tail_decreasing = true;
    for (std::size_t i = (m >= 3 ? m - 3 : 0); i + 1 < m; ++i)
        if (!(rep.rows[i + 1].abs_err < rep.rows[i].abs_err)) rep.tail_decreasing = false;

    // Richardson extrapolation, first order in h = 1 - s, from the last two rows.
    const double h1 = 1.0 - rep.rows[m - 2].s;
    const double h2 = 1.0 - rep.rows[m - 1].s;
    const double j1 = rep.rows[m - 2].value;
    const double j2 = rep.rows[m - 1].value;
    rep.extrapolated = j2 + (j2 - j1) * h2 / (h1 - h2);
    rep.extrapolated_rel_err =
        rep.local_target != 0.0
            ? std::abs(rep.extrapolated - rep.local_target) / std::abs(rep.local_target)
            : std::abs(rep.extrapolated);
    return rep;
}

BoundReport acf_bound_experiment(const ScalarField& u, const std::vector<double>& R_grid,
                                 const FracParams& params, const QuadratureSpec& spec,
                                 AcfVariant which) {
    if (2.0 * params.s == static_cast<double>(params.n))
        throw NlacfError("acf_bound_experiment: weight undefined when 2s = n");
    if (R_grid.empty()) throw NlacfError("acf_bound_experiment: empty R grid");
    const int n = params.n;
    const double s = params.s;

    auto run = [&](const QuadratureSpec& sp) {
        ScalarField density = density_for(which, u, params, sp);
        // int density |x|^(2s-n) dx: profile rho^(2s-1) at 0; density decays
        // at least like |x|^(-n-2s) per its envelope.
        RadialIntegrand weighted;
        weighted.beta = 2.0 * s - 1.0;
        weighted.eval = [&](double rho, double, const Vec& dir) {
            return density.eval(rho * dir) * std::pow(rho, 2.0 * s - n);
        };
        const double T = truncation_radius(density.tail, n - 2.0 * s, sp.tail_tol, n);
        const double w = integrate_radial(weighted, sp, T, n).value;
        BoundReport rep;
        rep.weighted_integral = w;
        for (double R : R_grid) {
            const double j = acf_outer(density, R, params, sp).value;
            const double ratio = w > 0.0 ? j * std::pow(R, 2.0 * s) / w : 0.0;
            rep.rows.push_back({R, j, ratio});
            rep.max_ratio = std::max(rep.max_ratio, ratio);
        }
        return rep;
    };

    BoundReport rep = run(spec);
    BoundReport refined = run(spec.doubled());
    rep.max_ratio_refined = refined.max_ratio;
    const double scale = std::max(std::abs(rep.max_ratio), std::abs(rep.max_ratio_refined));
    rep.stable = scale == 0.0 || std::abs(rep.max_ratio - rep.max_ratio_refined) <= 0.1 * scale;
    return rep;
}

GradEstimateReport gradient_estimate_experiment(const ScalarField& u, const FracParams& params,
                                                const QuadratureSpec& spec, std::uint64_t seed) {
    if (!u.tail.compact() || u.tail.R0 > 1.0)
        throw NlacfError("gradient_estimate_experiment: u must be supported in the unit ball");
    const int n = params.n;
    const double s = params.s;
    ScalarField f = derived_frac_lap(u, params, spec);
    ScalarField G = derived_G(u, params, spec);

    auto sup_in_unit_ball = [&](const ScalarField& v) {
        const AngularRule rule = angular_rule(n, spec);
        double m = std::abs(v.eval(vec0()));
        for (int k = 1; k <= 8; ++k)
            for (std::size_t i = 0; i < rule.size(); ++i)
                m = std::max(m, std::abs(v.eval((k / 8.0) * rule.dir[i])));
        return m;
    };

    GradEstimateReport rep;
    const double sup_u = sup_in_unit_ball(u);
    const double sup_f = sup_in_unit_ball(f);
    rep.g0 = G.eval(vec0());
    const double u0 = u.eval(vec0());
    rep.bracket = u0 * u0 + sup_u * sup_f;
    for (double R : {0.25, 0.5, 0.75}) {
        rep.radii.push_back(R);
        rep.ratios.push_back(rep.bracket > 0.0 ? rep.g0 * std::pow(R, 2.0 * s) / rep.bracket
                                               : 0.0);
    }
    rep.finite = std::isfinite(rep.g0) && std::isfinite(rep.bracket);
    rep.precondition = sample_precondition(u, G, AcfVariant::G, params, spec, 0.5, seed);

    // Normalization invariance: both sides scale quadratically under
    // u -> u / (sup|u| + sup|f|), so the ratio is exactly invariant.
    const double M = sup_u + sup_f;
    if (M > 0.0 && rep.bracket > 0.0) {
        ScalarField un = u;
        auto ueval = u.eval;
        un.id = "normalized(" + u.id + ")";
        un.eval = [ueval, M](const Vec& x) { return ueval(x) / M; };
        un.grad = nullptr;
        un.hess = nullptr;
        un.frac_lap = nullptr;
        ScalarField fn = derived_frac_lap(un, params, spec);
        ScalarField Gn = derived_G(un, params, spec);
        const double g0n = Gn.eval(vec0());
        const double u0n = un.eval(vec0());
        const double bracket_n = u0n * u0n + sup_in_unit_ball(un) * sup_in_unit_ball(fn);
        const double r = rep.g0 / rep.bracket;
        const double rn = bracket_n > 0.0 ? g0n / bracket_n : 0.0;
        rep.normalization_drift = r != 0.0 ? std::abs(r - rn) / std::abs(r) : std::abs(rn);
    }
    return rep;
}

}  // namespace nlacf
