// Acceptance gate: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exit code 0 iff all criteria pass.
//
// Usage: acceptance [path-to-cli] [path-to-manifest]
// The two paths feed the determinism criterion, which shells out to the
// experiment runner twice and byte-compares the CSV outputs.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlacf/bochner.hpp"
#include "nlacf/functionals.hpp"

using namespace nlacf;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const char* what, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s — %s%s%s\n", index, ok ? "PASS" : "FAIL", what,
                detail.empty() ? "" : ": ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void run(int index, const char* what, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    report(index, what, ok, detail);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// 1. Moment integrals match their closed forms; the s-mean kernel averages
//    constants to themselves (unit total mass).
bool c1_constants_moments(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    double worst = 0.0;
    for (int n : {1, 2, 3})
        for (int k : {1, 2, 3})
            for (double s : {0.25, 0.5, 0.75}) {
                const std::array<int, 3> alpha{k, 0, 0};
                const double closed = moment_integral_closed(n, k, alpha, s);
                const double quad = moment_integral_quadrature(n, k, alpha, s, sp);
                worst = std::max(worst, std::abs(quad - closed) / closed);
            }
    double worst_mean = 0.0;
    for (int n : {1, 2})
        for (double s : {0.25, 0.5, 0.75})
            for (double r : {0.5, 1.0, 2.0}) {
                const QuadratureSpec spn = QuadratureSpec::for_dim(n);
                const FracParams p = make_params(n, s, spn);
                const OperatorValue m = s_mean(constant_field(n, 1.0), vec0(), r, p, spn);
                worst_mean = std::max(worst_mean, std::abs(m.value - 1.0));
            }
    detail = "max moment rel diff " + num(worst) + ", max normalization defect " +
             num(worst_mean);
    return worst <= 1e-6 && worst_mean <= 1e-6;
}

// 2. Fractional Laplacian vs the independent radial-Fourier oracle on the
//    Gaussian; product-rule identity at random points.
bool c2_operator_oracles(std::string& detail) {
    double worst1 = 0.0;
    double worst2 = 0.0;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    for (int n : {1, 2}) {
        const QuadratureSpec sp = QuadratureSpec::for_dim(n);
        const double s = 0.5;
        const FracParams p = make_params(n, s, sp);
        const ScalarField u = gaussian_field(n, 1.0);
        for (int k = 0; k < 10; ++k) {
            Vec x = vec0();
            for (int d = 0; d < n; ++d) x[d] = coord(rng);
            const double numeric = frac_laplacian(u, x, p, sp).value;
            const double oracle = u.frac_lap(x, s);
            const double rel = std::abs(numeric - oracle) / std::abs(oracle);
            (n == 1 ? worst1 : worst2) = std::max(n == 1 ? worst1 : worst2, rel);
        }
    }

    // (-Delta)^s (u^2) = 2 u (-Delta)^s u - G_u at 20 random points.
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.5, sp);
    const ScalarField u = gaussian_field(1, 1.0);
    const ScalarField usq = squared_field(u);
    int bad = 0;
    for (int k = 0; k < 20; ++k) {
        const Vec x = vec(coord(rng));
        const OperatorValue lhs = frac_laplacian(usq, x, p, sp);
        const OperatorValue flu = frac_laplacian(u, x, p, sp);
        const OperatorValue G = energy_density_G(u, x, p, sp);
        const double rhs = 2.0 * u.eval(x) * flu.value - G.value;
        const double err = lhs.abs_error_estimate +
                           2.0 * std::abs(u.eval(x)) * flu.abs_error_estimate +
                           G.abs_error_estimate;
        if (std::abs(lhs.value - rhs) >= err) ++bad;
    }
    detail = "gaussian rel err n=1 " + num(worst1) + ", n=2 " + num(worst2) +
             "; product-rule violations " + std::to_string(bad) + "/20";
    return worst1 <= 1e-6 && worst2 <= 1e-4 && bad == 0;
}

// 3. Dirichlet construction is s-harmonic inside, satisfies the s-mean value
//    property, and the s-mean is radially monotone under the verified sign.
bool c3_mean_value(std::string& detail) {
    QuadratureSpec sp = QuadratureSpec::for_dim(1);
    sp.panels = 60;  // nested evaluation needs the extra radial resolution
    sp.nodes_per_panel = 16;
    const double s = 0.5;
    const FracParams p = make_params(1, s, sp);
    const Ball D{vec0(), 1.0};
    const ScalarField g = gaussian_field(1, 1.0);
    const ScalarField P = poisson_harmonic_field(p, D, g, sp);

    double supg = 0.0;
    for (int k = 0; k <= 64; ++k) {
        const double rho = 1.0 + 0.1 * k;
        supg = std::max({supg, std::abs(g.eval(vec(rho))), std::abs(g.eval(vec(-rho)))});
    }
    double worst = 0.0;
    for (double xi : {-0.5, -0.25, 0.0, 0.25, 0.5})
        worst = std::max(worst, std::abs(frac_laplacian(P, vec(xi), p, sp).value) / supg);

    const double p0 = P.eval(vec0());
    const double mv = s_mean(P, vec0(), 0.5, p, sp).value;
    const double mv_rel = std::abs(mv - p0) / std::abs(p0);

    // Negated bump: subharmonic near the origin (sign sampled below).
    ScalarField nb = bump_field(1, 1.0);
    auto ev = nb.eval;
    nb.eval = [=](const Vec& x) { return -ev(x); };
    nb.grad = nullptr;
    nb.hess = nullptr;
    nb.frac_lap = nullptr;
    double excursion = 0.0;
    double op_err = 0.0;
    std::vector<double> grid;
    for (int k = 0; k < 10; ++k) grid.push_back(0.05 + 0.05 * k);
    for (double r : grid)
        for (double sign : {-1.0, 1.0}) {
            const OperatorValue lap = frac_laplacian(nb, vec(sign * r), p, sp);
            excursion = std::max(excursion, lap.value);
            op_err = std::max(op_err, lap.abs_error_estimate);
        }
    const bool sign_ok = excursion <= 10.0 * std::max(op_err, 1e-12);
    double defect = 0.0;
    double prev = -1e300;
    double err_sum = 0.0;
    for (double r : grid) {
        const OperatorValue m = s_mean(nb, vec0(), r, p, sp);
        if (prev > -1e299) defect = std::max(defect, prev - m.value);
        prev = m.value;
        err_sum += m.abs_error_estimate;
    }
    detail = "interior residual " + num(worst) + ", mean-value " + num(mv_rel) +
             ", monotone defect " + num(defect);
    return worst < 1e-3 && mv_rel < 1e-3 && sign_ok && defect <= 3.0 * std::max(err_sum, 1e-12);
}

// 4. Nonlocal divergence theorem, integration by parts, and Green's second
//    identity on the unit ball.
bool c4_green_identities(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.5, sp);
    const ScalarField f = bump_field(1, 1.0);
    const ScalarField g = xbump_field(1, 1.0);
    const Ball D{vec0(), 1.0};
    const double r1 = divergence_identity(f, D, p, sp).rel_residual();
    const double r2 = parts_identity(f, g, D, p, sp).rel_residual();
    const double r3 = green_identity(f, g, D, p, sp).rel_residual();
    const double worst = std::max({r1, r2, r3});
    detail = "max rel residual " + num(worst);
    return worst < 1e-3;
}

// 5. Exterior-ball and Kelvin-transformed routes agree for the functional.
bool c5_route_equivalence(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.5, sp);
    double worst = 0.0;
    for (const ScalarField& u : {bump_field(1, 1.0), gaussian_field(1, 1.0)}) {
        const ScalarField density = derived_G(u, p, sp);
        for (double R : {0.25, 0.5, 1.0}) {
            const double a = acf_outer(density, R, p, sp).value;
            const double b = acf_outer_kelvin(density, R, p, sp).value;
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
        }
    }
    detail = "max rel diff " + num(worst);
    return worst < 1e-3;
}

// 6. Scaling invariance of both functionals.
bool c6_scaling(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const double s = 0.5;
    const FracParams p = make_params(1, s, sp);
    const ScalarField u = bump_field(1, 1.0);
    const double R = 0.5;
    const double baseG = j_acf(u, R, p, sp).value;
    const double baseGrad = j_acf_grad(u, R, p, sp).value;
    double worst = 0.0;
    for (double lambda : {0.5, 2.0, 5.0}) {
        const ScalarField ul = scaled_field(u, lambda, s);
        worst = std::max(worst, std::abs(j_acf(ul, R / lambda, p, sp).value - baseG) /
                                    std::abs(baseG));
        worst = std::max(worst, std::abs(j_acf_grad(ul, R / lambda, p, sp).value - baseGrad) /
                                    std::abs(baseGrad));
    }
    detail = "max rel diff " + num(worst);
    return worst <= 1e-3;
}

// 7. Monotonicity of the functionals under the verified sign hypotheses, for
//    all three theorem variants, on 8-point R grids.
bool c7_monotonicity(std::string& detail) {
    std::ostringstream d;
    bool ok = true;

    // Energy-density variant: the field s-harmonic in the unit ball satisfies
    // the hypothesis via the Bochner identity; the triple-nested quadrature
    // forces a reduced (but honestly error-tracked) resolution.
    {
        QuadratureSpec sp = QuadratureSpec::for_dim(1);
        sp.panels = 10;
        sp.nodes_per_panel = 6;
        sp.outer_nodes = 8;
        sp.target_rel_tol = 1e-4;
        sp.tail_tol = 1e-8;
        const FracParams p = make_params(1, 0.5, sp);
        const ScalarField u = field_from_id("poisson:r=1;g=gaussian:w=1", 1, 0.5, sp);
        const FunctionalCurve c = monotonicity_experiment(
            u, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}, p, sp, AcfVariant::G);
        ok = ok && c.precondition.met && c.defect_pass;
        d << "G(met=" << c.precondition.met << ",defect=" << num(c.monotonicity_defect) << ") ";
    }
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.5, sp);
    const ScalarField u = bump_field(1, 1.0);
    const std::vector<double> grid{0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6};
    for (AcfVariant v : {AcfVariant::Grad, AcfVariant::GradF}) {
        const FunctionalCurve c = monotonicity_experiment(u, grid, p, sp, v);
        ok = ok && c.precondition.met && c.defect_pass;
        d << (v == AcfVariant::Grad ? "grad" : "grad-f") << "(met=" << c.precondition.met
          << ",defect=" << num(c.monotonicity_defect) << ") ";
    }
    detail = d.str();
    return ok;
}

// 8. s -> 1 stability: decreasing error tail and Richardson limit within 5%.
bool c8_stability(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const StabilityReport rep = stability_experiment(
        bump_field(1, 1.0), 0.5, {0.6, 0.7, 0.8, 0.9, 0.95, 0.99}, 1, sp, AcfVariant::G);
    detail = "extrapolation rel err " + num(rep.extrapolated_rel_err) + ", tail decreasing " +
             (rep.tail_decreasing ? "yes" : "no");
    return rep.tail_decreasing && rep.extrapolated_rel_err <= 0.05;
}

// 9. Bochner identities at three points for both forms; operator commutation
//    at ten points.
bool c9_bochner(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.5, sp);
    const ScalarField u = bump_field(1, 1.0);
    double worst = 0.0;
    for (double x : {0.0, 0.2, 0.4}) {
        const BochnerResidual g = bochner_residual_G(u, vec(x), p, sp);
        worst = std::max(worst, std::abs(g.residual) / std::max(g.scale(), 1e-12));
        const BochnerResidual gr = bochner_residual_grad(u, vec(x), p, sp, false);
        worst = std::max(worst, std::abs(gr.residual) / std::max(gr.scale(), 1e-12));
    }
    // Commutation: (-Delta)^s (partial^s u) vs partial^s ((-Delta)^s u).
    const ScalarField du = derived_partial_s(u, 0, p, sp);
    const ScalarField lu = derived_frac_lap(u, p, sp);
    double worst_comm = 0.0;
    for (int k = 0; k < 10; ++k) {
        const Vec x = vec(-0.72 + 0.16 * k);
        const double a = frac_laplacian(du, x, p, sp).value;
        const double b = frac_gradient(lu, x, p, sp).vector[0];
        worst_comm = std::max(worst_comm,
                              std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}));
    }
    detail = "max residual " + num(worst) + ", max commutation rel diff " + num(worst_comm);
    return worst <= 5e-2 && worst_comm <= 1e-2;
}

// 10. s -> 1 local limits with decreasing error sequences.
bool c10_local_limits(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const LimitReport rep =
        local_limit_check(gaussian_field(1, 1.0), vec(0.3), {0.9, 0.95, 0.99}, sp);
    const LimitRow& last = rep.rows.back();
    auto rel = [](const LimitCheck& c) {
        return c.abs_err() / std::max(1.0, std::abs(c.target));
    };
    detail = "final rel errs: inner " + num(rel(last.inner_product)) + ", grad " +
             num(rel(last.grad_sq)) + ", square " + num(rel(last.second_diff)) + ", kernel " +
             num(rel(last.kernel)) + (rep.all_decreasing() ? "; decreasing" : "; NOT decreasing");
    return rel(last.inner_product) <= 0.05 && rel(last.grad_sq) <= 0.05 &&
           rel(last.second_diff) <= 0.15 && rel(last.kernel) <= 0.05 && rep.all_decreasing();
}

// 11. Bound ratio stable under quadrature doubling; gradient-estimate ratio
//     finite and exactly normalization-invariant up to quadrature error.
bool c11_bounds(std::string& detail) {
    const QuadratureSpec sp = QuadratureSpec::for_dim(1);
    const FracParams p = make_params(1, 0.25, sp);
    const ScalarField u = bump_field(1, 1.0);
    const BoundReport b =
        acf_bound_experiment(u, {0.1, 0.25, 0.5, 0.75, 1.0}, p, sp, AcfVariant::G);
    const GradEstimateReport g = gradient_estimate_experiment(u, p, sp);
    detail = "bound max ratio " + num(b.max_ratio) + (b.stable ? " (stable)" : " (UNSTABLE)") +
             ", gradest drift " + num(g.normalization_drift);
    return b.stable && std::isfinite(b.max_ratio) && g.finite &&
           g.normalization_drift <= 1e-6;
}

// 12. Determinism: two runs of the experiment runner over the full manifest
//     produce byte-identical CSVs.
bool c12_determinism(const std::string& cli, const std::string& manifest, std::string& detail) {
    const fs::path base = fs::temp_directory_path() / "nlacf-acceptance";
    const fs::path d1 = base / "run1";
    const fs::path d2 = base / "run2";
    std::error_code ec;
    fs::remove_all(base, ec);
    fs::create_directories(d1);
    fs::create_directories(d2);
    for (const fs::path& d : {d1, d2}) {
        const std::string cmd = "\"" + cli + "\" verify-all --config \"" + manifest +
                                "\" --out \"" + d.string() + "\" > \"" +
                                (d / "stdout.log").string() + "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            detail = "verify-all exited with status " + std::to_string(rc);
            return false;
        }
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        if (entry.path().extension() != ".csv") continue;
        ++compared;
        std::ifstream a(entry.path(), std::ios::binary);
        std::ifstream b(d2 / entry.path().filename(), std::ios::binary);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        if (sa.str() != sb.str() || sa.str().empty()) {
            detail = "CSV differs: " + entry.path().filename().string();
            return false;
        }
    }
    detail = std::to_string(compared) + " CSVs byte-identical, all experiments green";
    return compared > 0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "tools/nlacf";
    const std::string manifest = argc > 2 ? argv[2] : "../configs/acceptance.manifest";

    run(1, "constants & moments", c1_constants_moments);
    run(2, "operator oracles", c2_operator_oracles);
    run(3, "mean value & Dirichlet", c3_mean_value);
    run(4, "Green identities", c4_green_identities);
    run(5, "functional route equivalence", c5_route_equivalence);
    run(6, "scaling invariance", c6_scaling);
    run(7, "monotonicity", c7_monotonicity);
    run(8, "stability s->1", c8_stability);
    run(9, "Bochner identities", c9_bochner);
    run(10, "local limits", c10_local_limits);
    run(11, "bound experiments", c11_bounds);
    run(12, "determinism", [&](std::string& d) { return c12_determinism(cli, manifest, d); });

    std::printf("%s: %d of 12 criteria passed\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
                12 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
