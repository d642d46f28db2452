#include <cmath>

#include "doctest.h"
#include "nlacf/functionals.hpp"

using namespace nlacf;

namespace {
QuadratureSpec spec1() { return QuadratureSpec::for_dim(1); }
}  // namespace

TEST_CASE("functionals vanish on constants") {
    QuadratureSpec sp = spec1();
    FracParams p = make_params(1, 0.5, sp);
    ScalarField c = constant_field(1, 2.0);
    CHECK(std::abs(j_acf(c, 0.5, p, sp).value) < 1e-8);
    CHECK(std::abs(j_acf_grad(c, 0.5, p, sp).value) < 1e-8);
    CHECK(j_acf_local(c, 0.5, 1, sp) == 0.0);
}

TEST_CASE("exterior and Kelvin routes agree") {
    QuadratureSpec sp = spec1();
    ScalarField u = bump_field(1, 1.0);
    for (double s : {0.25, 0.5, 0.75}) {
        FracParams p = make_params(1, s, sp);
        ScalarField density = derived_G(u, p, sp);
        const OperatorValue a = acf_outer(density, 0.5, p, sp);
        const OperatorValue b = acf_outer_kelvin(density, 0.5, p, sp);
        CHECK(a.value > 0.0);
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-3));
    }
}

TEST_CASE("scaling invariance of both functionals") {
    QuadratureSpec sp = spec1();
    const double s = 0.5;
    FracParams p = make_params(1, s, sp);
    ScalarField u = bump_field(1, 1.0);
    const double R = 0.5;
    const double jG = j_acf(u, R, p, sp).value;
    const double jg = j_acf_grad(u, R, p, sp).value;
    for (double lambda : {0.5, 2.0}) {
        ScalarField ul = scaled_field(u, lambda, s);
        CHECK(j_acf(ul, R / lambda, p, sp).value == doctest::Approx(jG).epsilon(1e-3));
        CHECK(j_acf_grad(ul, R / lambda, p, sp).value == doctest::Approx(jg).epsilon(1e-3));
    }
}

TEST_CASE("local functional positivity and node-doubling stability") {
    QuadratureSpec sp = spec1();
    ScalarField u = xbump_field(1, 1.0);
    const double a = j_acf_local(u, 0.5, 1, sp);
    const double b = j_acf_local(u, 0.5, 1, sp.doubled());
    CHECK(a > 0.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-8));
}

TEST_CASE("monotonicity experiment on a constant is trivially flat") {
    QuadratureSpec sp = spec1();
    FracParams p = make_params(1, 0.5, sp);
    FunctionalCurve curve = monotonicity_experiment(constant_field(1, 1.0),
                                                    {0.2, 0.4, 0.6, 0.8}, p, sp, AcfVariant::G);
    CHECK(curve.monotonicity_defect <= 1e-10);
    CHECK(curve.defect_pass);
    CHECK(curve.precondition.met);
    CHECK(curve.monotone_prefix == 4);
    CHECK(curve.precondition.points.size() == 9);
}

TEST_CASE("monotonicity experiment rejects bad grids") {
    QuadratureSpec sp = spec1();
    FracParams p = make_params(1, 0.5, sp);
    CHECK_THROWS_AS(
        monotonicity_experiment(constant_field(1, 1.0), {0.4, 0.2}, p, sp, AcfVariant::G),
        NlacfError);
    CHECK_THROWS_AS(monotonicity_experiment(constant_field(1, 1.0), {}, p, sp, AcfVariant::G),
                    NlacfError);
}

TEST_CASE("stability report structure on a short grid") {
    QuadratureSpec sp = spec1();
    ScalarField u = bump_field(1, 1.0);
    StabilityReport rep = stability_experiment(u, 0.5, {0.6, 0.8}, 1, sp, AcfVariant::G);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.local_target > 0.0);
    CHECK(std::isfinite(rep.extrapolated));
    CHECK(rep.rows[0].s == 0.6);
}

TEST_CASE("bound experiment: finite stable ratio, log case rejected") {
    QuadratureSpec sp = spec1();
    FracParams p = make_params(1, 0.25, sp);
    ScalarField u = bump_field(1, 1.0);
    BoundReport rep = acf_bound_experiment(u, {0.25, 0.5}, p, sp, AcfVariant::G);
    CHECK(rep.weighted_integral > 0.0);
    CHECK(rep.max_ratio > 0.0);
    CHECK(std::isfinite(rep.max_ratio));
    CHECK(rep.stable);

    FracParams plog = make_params(1, 0.5, sp);
    CHECK_THROWS_AS(acf_bound_experiment(u, {0.5}, plog, sp, AcfVariant::G), NlacfError);
}

TEST_CASE("gradient estimate: ratio finite and normalization-invariant") {
    QuadratureSpec sp = spec1();
    FracParams p = make_params(1, 0.25, sp);
    ScalarField u = bump_field(1, 1.0);
    GradEstimateReport rep = gradient_estimate_experiment(u, p, sp);
    CHECK(rep.finite);
    CHECK(rep.g0 > 0.0);
    CHECK(rep.bracket > 0.0);
    REQUIRE(rep.ratios.size() == 3);
    CHECK(rep.normalization_drift < 1e-6);

    CHECK_THROWS_AS(gradient_estimate_experiment(gaussian_field(1, 1.0), p, sp), NlacfError);
}

TEST_CASE("mean value lower bound for a field meeting the sign hypothesis") {
    // G_u(0) <= (1+s) J^s(u, R): consequence of the s-mean value comparison.
    QuadratureSpec sp = spec1();
    const double s = 0.5;
    FracParams p = make_params(1, s, sp);
    ScalarField u = bump_field(1, 1.0);
    ScalarField G = derived_G(u, p, sp);
    const double g0 = G.eval(vec0());
    const OperatorValue j = j_acf(u, 0.5, p, sp);
    FunctionalCurve curve = monotonicity_experiment(u, {0.5}, p, sp, AcfVariant::G);
    if (curve.precondition.met)
        CHECK(g0 <= (1.0 + s) * j.value + 10.0 * j.abs_error_estimate);
}
