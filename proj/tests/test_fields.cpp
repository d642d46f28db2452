#include <cmath>

#include "doctest.h"
#include "nlacf/fields.hpp"

using namespace nlacf;

TEST_CASE("gaussian field and its radial Fourier oracle") {
    ScalarField u = gaussian_field(1, 1.0);
    CHECK(u.eval(vec0()) == doctest::Approx(1.0));
    CHECK(norm(u.grad(vec0())) == 0.0);
    // n=1, w=1, s=1/2 at the origin: 2^s Gamma(s + 1/2) / sqrt(pi).
    CHECK(u.frac_lap(vec0(), 0.5) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-9));
    // s = 0.25: 2^{1/4} Gamma(3/4) / sqrt(pi).
    const double expected = std::pow(2.0, 0.25) * std::tgamma(0.75) / std::sqrt(M_PI);
    CHECK(u.frac_lap(vec0(), 0.25) == doctest::Approx(expected).epsilon(1e-9));

    ScalarField u2 = gaussian_field(2, 1.0);
    CHECK(norm(u2.grad(vec0())) == 0.0);
    // Radially symmetric closed form at the origin in R^2:
    // w^2 int rho^{2s+1} e^{-rho^2/2} = 2^s Gamma(s+1).
    CHECK(u2.frac_lap(vec0(), 0.5) ==
          doctest::Approx(std::sqrt(2.0) * std::tgamma(1.5)).epsilon(1e-9));
}

TEST_CASE("bump field normalization, support, and stable mass") {
    ScalarField u = bump_field(1, 1.0);
    CHECK(u.eval(vec0()) == doctest::Approx(1.0));
    CHECK(u.eval(vec(1.0)) == 0.0);
    CHECK(u.eval(vec(1.5)) == 0.0);
    CHECK(u.tail.compact());

    QuadratureSpec spec;
    auto mass = [&](const QuadratureSpec& sp) {
        return integrate_smooth([&](double t) { return u.eval(vec(t)); }, -1.0, 1.0, 16, sp)
            .value;
    };
    const double m1 = mass(spec);
    const double m2 = mass(spec.doubled());
    CHECK(m1 > 0.0);
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-10));

    // Gradient oracle vs central differences at a generic point.
    const Vec x = vec(0.3);
    const double h = 1e-6;
    const double fd = (u.eval(vec(0.3 + h)) - u.eval(vec(0.3 - h))) / (2.0 * h);
    CHECK(u.grad(x)[0] == doctest::Approx(fd).epsilon(1e-6));
    const double fd2 = (u.eval(vec(0.3 + h)) - 2.0 * u.eval(x) + u.eval(vec(0.3 - h))) / (h * h);
    CHECK(u.hess(x)[0][0] == doctest::Approx(fd2).epsilon(1e-3));
}

TEST_CASE("odd bump vanishes at the origin with positive slope") {
    ScalarField u = xbump_field(1, 1.0);
    CHECK(u.eval(vec0()) == 0.0);
    CHECK(u.grad(vec0())[0] == doctest::Approx(1.0));
    CHECK(u.eval(vec(0.5)) == doctest::Approx(-u.eval(vec(-0.5))));
}

TEST_CASE("fundamental solution values and singular-point metadata") {
    QuadratureSpec spec;
    ScalarField phi1 = fundamental_solution_field(make_params(1, 0.25, spec));
    CHECK(phi1.eval(vec(1.0)) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK_THROWS_AS(phi1.eval(vec0()), NlacfError);
    REQUIRE(phi1.singular_points.size() == 1);

    // n=2, s=1/2: kappa = 1/(2 pi), so phi(|x|=2) = 1/(4 pi).
    ScalarField phi2 = fundamental_solution_field(make_params(2, 0.5, spec));
    CHECK(phi2.eval(vec(2.0)) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-12));

    CHECK_THROWS_AS(fundamental_solution_field(make_params(1, 0.5, spec)), NlacfError);
}

TEST_CASE("poisson kernel reduces to the mean kernel at the center") {
    QuadratureSpec spec;
    FracParams p = make_params(1, 0.5, spec);
    Ball ball{vec0(), 1.0};
    const Vec y = vec(2.0);
    const double at_center = poisson_kernel(vec0(), y, ball, p);
    // A^s_r(y) = a r^{2s} / ((|y|^2-r^2)^s |y|^n).
    const double mean_kernel = p.a_ns * 1.0 / (std::sqrt(3.0) * 2.0);
    CHECK(at_center == doctest::Approx(mean_kernel).epsilon(1e-13));
    CHECK(poisson_kernel(vec0(), vec(-2.0), ball, p) == doctest::Approx(at_center));
    CHECK_THROWS_AS(poisson_kernel(vec(2.0), y, ball, p), NlacfError);
}

TEST_CASE("poisson construction reproduces constants in the ball") {
    QuadratureSpec spec;
    FracParams p = make_params(1, 0.5, spec);
    ScalarField u = poisson_harmonic_field(p, Ball{vec0(), 1.0}, constant_field(1, 1.0), spec);
    for (double x : {0.0, 0.4, -0.7}) CHECK(u.eval(vec(x)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(u.eval(vec(3.0)) == 1.0);  // exterior: the data itself
}

TEST_CASE("tail envelopes verified by sampling on all catalog fields") {
    QuadratureSpec spec;
    CHECK(verify_envelope(gaussian_field(1, 1.0), 1234));
    CHECK(verify_envelope(gaussian_field(2, 0.7), 1234));
    CHECK(verify_envelope(bump_field(2, 1.0), 99));
    CHECK(verify_envelope(constant_field(1, 2.5), 7));
    CHECK(verify_envelope(fundamental_solution_field(make_params(1, 0.25, spec)), 42));
    // Growth case 2s > n: envelope has negative decay exponent.
    CHECK(verify_envelope(fundamental_solution_field(make_params(1, 0.75, spec)), 42));
}

TEST_CASE("weighted-space membership from the envelope") {
    CHECK(envelope_in_weighted_l1(TailEnvelope::compact_support(1.0), 1, 0.5));
    CHECK(envelope_in_weighted_l1({1.0, 0.0, 1.0}, 1, 0.5));
    CHECK(envelope_in_weighted_l1({1.0, -0.5, 1.0}, 1, 0.75));   // phi_s growth, 2s=1.5
    CHECK(!envelope_in_weighted_l1({1.0, -0.9, 1.0}, 1, 0.25));  // too much growth
}

TEST_CASE("catalog ids parse and reject unknowns") {
    QuadratureSpec spec;
    CHECK(field_from_id("gaussian:w=2", 1, 0.5, spec).eval(vec0()) == doctest::Approx(1.0));
    CHECK(field_from_id("bump:r=0.5", 2, 0.5, spec).eval(vec(0.5)) == 0.0);
    CHECK(field_from_id("constant:c=3", 1, 0.5, spec).eval(vec(9.0)) == 3.0);
    CHECK(field_from_id("phi_s", 1, 0.25, spec).eval(vec(1.0)) ==
          doctest::Approx(0.3989422804014327));
    ScalarField pf = field_from_id("poisson:r=1;g=bump:r=2", 1, 0.5, spec);
    CHECK(pf.id == "poisson:r=1;g=bump:r=2");
    CHECK_THROWS_AS(field_from_id("mystery:q=1", 1, 0.5, spec), NlacfError);
    CHECK_THROWS_AS(field_from_id("gaussian:width=1", 1, 0.5, spec), NlacfError);
}

TEST_CASE("memo cache quantizes keys and is shared across copies") {
    MemoCache cache("test-tag");
    double out = 0.0;
    CHECK(!cache.lookup(vec(0.5), out));
    cache.store(vec(0.5), 42.0);
    CHECK(cache.lookup(vec(0.5), out));
    CHECK(out == 42.0);
    // Within half a quantum: same key.
    CHECK(cache.lookup(vec(0.5 + 4e-10), out));
    CHECK(!cache.lookup(vec(0.5 + 1e-8), out));
    CHECK(cache.size() == 1);
}
