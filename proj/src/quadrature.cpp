#include "nlacf/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "nlacf/gauss.hpp"
#include "nlacf/parallel.hpp"

namespace nlacf {

void QuadratureSpec::validate() const {
    if (panels < 1 || nodes_per_panel < 1 || nodes_per_panel > 128)
        throw NlacfError("QuadratureSpec: bad panel/node counts");
    if (!(grading_ratio > 0.0 && grading_ratio < 1.0))
        throw NlacfError("QuadratureSpec: grading_ratio must lie in (0,1)");
    if (angular_nodes < 2 || polar_nodes < 1 || azimuth_nodes < 2 || outer_nodes < 1)
        throw NlacfError("QuadratureSpec: bad angular resolution");
    if (!(tail_tol > 0.0) || !(target_rel_tol > 0.0))
        throw NlacfError("QuadratureSpec: tolerances must be positive");
}

QuadratureSpec QuadratureSpec::halved() const {
    QuadratureSpec h = *this;
    h.panels = std::max(1, panels / 2);
    h.nodes_per_panel = std::max(2, nodes_per_panel / 2);
    h.angular_nodes = std::max(4, angular_nodes / 2);
    h.polar_nodes = std::max(2, polar_nodes / 2);
    h.azimuth_nodes = std::max(4, azimuth_nodes / 2);
    h.outer_nodes = std::max(4, outer_nodes / 2);
    return h;
}

QuadratureSpec QuadratureSpec::doubled() const {
    QuadratureSpec d = *this;
    d.panels = panels * 2;
    d.nodes_per_panel = std::min(128, nodes_per_panel * 2);
    d.angular_nodes = angular_nodes * 2;
    d.polar_nodes = polar_nodes * 2;
    d.azimuth_nodes = azimuth_nodes * 2;
    d.outer_nodes = outer_nodes * 2;
    return d;
}

QuadratureSpec QuadratureSpec::for_dim(int n) {
    QuadratureSpec spec;
    switch (n) {
        case 1: spec.target_rel_tol = 1e-8; break;
        case 2: spec.target_rel_tol = 1e-6; break;
        case 3: spec.target_rel_tol = 1e-4; break;
        default: throw NlacfError("QuadratureSpec::for_dim: n must be 1, 2 or 3");
    }
    return spec;
}

TailEnvelope TailEnvelope::shifted(double shift) const {
    if (compact()) return compact_support(R0 + std::abs(shift));
    TailEnvelope out = *this;
    out.R0 = 2.0 * (R0 + std::abs(shift));
    // |y - x0| >= |y|/2 once |y| >= 2(R0 + |x0|), so the decay rate survives
    // with the constant inflated by 2^p (or left alone for growth envelopes).
    if (p > 0.0) out.A = A * std::pow(2.0, p);
    return out;
}

double truncation_radius(const TailEnvelope& envelope, double kernel_decay, double tol, int n) {
    if (n < 1 || n > 3) throw NlacfError("truncation_radius: n must be 1, 2 or 3");
    if (!(tol > 0.0)) throw NlacfError("truncation_radius: tol must be positive");
    if (envelope.compact()) return envelope.R0;
    const double q = envelope.p + kernel_decay - n;  // tail ~ A*S_n*T^(-q)/q
    if (!(q > 0.0)) throw NlacfError("truncation_radius: tail not integrable");
    const double coeff = envelope.A * unit_sphere_measure(n) / q;
    double T = envelope.R0;
    if (coeff > tol) T = std::max(T, std::pow(coeff / tol, 1.0 / q));
    return T;
}

namespace {

/// Gauss sum of f over [a, b].
double panel_value(const Fn1D& f, double a, double b, const GaussRule& g) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * f(mid + half * g.x[i]);
    return acc * half;
}

/// Sum panel_value over a breakpoint list via the panel backend.
double mesh_value(const Fn1D& f, const std::vector<double>& breaks, const GaussRule& g) {
    const std::size_t count = breaks.size() - 1;
    std::vector<double> out;
    panel_sums(count, [&](std::size_t i) { return panel_value(f, breaks[i], breaks[i + 1], g); },
               out);
    double acc = 0.0;
    for (double v : out) acc += v;
    return acc;
}

double graded_value(const Fn1D& f, double len, double beta, double core_floor,
                    const QuadratureSpec& spec) {
    std::vector<double> breaks;
    breaks.reserve(static_cast<std::size_t>(spec.panels) + 1);
    double lo = len;
    breaks.push_back(len);
    // The singular scale is min(len, 1): grade down to ratio^panels of it even
    // when len is a huge truncation radius, so far-field extent never starves
    // the resolution of the singularity. Hard cap guards ratio -> 1 abuse.
    const double core_target =
        std::max(core_floor, std::min(len, 1.0) * std::pow(spec.grading_ratio, spec.panels));
    const int cap = spec.panels + 120;
    for (int k = 0; k < cap; ++k) {
        double next = lo * spec.grading_ratio;
        if (next <= core_target) break;
        breaks.push_back(next);
        lo = next;
    }
    std::reverse(breaks.begin(), breaks.end());
    const GaussRule& g = gauss_legendre(spec.nodes_per_panel);
    double acc = mesh_value(f, breaks, g);
    // Close the core [0, t0] assuming f ~ f(t0) * (t/t0)^beta there.
    const double t0 = breaks.front();
    acc += f(t0) * t0 / (beta + 1.0);
    return acc;
}

}  // namespace

Integral integrate_singular(const Fn1D& f, double len, double beta, double core_floor,
                            const QuadratureSpec& spec) {
    spec.validate();
    if (!(len > 0.0)) return {};
    if (!(beta > -1.0)) throw NlacfError("integrate_singular: beta must exceed -1");
    const double full = graded_value(f, len, beta, core_floor, spec);
    const double coarse = graded_value(f, len, beta, core_floor, spec.halved());
    return {full, std::abs(full - coarse)};
}

Integral integrate_smooth(const Fn1D& f, double a, double b, int panels,
                          const QuadratureSpec& spec) {
    spec.validate();
    if (!(b > a)) return {};
    panels = std::max(1, panels);
    auto uniform = [&](int np, const GaussRule& g) {
        std::vector<double> breaks(static_cast<std::size_t>(np) + 1);
        for (int i = 0; i <= np; ++i) breaks[static_cast<std::size_t>(i)] = a + (b - a) * i / np;
        return mesh_value(f, breaks, g);
    };
    const double full = uniform(panels, gauss_legendre(spec.nodes_per_panel));
    const double coarse =
        uniform(std::max(1, panels / 2), gauss_legendre(spec.halved().nodes_per_panel));
    return {full, std::abs(full - coarse)};
}

Integral integrate_geometric(const Fn1D& f, double a, double b, const QuadratureSpec& spec) {
    spec.validate();
    if (!(b > a)) return {};
    if (!(a > 0.0)) throw NlacfError("integrate_geometric: requires 0 < a < b");
    auto geo = [&](int per_decade, const GaussRule& g) {
        const double decades = std::log10(b / a);
        const int np = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
        std::vector<double> breaks(static_cast<std::size_t>(np) + 1);
        for (int i = 0; i <= np; ++i)
            breaks[static_cast<std::size_t>(i)] = a * std::pow(b / a, double(i) / np);
        return mesh_value(f, breaks, g);
    };
    const double full = geo(8, gauss_legendre(spec.nodes_per_panel));
    const double coarse = geo(4, gauss_legendre(spec.halved().nodes_per_panel));
    return {full, std::abs(full - coarse)};
}

AngularRule angular_rule(int n, const QuadratureSpec& spec) {
    spec.validate();
    AngularRule rule;
    if (n == 1) {
        rule.dir = {vec(1.0), vec(-1.0)};
        rule.w = {1.0, 1.0};
        return rule;
    }
    if (n == 2) {
        const int m = spec.angular_nodes + (spec.angular_nodes % 2);  // keep +/- symmetry
        const double w = 2.0 * M_PI / m;
        for (int i = 0; i < m; ++i) {
            const double th = 2.0 * M_PI * (i + 0.5) / m;
            rule.dir.push_back(vec(std::cos(th), std::sin(th)));
            rule.w.push_back(w);
        }
        return rule;
    }
    if (n == 3) {
        // Product rule: Gauss in cos(phi), trapezoid (exact for periodic) in azimuth.
        const GaussRule& g = gauss_legendre(spec.polar_nodes);
        const int ma = spec.azimuth_nodes + (spec.azimuth_nodes % 2);
        const double wa = 2.0 * M_PI / ma;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double c = g.x[i];
            const double sphi = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int j = 0; j < ma; ++j) {
                const double az = 2.0 * M_PI * (j + 0.5) / ma;
                rule.dir.push_back(vec(sphi * std::cos(az), sphi * std::sin(az), c));
                rule.w.push_back(g.w[i] * wa);
            }
        }
        return rule;
    }
    throw NlacfError("angular_rule: n must be 1, 2 or 3");
}

AngularRule rotated(const AngularRule& rule, double angle_xy, double angle_xz) {
    AngularRule out = rule;
    const double c1 = std::cos(angle_xy), s1 = std::sin(angle_xy);
    const double c2 = std::cos(angle_xz), s2 = std::sin(angle_xz);
    for (Vec& d : out.dir) {
        Vec a = {c1 * d[0] - s1 * d[1], s1 * d[0] + c1 * d[1], d[2]};
        d = {c2 * a[0] - s2 * a[2], a[1], s2 * a[0] + c2 * a[2]};
    }
    return out;
}

Integral integrate_radial(const RadialIntegrand& integrand, const QuadratureSpec& spec,
                          double outer_radius, int n, const AngularRule* rule_override) {
    spec.validate();
    const double r0 = integrand.singular_radius;
    if (!(outer_radius > r0)) return {};
    const AngularRule rule = rule_override ? *rule_override : angular_rule(n, spec);
    // Radial profile at offset delta from the singular radius, angular sum applied.
    Fn1D profile = [&](double delta) {
        const double rho = r0 + delta;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i)
            acc += rule.w[i] * integrand.eval(rho, delta, rule.dir[i]);
        return acc * std::pow(rho, n - 1);
    };
    return integrate_singular(profile, outer_radius - r0, integrand.beta, integrand.core_floor,
                              spec);
}

ConvergenceReport self_check(const QuadratureSpec& spec, const RadialIntegrand& integrand,
                             double outer_radius, int n) {
    ConvergenceReport rep;
    const QuadratureSpec fine = spec.doubled();
    const QuadratureSpec finest = fine.doubled();
    rep.value_coarse = integrate_radial(integrand, spec, outer_radius, n).value;
    rep.value_fine = integrate_radial(integrand, fine, outer_radius, n).value;
    rep.value_finest = integrate_radial(integrand, finest, outer_radius, n).value;
    const double e1 = std::abs(rep.value_coarse - rep.value_finest);
    const double e2 = std::abs(rep.value_fine - rep.value_finest);
    rep.monotone_decay = e2 <= e1;
    if (e2 > 0.0 && e1 > 0.0) rep.observed_order = std::log2(e1 / e2);
    return rep;
}

}  // namespace nlacf
