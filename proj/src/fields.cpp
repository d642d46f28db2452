#include "nlacf/fields.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

namespace nlacf {

// ---------------------------------------------------------------------------
// MemoCache

namespace {

struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
        std::size_t h = 1469598103934665603ull;
        for (long long v : k) {
            h ^= static_cast<std::size_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

std::string cache_path_for(const std::string& tag) {
    const char* dir = std::getenv("NONLOCAL_ACF_CACHE_DIR");
    if (!dir || !*dir) return {};
    std::ostringstream name;
    name << "nlacf-" << std::hex << std::hash<std::string>{}(tag) << ".cache";
    return (std::filesystem::path(dir) / name.str()).string();
}

}  // namespace

struct MemoCache::Impl {
    double quantum;
    std::string path;
    mutable std::shared_mutex mutex;
    std::unordered_map<std::array<long long, 3>, double, KeyHash> map;
    bool dirty = false;

    std::array<long long, 3> key(const Vec& x) const {
        return {std::llround(x[0] / quantum), std::llround(x[1] / quantum),
                std::llround(x[2] / quantum)};
    }
};

MemoCache::MemoCache(std::string tag, double quantum) : impl_(new Impl) {
    impl_->quantum = quantum;
    impl_->path = cache_path_for(tag);
    if (impl_->path.empty()) return;
    std::ifstream in(impl_->path);
    std::array<long long, 3> k{};
    double v = 0.0;
    while (in >> k[0] >> k[1] >> k[2] >> v) impl_->map.emplace(k, v);
}

MemoCache::~MemoCache() {
    if (impl_->path.empty() || !impl_->dirty) return;
    // Atomic rewrite: temp file then rename.
    const std::string tmp = impl_->path + ".tmp";
    {
        std::ofstream out(tmp);
        out.precision(17);
        for (const auto& [k, v] : impl_->map)
            out << k[0] << ' ' << k[1] << ' ' << k[2] << ' ' << v << '\n';
    }
    std::error_code ec;
    std::filesystem::rename(tmp, impl_->path, ec);
}

bool MemoCache::lookup(const Vec& x, double& out) const {
    std::shared_lock lock(impl_->mutex);
    auto it = impl_->map.find(impl_->key(x));
    if (it == impl_->map.end()) return false;
    out = it->second;
    return true;
}

void MemoCache::store(const Vec& x, double value) {
    std::unique_lock lock(impl_->mutex);
    impl_->map.emplace(impl_->key(x), value);
    impl_->dirty = true;
}

std::size_t MemoCache::size() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->map.size();
}

// ---------------------------------------------------------------------------
// Gaussian field and its radial Fourier oracle

namespace {

/// (-Delta)^s of exp(-|x|^2/(2 w^2)) in R^n by a one-dimensional integral of
/// |xi|^(2s) against the Gaussian Fourier transform.
double gaussian_frac_lap(int n, double w, double s, double radius) {
    QuadratureSpec fine;
    fine.panels = 40;
    fine.nodes_per_panel = 24;
    // e^{-w^2 xi^2 / 2} < 1e-20 beyond w*xi ~ 9.6.
    const double xi_max = 9.7 / w;
    auto radial = [&](double rho) {
        const double gauss = std::exp(-0.5 * w * w * rho * rho);
        const double arg = rho * radius;
        switch (n) {
            case 1:
                return std::pow(rho, 2.0 * s) * gauss * std::cos(arg);
            case 2:
                return std::pow(rho, 2.0 * s + 1.0) * gauss * std::cyl_bessel_j(0, arg);
            default: {
                const double sinc = arg < 1e-8 ? 1.0 - arg * arg / 6.0 : std::sin(arg) / arg;
                return std::pow(rho, 2.0 * s + 2.0) * gauss * sinc;
            }
        }
    };
    // The xi^(2s) factor has unbounded derivatives at 0: grade the head.
    const double head_len = std::min(1.0, xi_max);
    Integral head = integrate_singular(radial, head_len, 2.0 * s, 0.0, fine);
    Integral rest = integrate_smooth(radial, head_len, xi_max, 64, fine);
    const double total = head.value + rest.value;
    switch (n) {
        case 1: return w * std::sqrt(2.0 / M_PI) * total;
        case 2: return w * w * total;
        default: return w * w * w * std::sqrt(2.0 / M_PI) * total;
    }
}

}  // namespace

ScalarField gaussian_field(int n, double width) {
    if (n < 1 || n > 3) throw NlacfError("gaussian_field: n must be 1, 2 or 3");
    if (!(width > 0.0)) throw NlacfError("gaussian_field: width must be positive");
    const double w2 = width * width;
    ScalarField u;
    u.dim = n;
    {
        std::ostringstream id;
        id << "gaussian:w=" << width;
        u.id = id.str();
    }
    u.eval = [w2](const Vec& x) { return std::exp(-0.5 * norm2(x) / w2); };
    u.regularity = Regularity::C4;
    // Algebraic envelope dominating the Gaussian beyond R0 = 5w: touching at
    // R0 and monotone-dominating since p = 8 < (R0/w)^2.
    const double R0 = 5.0 * width;
    const double p = 8.0;
    u.tail = {std::exp(-0.5 * R0 * R0 / w2) * std::pow(R0, p), p, R0};
    u.grad = [w2](const Vec& x) {
        const double v = std::exp(-0.5 * norm2(x) / w2);
        return (-v / w2) * x;
    };
    u.hess = [w2](const Vec& x) {
        const double v = std::exp(-0.5 * norm2(x) / w2);
        Mat h{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                h[i][j] = v * (x[i] * x[j] / (w2 * w2) - (i == j ? 1.0 / w2 : 0.0));
        return h;
    };
    u.frac_lap = [n, width](const Vec& x, double s) {
        return gaussian_frac_lap(n, width, s, norm(x));
    };
    return u;
}

// ---------------------------------------------------------------------------
// Bump fields

namespace {

double bump_value(double t) {  // t = |x/r|^2 < 1
    return std::exp(1.0 - 1.0 / (1.0 - t));
}

}  // namespace

ScalarField bump_field(int n, double support_radius) {
    if (n < 1 || n > 3) throw NlacfError("bump_field: n must be 1, 2 or 3");
    if (!(support_radius > 0.0)) throw NlacfError("bump_field: radius must be positive");
    const double r2 = support_radius * support_radius;
    ScalarField u;
    u.dim = n;
    {
        std::ostringstream id;
        id << "bump:r=" << support_radius;
        u.id = id.str();
    }
    u.eval = [r2](const Vec& x) {
        const double t = norm2(x) / r2;
        return t < 1.0 ? bump_value(t) : 0.0;
    };
    u.regularity = Regularity::SmoothCompact;
    u.tail = TailEnvelope::compact_support(support_radius);
    u.grad = [r2](const Vec& x) {
        const double t = norm2(x) / r2;
        if (t >= 1.0) return vec0();
        const double q = 1.0 - t;
        return (-2.0 * bump_value(t) / (r2 * q * q)) * x;
    };
    u.hess = [r2](const Vec& x) {
        Mat h{};
        const double t = norm2(x) / r2;
        if (t >= 1.0) return h;
        const double v = bump_value(t);
        const double q = 1.0 - t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double xx = x[i] * x[j] / (r2 * r2);
                h[i][j] = v * (4.0 * xx / (q * q * q * q) - 8.0 * xx / (q * q * q) -
                               (i == j ? 2.0 / (r2 * q * q) : 0.0));
            }
        return h;
    };
    return u;
}

ScalarField xbump_field(int n, double support_radius) {
    ScalarField b = bump_field(n, support_radius);
    ScalarField u;
    u.dim = n;
    {
        std::ostringstream id;
        id << "xbump:r=" << support_radius;
        u.id = id.str();
    }
    auto beval = b.eval;
    auto bgrad = b.grad;
    u.eval = [beval](const Vec& x) { return x[0] * beval(x); };
    u.regularity = Regularity::SmoothCompact;
    u.tail = TailEnvelope::compact_support(support_radius);
    u.grad = [beval, bgrad](const Vec& x) {
        Vec g = x[0] * bgrad(x);
        g[0] += beval(x);
        return g;
    };
    return u;
}

ScalarField constant_field(int n, double c) {
    if (n < 1 || n > 3) throw NlacfError("constant_field: n must be 1, 2 or 3");
    ScalarField u;
    u.dim = n;
    {
        std::ostringstream id;
        id << "constant:c=" << c;
        u.id = id.str();
    }
    u.eval = [c](const Vec&) { return c; };
    u.regularity = Regularity::C4;
    u.tail = {std::abs(c), 0.0, 1.0};
    u.grad = [](const Vec&) { return vec0(); };
    u.hess = [](const Vec&) { return Mat{}; };
    u.frac_lap = [](const Vec&, double) { return 0.0; };
    return u;
}

ScalarField fundamental_solution_field(const FracParams& params) {
    if (!params.kappa_ns)
        throw NlacfError("fundamental_solution_field: undefined when 2s = n (log case)");
    const int n = params.n;
    const double s = params.s;
    const double kappa = *params.kappa_ns;
    ScalarField u;
    u.dim = n;
    u.id = "phi_s";
    u.eval = [n, s, kappa](const Vec& x) {
        const double r = norm(x);
        if (r == 0.0) throw NlacfError("phi_s: evaluation at the origin");
        return kappa * std::pow(r, 2.0 * s - n);
    };
    u.regularity = Regularity::Holder;
    // kappa < 0 when 2s > n; the envelope bounds |u|.
    u.tail = {std::abs(kappa), static_cast<double>(n) - 2.0 * s, 1.0};
    u.singular_points = {vec0()};
    u.singular_exponent = 2.0 * s - n;
    return u;
}

// ---------------------------------------------------------------------------
// Poisson kernel and the harmonic construction

double poisson_kernel(const Vec& x, const Vec& y, const Ball& ball, const FracParams& params) {
    const Vec xc = x - ball.center;
    const Vec yc = y - ball.center;
    const double r2 = ball.radius * ball.radius;
    const double in = r2 - norm2(xc);
    const double out = norm2(yc) - r2;
    if (!(in > 0.0) || !(out > 0.0))
        throw NlacfError("poisson_kernel: requires |x| < r < |y|");
    return params.a_ns * std::pow(in / out, params.s) / std::pow(norm(x - y), params.n);
}

ScalarField poisson_harmonic_field(const FracParams& params, const Ball& ball,
                                   const ScalarField& g, const QuadratureSpec& spec) {
    if (norm(ball.center) != 0.0)
        throw NlacfError("poisson_harmonic_field: ball must be origin-centered");
    if (!envelope_in_weighted_l1(g.tail, params.n, params.s))
        throw NlacfError("poisson_harmonic_field: exterior data not integrable against the kernel");
    const int n = params.n;
    const double s = params.s;
    const double a = params.a_ns;
    const double r = ball.radius;

    std::ostringstream tag;
    tag << "poisson|r=" << r << "|g=" << g.id << "|n=" << n << "|s=" << s
        << "|tol=" << spec.target_rel_tol;
    auto cache = std::make_shared<MemoCache>(tag.str());

    // Truncation for the exterior integral: kernel decays like |y|^(-n-2s).
    double outer = r;
    if (g.tail.compact()) {
        outer = std::max(2.0 * r, g.tail.R0);
    } else {
        TailEnvelope env = g.tail;
        env.R0 = std::max(env.R0, 2.0 * r);
        env.A *= a * std::pow(r * r, s) * std::pow(2.0, n);  // |x-y| >= |y|/2 there
        outer = truncation_radius(env, n + 2.0 * s, spec.tail_tol, n);
    }

    ScalarField u;
    u.dim = n;
    {
        std::ostringstream id;
        id << "poisson:r=" << r << ";g=" << g.id;
        u.id = id.str();
    }
    // Trusted metadata: s-harmonic functions are smooth in the ball; outside
    // the field inherits g.
    u.regularity = g.regularity == Regularity::SmoothCompact ? Regularity::C4 : g.regularity;
    u.tail = g.tail;
    u.tail.R0 = std::max(g.tail.R0, r * (1.0 + 1e-12));
    auto geval = g.eval;
    u.eval = [=](const Vec& x) {
        if (norm2(x) >= r * r) return geval(x);
        double memo = 0.0;
        if (cache->lookup(x, memo)) return memo;
        const double in = std::pow(r * r - norm2(x), s);
        RadialIntegrand exterior;
        exterior.beta = -s;
        exterior.singular_radius = r;
        exterior.eval = [&](double rho, double delta, const Vec& dir) {
            const Vec y = rho * dir;
            // |y|^2 - r^2 = delta (delta + 2r), formed cancellation-free.
            const double out = delta * (delta + 2.0 * r);
            return a * in * std::pow(out, -s) * std::pow(norm(x - y), -double(n)) * geval(y);
        };
        const double value = integrate_radial(exterior, spec, outer, n).value;
        cache->store(x, value);
        return value;
    };
    return u;
}

// ---------------------------------------------------------------------------
// Catalog parsing

namespace {

double parse_option(const std::string& body, const std::string& key, const std::string& id) {
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto eq = item.find('=');
        if (eq != std::string::npos && item.substr(0, eq) == key)
            return std::stod(item.substr(eq + 1));
    }
    throw NlacfError("field_from_id: missing option '" + key + "' in '" + id + "'");
}

}  // namespace

ScalarField field_from_id(const std::string& id, int n, double s, const QuadratureSpec& spec) {
    const auto colon = id.find(':');
    const std::string kind = id.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : id.substr(colon + 1);
    if (kind == "constant") return constant_field(n, parse_option(body, "c", id));
    if (kind == "gaussian") return gaussian_field(n, parse_option(body, "w", id));
    if (kind == "bump") return bump_field(n, parse_option(body, "r", id));
    if (kind == "xbump") return xbump_field(n, parse_option(body, "r", id));
    if (kind == "phi_s") return fundamental_solution_field(make_params(n, s, spec));
    if (kind == "poisson") {
        const std::string gkey = "g=";
        const auto pos = body.find(gkey);
        if (pos == std::string::npos)
            throw NlacfError("field_from_id: poisson needs an inner field: '" + id + "'");
        Ball ball{vec0(), parse_option(body.substr(0, pos), "r", id)};
        ScalarField g = field_from_id(body.substr(pos + gkey.size()), n, s, spec);
        return poisson_harmonic_field(make_params(n, s, spec), ball, g, spec);
    }
    throw NlacfError("field_from_id: unknown field id '" + id + "'");
}

// ---------------------------------------------------------------------------
// Field transforms

ScalarField scaled_field(const ScalarField& u, double lambda, double s) {
    if (!(lambda > 0.0)) throw NlacfError("scaled_field: lambda must be positive");
    ScalarField v;
    v.dim = u.dim;
    v.id = "scaled(" + u.id + ")";
    const double amp = std::pow(lambda, -s);
    auto ueval = u.eval;
    v.eval = [=](const Vec& x) { return amp * ueval(lambda * x); };
    v.regularity = u.regularity;
    if (u.tail.compact()) {
        v.tail = TailEnvelope::compact_support(u.tail.R0 / lambda);
    } else {
        v.tail = {amp * u.tail.A * std::pow(lambda, -u.tail.p), u.tail.p, u.tail.R0 / lambda};
    }
    for (const Vec& p : u.singular_points) v.singular_points.push_back((1.0 / lambda) * p);
    v.singular_exponent = u.singular_exponent;
    if (u.grad) {
        auto ugrad = u.grad;
        v.grad = [=](const Vec& x) { return (amp * lambda) * ugrad(lambda * x); };
    }
    return v;
}

ScalarField shifted_field(const ScalarField& u, const Vec& a) {
    ScalarField v;
    v.dim = u.dim;
    v.id = "shifted(" + u.id + ")";
    auto ueval = u.eval;
    v.eval = [=](const Vec& x) { return ueval(x - a); };
    v.regularity = u.regularity;
    v.tail = u.tail.shifted(norm(a));
    for (const Vec& p : u.singular_points) v.singular_points.push_back(p + a);
    v.singular_exponent = u.singular_exponent;
    if (u.grad) {
        auto ugrad = u.grad;
        v.grad = [=](const Vec& x) { return ugrad(x - a); };
    }
    return v;
}

// ---------------------------------------------------------------------------
// Envelope checks

bool verify_envelope(const ScalarField& u, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> radius(u.tail.R0, 10.0 * u.tail.R0);
    for (int k = 0; k < samples; ++k) {
        Vec d = vec0();
        double len = 0.0;
        do {
            for (int i = 0; i < u.dim; ++i) d[i] = gauss(rng);
            len = norm(d);
        } while (len < 1e-8);
        const double rho = radius(rng) * (1.0 + 1e-12);
        const Vec y = (rho / len) * d;
        const double bound =
            u.tail.compact() ? 0.0 : 1.01 * u.tail.A * std::pow(norm(y), -u.tail.p);
        if (std::abs(u.eval(y)) > bound) return false;
    }
    return true;
}

bool envelope_in_weighted_l1(const TailEnvelope& tail, int n, double s) {
    (void)n;
    if (tail.compact()) return true;
    // Integrand ~ A |y|^(-p) |y|^(n-1) / |y|^(n+2s) at infinity.
    return tail.p + 2.0 * s > 0.0;
}

}  // namespace nlacf
