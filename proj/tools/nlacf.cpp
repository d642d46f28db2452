// Experiment runner: parses flat key=value configs, dispatches to the
// library, and emits per-point CSV plus a JSON report, atomically. Exit
// codes: 0 = pass, 2 = sign hypothesis not met, 1 = failure or error.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlacf/bochner.hpp"
#include "nlacf/functionals.hpp"
#include "nlacf/parallel.hpp"

using json = nlohmann::ordered_json;
using namespace nlacf;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kJsonSchemaVersion = 1;

constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;
constexpr int kExitHypothesisNotMet = 2;

// --- formatting -----------------------------------------------------------

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
  public:
    explicit Csv(std::vector<std::string> header) { row(std::move(header)); }
    void row(std::vector<std::string> cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }
    const std::string& text() const { return out_; }

  private:
    std::string out_;
};

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw NlacfError("cannot open " + tmp.string() + " for writing");
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

// --- config ---------------------------------------------------------------

/// Flat key = value file (TOML-compatible subset): '#' comments, quoted or
/// bare scalar values, [a, b, c] arrays of numbers.
class Config {
  public:
    static Config load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw NlacfError("cannot read config " + path.string());
        Config c;
        c.path_ = path;
        std::string line;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw NlacfError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected key = value");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
                val = val.substr(1, val.size() - 2);
            if (key.empty()) throw NlacfError(path.string() + ": empty key");
            c.kv_[key] = val;
        }
        return c;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw NlacfError(missing(key));
        return it->second;
    }
    std::string str_or(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }
    double num(const std::string& key) const { return parse_num(str(key), key); }
    double num_or(const std::string& key, double dflt) const {
        return has(key) ? num(key) : dflt;
    }
    int integer(const std::string& key) const {
        const double v = num(key);
        if (v != std::floor(v)) throw NlacfError("config key " + key + " must be an integer");
        return int(v);
    }
    int integer_or(const std::string& key, int dflt) const {
        return has(key) ? integer(key) : dflt;
    }
    std::vector<double> list(const std::string& key) const {
        std::string v = str(key);
        if (!v.empty() && v.front() == '[') {
            if (v.back() != ']') throw NlacfError("config key " + key + ": unterminated array");
            v = v.substr(1, v.size() - 2);
        }
        std::vector<double> out;
        std::string item;
        std::stringstream ss(v);
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (!t.empty()) out.push_back(parse_num(t, key));
        }
        if (out.empty()) throw NlacfError("config key " + key + ": empty list");
        return out;
    }
    std::vector<double> list_or(const std::string& key, std::vector<double> dflt) const {
        return has(key) ? list(key) : dflt;
    }

    /// Quadrature spec with any spec.* overrides applied.
    QuadratureSpec spec(int n) const {
        QuadratureSpec sp = QuadratureSpec::for_dim(n);
        sp.panels = integer_or("spec.panels", sp.panels);
        sp.grading_ratio = num_or("spec.grading_ratio", sp.grading_ratio);
        sp.nodes_per_panel = integer_or("spec.nodes_per_panel", sp.nodes_per_panel);
        sp.angular_nodes = integer_or("spec.angular_nodes", sp.angular_nodes);
        sp.polar_nodes = integer_or("spec.polar_nodes", sp.polar_nodes);
        sp.azimuth_nodes = integer_or("spec.azimuth_nodes", sp.azimuth_nodes);
        sp.outer_nodes = integer_or("spec.outer_nodes", sp.outer_nodes);
        sp.tail_tol = num_or("spec.tail_tol", sp.tail_tol);
        sp.target_rel_tol = num_or("spec.target_rel_tol", sp.target_rel_tol);
        sp.validate();
        return sp;
    }

    json echo() const {
        json j = json::object();
        for (const auto& [k, v] : kv_) j[k] = v;
        return j;
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    static std::string trim(const std::string& s) {
        const std::size_t b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const std::size_t e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    static double parse_num(const std::string& v, const std::string& key) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw NlacfError("config key " + key + ": not a number: " + v);
        }
        if (pos != v.size()) throw NlacfError("config key " + key + ": trailing junk: " + v);
        return out;
    }
    std::string missing(const std::string& key) const {
        return path_.string() + ": missing required key '" + key + "'";
    }

    std::map<std::string, std::string> kv_;
    std::filesystem::path path_;
};

// --- experiment plumbing --------------------------------------------------

struct RunResult {
    std::string status = "pass";  // pass | fail | hypothesis-not-met
    json summary = json::object();
    json records = json::array();
    std::string csv;

    int exit_code() const {
        if (status == "pass") return kExitPass;
        if (status == "hypothesis-not-met") return kExitHypothesisNotMet;
        return kExitFailure;
    }
};

struct RunContext {
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_overridden = false;
};

std::uint64_t effective_seed(const Config& cfg, const RunContext& ctx) {
    if (ctx.seed_overridden) return ctx.seed;
    return std::uint64_t(cfg.num_or("seed", 0.0));
}

AcfVariant variant_for(const std::string& claim) {
    if (claim.ends_with("-grad-f")) return AcfVariant::GradF;
    if (claim.ends_with("-grad")) return AcfVariant::Grad;
    return AcfVariant::G;
}

std::vector<Vec> parse_points(const Config& cfg, const std::string& key, int n) {
    const std::vector<double> flat = cfg.list(key);
    if (flat.size() % std::size_t(n) != 0)
        throw NlacfError("config key " + key + ": length must be a multiple of n");
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < flat.size(); i += std::size_t(n)) {
        Vec p = vec0();
        for (int d = 0; d < n; ++d) p[d] = flat[i + std::size_t(d)];
        pts.push_back(p);
    }
    return pts;
}

ScalarField negated(const ScalarField& u) {
    ScalarField v = u;
    v.id = "neg(" + u.id + ")";
    auto ev = u.eval;
    v.eval = [=](const Vec& x) { return -ev(x); };
    if (u.grad) {
        auto g = u.grad;
        v.grad = [=](const Vec& x) { return -1.0 * g(x); };
    }
    v.hess = nullptr;
    v.frac_lap = nullptr;
    return v;
}

json precondition_json(const PreconditionReport& pre) {
    json j;
    j["description"] = pre.description;
    j["max_positive_excursion"] = pre.max_positive_excursion;
    j["tolerance"] = pre.tolerance;
    j["met"] = pre.met;
    j["samples"] = pre.samples;
    j["errors"] = pre.errors;
    return j;
}

// --- claim implementations ------------------------------------------------

RunResult run_constants(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);

    const double c_int = c_from_integral(n, s, sp);
    const double c_closed = closed_form_c(n, s);
    const double a = closed_form_a(n, s);
    const double mu = closed_form_mu(n, s);
    const std::optional<double> kappa = closed_form_kappa(n, s);
    const double rel = std::abs(c_int - c_closed) / c_closed;

    RunResult r;
    Csv csv({"quantity", "value", "error_estimate"});
    csv.row({"c_ns_integral", fmt(c_int), fmt(rel * c_closed)});
    csv.row({"c_ns_closed", fmt(c_closed), fmt(0.0)});
    csv.row({"a_ns", fmt(a), fmt(0.0)});
    csv.row({"mu_ns", fmt(mu), fmt(0.0)});
    if (kappa) csv.row({"kappa_ns", fmt(*kappa), fmt(0.0)});
    csv.row({"asymptotic_c", fmt(asymptotic_c(n)), fmt(0.0)});
    csv.row({"asymptotic_a", fmt(asymptotic_a(n)), fmt(0.0)});
    r.csv = csv.text();

    r.summary["c_ns"] = c_int;
    r.summary["c_ns_closed_form"] = c_closed;
    r.summary["c_ns_rel_diff"] = rel;
    r.summary["a_ns"] = a;
    r.summary["mu_ns"] = mu;
    if (kappa)
        r.summary["kappa_ns"] = *kappa;
    else
        r.summary["kappa_ns"] = nullptr;  // log case 2s = n
    if (rel > 1e-6) r.status = "fail";
    return r;
}

RunResult run_moments(const Config& cfg, const RunContext&) {
    const std::vector<double> n_grid = cfg.list_or("n_grid", {1, 2, 3});
    const std::vector<double> k_grid = cfg.list_or("k_grid", {1, 2, 3});
    const std::vector<double> s_grid = cfg.list_or("s_grid", {0.25, 0.5, 0.75});
    const QuadratureSpec sp = cfg.spec(1);

    RunResult r;
    Csv csv({"n", "k", "s", "closed_form", "quadrature", "rel_diff"});
    double worst = 0.0;
    for (double nd : n_grid)
        for (double kd : k_grid)
            for (double s : s_grid) {
                const int n = int(nd);
                const int k = int(kd);
                const std::array<int, 3> alpha{k, 0, 0};
                const double closed = moment_integral_closed(n, k, alpha, s);
                const double quad = moment_integral_quadrature(n, k, alpha, s, sp);
                const double rel = std::abs(quad - closed) / closed;
                worst = std::max(worst, rel);
                csv.row({fmt(nd), fmt(kd), fmt(s), fmt(closed), fmt(quad), fmt(rel)});
                json rec;
                rec["n"] = n;
                rec["k"] = k;
                rec["s"] = s;
                rec["closed_form"] = closed;
                rec["quadrature"] = quad;
                rec["rel_diff"] = rel;
                r.records.push_back(rec);
            }
    r.csv = csv.text();
    r.summary["max_rel_diff"] = worst;
    r.summary["tolerance"] = 1e-6;
    if (worst > 1e-6) r.status = "fail";
    return r;
}

RunResult run_eval(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);
    const std::vector<Vec> pts = parse_points(cfg, "point", n);
    if (pts.size() != 1) throw NlacfError("eval: 'point' must hold exactly one point");
    const Vec x = pts[0];
    const std::string op = cfg.str("operator");

    OperatorValue v;
    if (op == "frac_laplacian")
        v = frac_laplacian(u, x, params, sp);
    else if (op == "energy_density_G")
        v = energy_density_G(u, x, params, sp);
    else if (op == "frac_gradient")
        v = frac_gradient(u, x, params, sp);
    else if (op == "s_mean")
        v = s_mean(u, x, cfg.num("r"), params, sp);
    else
        throw NlacfError("eval: unknown operator '" + op + "'");

    RunResult r;
    Csv csv({"operator", "value", "error_estimate", "truncation_radius"});
    const double scalar = (op == "frac_gradient") ? norm(v.vector) : v.value;
    csv.row({op, fmt(scalar), fmt(v.abs_error_estimate), fmt(v.truncation_radius_used)});
    r.csv = csv.text();
    r.summary["value"] = scalar;
    if (op == "frac_gradient")
        r.summary["vector"] = std::vector<double>(v.vector.begin(), v.vector.begin() + n);
    r.summary["error_estimate"] = v.abs_error_estimate;
    r.summary["truncation_radius"] = v.truncation_radius_used;
    return r;
}

RunResult run_monotonicity(const Config& cfg, const RunContext& ctx, const std::string& claim) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);
    const std::vector<double> R_grid = cfg.list("R_grid");

    const FunctionalCurve curve =
        monotonicity_experiment(u, R_grid, params, sp, variant_for(claim),
                                effective_seed(cfg, ctx));

    RunResult r;
    Csv csv({"R", "value", "error_estimate", "defect_or_target"});
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        const double fwd = (i + 1 < curve.values.size())
                               ? std::max(0.0, curve.values[i] - curve.values[i + 1])
                               : 0.0;
        csv.row({fmt(curve.radii[i]), fmt(curve.values[i]), fmt(curve.error_estimates[i]),
                 fmt(fwd)});
        json rec;
        rec["R"] = curve.radii[i];
        rec["value"] = curve.values[i];
        rec["error_estimate"] = curve.error_estimates[i];
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["monotonicity_defect"] = curve.monotonicity_defect;
    r.summary["monotone_prefix"] = curve.monotone_prefix;
    r.summary["defect_pass"] = curve.defect_pass;
    r.summary["precondition"] = precondition_json(curve.precondition);
    if (!curve.precondition.met)
        r.status = "hypothesis-not-met";
    else if (!curve.defect_pass)
        r.status = "fail";
    return r;
}

RunResult run_stability(const Config& cfg, const RunContext&, const std::string& claim) {
    const int n = cfg.integer("n");
    const QuadratureSpec sp = cfg.spec(n);
    const double R = cfg.num("R");
    // Field ids are s-parametrized; the catalog fields used here (bump,
    // gaussian, xbump) do not depend on s, so parse with a nominal value.
    const ScalarField u = field_from_id(cfg.str("field"), n, 0.5, sp);
    const std::vector<double> s_grid =
        cfg.list_or("s_grid", {0.6, 0.7, 0.8, 0.9, 0.95, 0.99});

    const StabilityReport rep = stability_experiment(u, R, s_grid, n, sp, variant_for(claim));

    RunResult r;
    Csv csv({"s", "value", "error_estimate", "defect_or_target"});
    for (const StabilityRow& row : rep.rows) {
        csv.row({fmt(row.s), fmt(row.value), fmt(row.abs_err), fmt(row.target)});
        json rec;
        rec["s"] = row.s;
        rec["value"] = row.value;
        rec["abs_err"] = row.abs_err;
        rec["target"] = row.target;
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["local_target"] = rep.local_target;
    r.summary["extrapolated"] = rep.extrapolated;
    r.summary["extrapolated_rel_err"] = rep.extrapolated_rel_err;
    r.summary["tail_decreasing"] = rep.tail_decreasing;
    r.summary["tolerance"] = 0.05;
    if (!rep.tail_decreasing || !(rep.extrapolated_rel_err <= 0.05)) r.status = "fail";
    return r;
}

RunResult run_scaling(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);
    const double R = cfg.num("R");
    const std::vector<double> lambdas = cfg.list_or("lambda_grid", {0.5, 2.0, 5.0});

    const double baseG = j_acf(u, R, params, sp).value;
    const double baseGrad = j_acf_grad(u, R, params, sp).value;

    RunResult r;
    Csv csv({"functional", "lambda", "value", "base", "rel_diff"});
    double worst = 0.0;
    for (double lambda : lambdas) {
        const ScalarField ul = scaled_field(u, lambda, s);
        const double vG = j_acf(ul, R / lambda, params, sp).value;
        const double vGrad = j_acf_grad(ul, R / lambda, params, sp).value;
        const double dG = std::abs(vG - baseG) / std::abs(baseG);
        const double dGrad = std::abs(vGrad - baseGrad) / std::abs(baseGrad);
        worst = std::max({worst, dG, dGrad});
        csv.row({"j_acf", fmt(lambda), fmt(vG), fmt(baseG), fmt(dG)});
        csv.row({"j_acf_grad", fmt(lambda), fmt(vGrad), fmt(baseGrad), fmt(dGrad)});
        json rec;
        rec["lambda"] = lambda;
        rec["j_acf"] = vG;
        rec["j_acf_rel_diff"] = dG;
        rec["j_acf_grad"] = vGrad;
        rec["j_acf_grad_rel_diff"] = dGrad;
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["max_rel_diff"] = worst;
    r.summary["tolerance"] = 1e-3;
    if (worst > 1e-3) r.status = "fail";
    return r;
}

RunResult run_bound(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);
    const std::vector<double> R_grid = cfg.list("R_grid");
    const AcfVariant which = variant_for(cfg.str_or("variant", "G") == "grad" ? "-grad" : "G");

    const BoundReport rep = acf_bound_experiment(u, R_grid, params, sp, which);

    RunResult r;
    Csv csv({"R", "value", "error_estimate", "defect_or_target"});
    for (const BoundRow& row : rep.rows) {
        csv.row({fmt(row.R), fmt(row.value), fmt(0.0), fmt(row.ratio)});
        json rec;
        rec["R"] = row.R;
        rec["value"] = row.value;
        rec["ratio"] = row.ratio;
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["weighted_integral"] = rep.weighted_integral;
    r.summary["max_ratio"] = rep.max_ratio;
    r.summary["max_ratio_refined"] = rep.max_ratio_refined;
    r.summary["stable"] = rep.stable;
    if (!rep.stable || !std::isfinite(rep.max_ratio)) r.status = "fail";
    return r;
}

RunResult run_gradest(const Config& cfg, const RunContext& ctx) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);

    const GradEstimateReport rep =
        gradient_estimate_experiment(u, params, sp, effective_seed(cfg, ctx));

    RunResult r;
    Csv csv({"R", "value", "error_estimate", "defect_or_target"});
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        csv.row({fmt(rep.radii[i]), fmt(rep.ratios[i]), fmt(0.0), fmt(rep.bracket)});
        json rec;
        rec["R"] = rep.radii[i];
        rec["ratio"] = rep.ratios[i];
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["g0"] = rep.g0;
    r.summary["bracket"] = rep.bracket;
    r.summary["normalization_drift"] = rep.normalization_drift;
    r.summary["finite"] = rep.finite;
    r.summary["precondition"] = precondition_json(rep.precondition);
    // The estimate's constant is existential: only finiteness and exact
    // quadratic-scaling invariance of the ratio are asserted. The sign
    // hypothesis is sampled and recorded but does not gate the result.
    if (!rep.finite || rep.normalization_drift > 1e-6) r.status = "fail";
    return r;
}

/// Monte Carlo companion estimate of the squared double-difference term,
/// importance-sampled by the |z|^(-1-2s) kernel in both variables (n = 1).
json mc_term_square(const ScalarField& u, const Vec& x, const FracParams& params,
                    std::uint64_t samples, std::uint64_t seed) {
    const double s = params.s;
    const double r0 = 1e-4;
    const double T = 50.0;
    const double mass = (std::pow(r0, -2.0 * s) - std::pow(T, -2.0 * s)) / (2.0 * s);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&]() {
        const double uu = unif(rng);
        const double rho = std::pow(std::pow(r0, -2.0 * s) - 2.0 * s * mass * uu, -0.5 / s);
        return (unif(rng) < 0.5 ? -rho : rho);
    };
    double sum = 0.0;
    double sumsq = 0.0;
    const double ux = u.eval(x);
    for (std::uint64_t k = 0; k < samples; ++k) {
        const double z = draw();
        const double y1 = x[0] + draw();
        const double d = (ux - u.eval(vec(x[0] - z))) -
                         (u.eval(vec(y1)) - u.eval(vec(y1 - z)));
        // Importance weights: each variable drawn with density
        // |t|^(-1-2s) / (2 mass), so the kernel factors cancel exactly.
        const double est = d * d * (2.0 * mass) * (2.0 * mass);
        sum += est;
        sumsq += est * est;
    }
    const double mean = sum / double(samples);
    const double var = std::max(0.0, sumsq / double(samples) - mean * mean);
    json j;
    j["samples"] = samples;
    j["value"] = params.c_ns * params.c_ns * mean;
    j["std_error"] = params.c_ns * params.c_ns * std::sqrt(var / double(samples));
    j["inner_cutoff"] = r0;
    j["outer_cutoff"] = T;
    return j;
}

RunResult run_bochner(const Config& cfg, const RunContext& ctx, const std::string& claim) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField u = field_from_id(cfg.str("field"), n, s, sp);
    const std::vector<Vec> pts = parse_points(cfg, "points", n);
    const bool grad_form = claim == "bochner-grad";

    RunResult r;
    Csv csv({"kind", "x1", "x2", "x3", "lhs", "term_cross", "term_square", "residual",
             "combined_error"});
    double worst_residual = 0.0;
    double worst_route = 0.0;
    for (const Vec& x : pts) {
        const BochnerResidual b = grad_form ? bochner_residual_grad(u, x, params, sp, false)
                                            : bochner_residual_G(u, x, params, sp);
        const double scale = std::max(b.scale(), 1e-12);
        worst_residual = std::max(worst_residual, std::abs(b.residual) / scale);
        csv.row({grad_form ? "grad" : "G", fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(b.lhs),
                 fmt(b.term_cross), fmt(b.term_square), fmt(b.residual),
                 fmt(b.combined_error)});
        json rec;
        rec["x"] = std::vector<double>(x.begin(), x.begin() + n);
        rec["lhs"] = b.lhs;
        rec["term_cross"] = b.term_cross;
        rec["term_square"] = b.term_square;
        rec["residual"] = b.residual;
        rec["combined_error"] = b.combined_error;
        r.records.push_back(rec);
        if (grad_form) {
            const BochnerResidual c = bochner_residual_grad(u, x, params, sp, true);
            const double route = std::abs(b.term_cross - c.term_cross) / scale;
            worst_route = std::max(worst_route, route);
            csv.row({"grad-commuted", fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(c.lhs),
                     fmt(c.term_cross), fmt(c.term_square), fmt(c.residual),
                     fmt(c.combined_error)});
            r.records.back()["commuted_term_cross"] = c.term_cross;
            r.records.back()["route_rel_diff"] = route;
        }
    }
    r.csv = csv.text();
    r.summary["max_rel_residual"] = worst_residual;
    r.summary["residual_tolerance"] = 5e-2;
    if (grad_form) {
        r.summary["max_route_rel_diff"] = worst_route;
        r.summary["route_tolerance"] = 1e-2;
    }
    if (cfg.has("mc_samples") && !grad_form && n == 1 && !pts.empty())
        r.summary["monte_carlo_term_square"] =
            mc_term_square(u, pts.front(), params,
                           std::uint64_t(cfg.num("mc_samples")), effective_seed(cfg, ctx));
    if (worst_residual > 5e-2 || worst_route > 1e-2) r.status = "fail";
    return r;
}

RunResult run_limits(const Config& cfg, const RunContext&) {
    const QuadratureSpec sp = cfg.spec(1);
    const double s_nominal = 0.5;
    const ScalarField u = field_from_id(cfg.str_or("field", "gaussian:w=1"), 1, s_nominal, sp);
    const Vec x = vec(cfg.num_or("x", 0.3));
    const std::vector<double> s_grid = cfg.list_or("s_grid", {0.9, 0.95, 0.99});

    const LimitReport rep = local_limit_check(u, x, s_grid, sp);

    RunResult r;
    Csv csv({"s", "check", "value", "target", "abs_err"});
    for (const LimitRow& row : rep.rows) {
        const std::pair<const char*, const LimitCheck*> checks[] = {
            {"inner_product", &row.inner_product},
            {"grad_sq", &row.grad_sq},
            {"second_diff", &row.second_diff},
            {"kernel", &row.kernel}};
        json rec;
        rec["s"] = row.s;
        for (const auto& [name, chk] : checks) {
            csv.row({fmt(row.s), name, fmt(chk->value), fmt(chk->target),
                     fmt(chk->abs_err())});
            rec[name] = {{"value", chk->value}, {"target", chk->target}};
        }
        r.records.push_back(rec);
    }
    r.csv = csv.text();

    const LimitRow& last = rep.rows.back();
    auto rel = [](const LimitCheck& c) {
        return c.abs_err() / std::max(1.0, std::abs(c.target));
    };
    const bool close = rel(last.inner_product) <= 0.05 && rel(last.grad_sq) <= 0.05 &&
                       rel(last.second_diff) <= 0.15 && rel(last.kernel) <= 0.05;
    r.summary["final_rel_errors"] = {{"inner_product", rel(last.inner_product)},
                                     {"grad_sq", rel(last.grad_sq)},
                                     {"second_diff", rel(last.second_diff)},
                                     {"kernel", rel(last.kernel)}};
    r.summary["decreasing"] = {{"inner_product", rep.decreasing[0]},
                               {"grad_sq", rep.decreasing[1]},
                               {"second_diff", rep.decreasing[2]},
                               {"kernel", rep.decreasing[3]}};
    if (!close || !rep.all_decreasing()) r.status = "fail";
    return r;
}

RunResult run_greens(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const ScalarField f = field_from_id(cfg.str("field"), n, s, sp);
    const ScalarField g = field_from_id(cfg.str("field2"), n, s, sp);
    const Ball D{vec0(), cfg.num_or("ball_radius", 1.0)};

    const TwoSided div = divergence_identity(f, D, params, sp);
    const TwoSided parts = parts_identity(f, g, D, params, sp);
    const TwoSided green = green_identity(f, g, D, params, sp);

    RunResult r;
    Csv csv({"identity", "lhs", "rhs", "rel_residual"});
    double worst = 0.0;
    for (const auto& [name, t] :
         {std::pair<const char*, const TwoSided*>{"divergence", &div},
          {"integration_by_parts", &parts},
          {"green_second", &green}}) {
        worst = std::max(worst, t->rel_residual());
        csv.row({name, fmt(t->lhs), fmt(t->rhs), fmt(t->rel_residual())});
        json rec;
        rec["identity"] = name;
        rec["lhs"] = t->lhs;
        rec["rhs"] = t->rhs;
        rec["rel_residual"] = t->rel_residual();
        rec["error_estimate"] = t->error;
        r.records.push_back(rec);
    }
    r.csv = csv.text();
    r.summary["max_rel_residual"] = worst;
    r.summary["tolerance"] = 1e-3;
    if (worst > 1e-3) r.status = "fail";
    return r;
}

RunResult run_meanvalue(const Config& cfg, const RunContext&) {
    const int n = cfg.integer("n");
    const double s = cfg.num("s");
    const QuadratureSpec sp = cfg.spec(n);
    const FracParams params = make_params(n, s, sp);
    const double rad = cfg.num_or("ball_radius", 1.0);
    const Ball D{vec0(), rad};
    const ScalarField g = field_from_id(cfg.str_or("exterior_data", "gaussian:w=1"), n, s, sp);
    const ScalarField P = poisson_harmonic_field(params, D, g, sp);

    RunResult r;
    Csv csv({"check", "point_or_r", "value", "target", "residual"});
    double worst_rel = 0.0;

    // sup |g| over the relevant exterior shell, for the residual scale.
    double supg = 0.0;
    for (int k = 0; k <= 64; ++k) {
        const double rho = rad * (1.0 + 0.1 * k);
        supg = std::max({supg, std::abs(g.eval(vec(rho))), std::abs(g.eval(vec(-rho)))});
    }

    // (1) interior s-harmonicity: (-Delta)^s P ~ 0 at interior points.
    const std::vector<double> interior =
        cfg.list_or("interior_points", {-0.5, -0.25, 0.0, 0.25, 0.5});
    double worst_interior = 0.0;
    for (double xi : interior) {
        const OperatorValue lap = frac_laplacian(P, vec(xi * rad), params, sp);
        const double rel = std::abs(lap.value) / supg;
        worst_interior = std::max(worst_interior, rel);
        csv.row({"interior_residual", fmt(xi * rad), fmt(lap.value), fmt(0.0), fmt(rel)});
    }
    worst_rel = worst_interior;

    // (2) s-mean value at the center with a strictly interior radius.
    const double rmv = 0.5 * rad;
    const double p0 = P.eval(vec0());
    const OperatorValue mv = s_mean(P, vec0(), rmv, params, sp);
    const double mv_rel = std::abs(mv.value - p0) / std::max(1e-12, std::abs(p0));
    worst_rel = std::max(worst_rel, mv_rel);
    csv.row({"mean_value", fmt(rmv), fmt(mv.value), fmt(p0), fmt(mv_rel)});

    // (3) radial monotonicity of M_s for a field with verified sign of
    // (-Delta)^s: with (-Delta)^s u <= 0 on the balls B_r of the grid,
    // r -> M_s(u,r)(0) is nondecreasing. The negated bump is subharmonic only
    // near the origin, so the default grid stays well inside its support.
    const ScalarField sub = negated(field_from_id(cfg.str_or("subharmonic_field", "bump:r=1"),
                                                  n, s, sp));
    std::vector<double> r_grid = cfg.list_or("r_grid", {});
    if (r_grid.empty())
        for (int k = 0; k < 10; ++k) r_grid.push_back(0.05 + 0.05 * k);
    double excursion = 0.0;
    double op_err = 0.0;
    for (double rr : r_grid) {
        for (double sign : {-1.0, 1.0}) {
            const OperatorValue lap = frac_laplacian(sub, vec(sign * rr), params, sp);
            excursion = std::max(excursion, lap.value);
            op_err = std::max(op_err, lap.abs_error_estimate);
        }
    }
    const bool sign_ok = excursion <= 10.0 * std::max(op_err, 1e-12);
    double defect = 0.0;
    double prev = -std::numeric_limits<double>::infinity();
    double mono_err = 0.0;
    for (double rr : r_grid) {
        const OperatorValue m = s_mean(sub, vec0(), rr, params, sp);
        if (std::isfinite(prev)) defect = std::max(defect, prev - m.value);
        prev = m.value;
        mono_err += m.abs_error_estimate;
        csv.row({"s_mean_monotone", fmt(rr), fmt(m.value), fmt(defect),
                 fmt(m.abs_error_estimate)});
    }
    const bool mono_ok = defect <= 3.0 * std::max(mono_err, 1e-12);

    r.csv = csv.text();
    r.summary["sup_exterior_data"] = supg;
    r.summary["max_interior_rel_residual"] = worst_interior;
    r.summary["mean_value_rel_residual"] = mv_rel;
    r.summary["sign_hypothesis_met"] = sign_ok;
    r.summary["sign_excursion"] = excursion;
    r.summary["monotonicity_defect"] = defect;
    r.summary["tolerance"] = 1e-3;
    if (!sign_ok)
        r.status = "hypothesis-not-met";
    else if (worst_rel > 1e-3 || !mono_ok)
        r.status = "fail";
    return r;
}

// --- dispatch + output ----------------------------------------------------

RunResult dispatch(const Config& cfg, const RunContext& ctx) {
    const std::string claim = cfg.str("claim");
    if (claim == "constants") return run_constants(cfg, ctx);
    if (claim == "moments") return run_moments(cfg, ctx);
    if (claim == "eval") return run_eval(cfg, ctx);
    if (claim == "monotonicity-G" || claim == "monotonicity-grad" ||
        claim == "monotonicity-grad-f")
        return run_monotonicity(cfg, ctx, claim);
    if (claim == "stability-G" || claim == "stability-grad")
        return run_stability(cfg, ctx, claim);
    if (claim == "scaling") return run_scaling(cfg, ctx);
    if (claim == "bound") return run_bound(cfg, ctx);
    if (claim == "gradest") return run_gradest(cfg, ctx);
    if (claim == "bochner-G" || claim == "bochner-grad") return run_bochner(cfg, ctx, claim);
    if (claim == "limits") return run_limits(cfg, ctx);
    if (claim == "greens") return run_greens(cfg, ctx);
    if (claim == "meanvalue") return run_meanvalue(cfg, ctx);
    throw NlacfError("unknown claim id '" + claim + "'");
}

int run_config_file(const std::filesystem::path& config_path, const RunContext& ctx,
                    std::string* status_out = nullptr, std::string* name_out = nullptr) {
    const Config cfg = Config::load(config_path);
    const std::string claim = cfg.str("claim");
    const std::string name = cfg.str_or("name", claim);
    if (name_out) *name_out = name;

    const auto t0 = std::chrono::steady_clock::now();
    RunResult result = dispatch(cfg, ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json report;
    report["schema_version"] = kJsonSchemaVersion;
    report["library_version"] = kVersion;
    report["claim"] = claim;
    report["status"] = result.status;
    report["summary"] = result.summary;
    report["records"] = result.records;
    report["wall_time_s"] = wall;
    report["config"] = cfg.echo();

    write_atomic(ctx.out_dir / (name + ".csv"), result.csv);
    write_atomic(ctx.out_dir / (name + ".json"), report.dump(2) + "\n");
    std::printf("%-22s %s\n", name.c_str(), result.status.c_str());
    if (status_out) *status_out = result.status;
    return result.exit_code();
}

int run_verify_all(const std::filesystem::path& manifest, const RunContext& ctx) {
    std::ifstream f(manifest);
    if (!f) throw NlacfError("cannot read manifest " + manifest.string());
    const std::filesystem::path base = manifest.parent_path();
    std::vector<std::filesystem::path> configs;
    std::string line;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::filesystem::path p(line);
        configs.push_back(p.is_absolute() ? p : base / p);
    }

    int failures = 0;
    int not_met = 0;
    json entries = json::array();
    for (const auto& p : configs) {
        std::string status;
        std::string name;
        try {
            run_config_file(p, ctx, &status, &name);
        } catch (const std::exception& e) {
            status = "fail";
            name = p.filename().string();
            std::fprintf(stderr, "%s: error: %s\n", p.string().c_str(), e.what());
        }
        if (status == "fail") ++failures;
        if (status == "hypothesis-not-met") ++not_met;
        json entry;
        entry["config"] = p.filename().string();
        entry["name"] = name;
        entry["status"] = status;
        entries.push_back(entry);
    }

    json summary;
    summary["schema_version"] = kJsonSchemaVersion;
    summary["library_version"] = kVersion;
    summary["experiments"] = configs.size();
    summary["failures"] = failures;
    summary["hypothesis_not_met"] = not_met;
    summary["results"] = entries;
    write_atomic(ctx.out_dir / "verify_all.json", summary.dump(2) + "\n");
    std::printf("verify-all: %zu experiments, %d failed, %d hypothesis-not-met\n",
                configs.size(), failures, not_met);
    return failures > 0 ? kExitFailure : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal-operator and fractional ACF functional experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const std::vector<std::string> subs = {"constants", "eval",  "monotonicity", "stability",
                                           "scaling",   "bound", "gradest",      "bochner",
                                           "limits",    "moments", "greens",     "meanvalue",
                                           "verify-all"};
    for (const std::string& name : subs) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path,
                        name == "verify-all" ? "Manifest: newline-separated config files"
                                             : "Experiment config file (key = value)")
            ->required();
        sub->add_option("--out", out_dir, "Output directory for CSV/JSON reports");
        sub->add_option("--jobs", jobs, "Worker threads (0 = runtime default)");
        sub->add_option("--seed", seed, "Seed for randomized sampling (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
    }

    CLI11_PARSE(app, argc, argv);

    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.seed = seed;
    ctx.seed_overridden = seed_set;
    set_job_count(jobs);

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "verify-all") return run_verify_all(config_path, ctx);
        // Subcommand / claim coherence: the claim family must match the
        // subcommand used (verify-all dispatches freely).
        const std::string claim = Config::load(config_path).str("claim");
        if (claim != sub && claim.rfind(sub + "-", 0) != 0) {
            std::fprintf(stderr, "claim '%s' does not belong to subcommand '%s'\n",
                         claim.c_str(), sub.c_str());
            return kExitFailure;
        }
        return run_config_file(config_path, ctx);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
}
