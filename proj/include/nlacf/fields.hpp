#ifndef NLACF_FIELDS_HPP
#define NLACF_FIELDS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlacf/constants.hpp"
#include "nlacf/quadrature.hpp"
#include "nlacf/types.hpp"

namespace nlacf {

/// Declared smoothness class of a field (trusted metadata).
enum class Regularity { SmoothCompact, Holder, C2, C3, C4 };

using Mat = std::array<std::array<double, 3>, 3>;

/// Immutable scalar field on R^dim with metadata and optional closed-form
/// oracles. Copies share any internal caches.
struct ScalarField {
    int dim = 1;
    std::string id;  // catalog id, echoed in reports
    std::function<double(const Vec&)> eval;
    Regularity regularity = Regularity::C2;
    TailEnvelope tail;
    std::vector<Vec> singular_points;  // quadrature grades meshes toward these
    double singular_exponent = 0.0;    // |u| ~ dist^exponent near singular points

    // Optional oracles (empty std::function when absent).
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
    std::function<double(const Vec&, double s)> frac_lap;

    double operator()(const Vec& x) const { return eval(x); }
    bool has_grad() const { return static_cast<bool>(grad); }
    bool has_hess() const { return static_cast<bool>(hess); }
    bool has_frac_lap() const { return static_cast<bool>(frac_lap); }
};

struct Ball {
    Vec center = vec0();
    double radius = 1.0;
};

/// Concurrent memo cache keyed on quantized coordinates. If the environment
/// variable NONLOCAL_ACF_CACHE_DIR is set, entries persist across runs in a
/// file derived from `tag` (which must identify the field and spec).
class MemoCache {
  public:
    explicit MemoCache(std::string tag, double quantum = 1e-9);
    ~MemoCache();
    MemoCache(const MemoCache&) = delete;
    MemoCache& operator=(const MemoCache&) = delete;

    bool lookup(const Vec& x, double& out) const;
    void store(const Vec& x, double value);
    std::size_t size() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// u(x) = exp(-|x|^2 / (2 w^2)), with gradient, Hessian and a fractional
/// Laplacian oracle computed by an independent radial Fourier integral.
ScalarField gaussian_field(int n, double width);

/// Standard smooth bump: exp(1 - 1/(1 - |x/r|^2)) inside B_r, zero outside.
ScalarField bump_field(int n, double support_radius);

/// x_1 times the bump (odd in x_1; vanishing at the origin).
ScalarField xbump_field(int n, double support_radius);

/// Constant field c with envelope (|c|, 0, 1).
ScalarField constant_field(int n, double c);

/// Fundamental solution kappa_ns |x|^(2s-n); singular at the origin
/// (evaluation there throws). Requires 2s != n.
ScalarField fundamental_solution_field(const FracParams& params);

/// Field equal to the Poisson integral of the exterior data g inside the
/// origin-centered ball and to g outside; s-harmonic in the ball by
/// construction. Interior evaluations are memoized (each costs one exterior
/// quadrature).
ScalarField poisson_harmonic_field(const FracParams& params, const Ball& ball,
                                   const ScalarField& g,
                                   const QuadratureSpec& spec = QuadratureSpec{});

/// Poisson kernel a_ns ((r^2-|x|^2)/(|y|^2-r^2))^s |x-y|^(-n) for the
/// origin-centered ball, |x| < r < |y|.
double poisson_kernel(const Vec& x, const Vec& y, const Ball& ball, const FracParams& params);

/// Parse a catalog id: "constant:c=1", "gaussian:w=1", "bump:r=1",
/// "xbump:r=1", "phi_s", "poisson:r=1;g=<inner id>".
ScalarField field_from_id(const std::string& id, int n, double s,
                          const QuadratureSpec& spec = QuadratureSpec{});

/// u_lambda(x) = lambda^(-s) u(lambda x): the scaling under which the ACF
/// functionals are invariant. Envelope and gradient oracle transformed.
ScalarField scaled_field(const ScalarField& u, double lambda, double s);

/// u(. - a). Envelope coarsened to absorb the shift.
ScalarField shifted_field(const ScalarField& u, const Vec& a);

/// Sampled check of the declared tail envelope: |u(y)| <= 1.01 A |y|^(-p)
/// on `samples` random points with |y| in [R0, 10 R0].
bool verify_envelope(const ScalarField& u, std::uint64_t seed, int samples = 1000);

/// Whether the envelope guarantees membership in the weighted space with
/// kernel weight 1/(1+|y|^(n+2s)).
bool envelope_in_weighted_l1(const TailEnvelope& tail, int n, double s);

}  // namespace nlacf

#endif
