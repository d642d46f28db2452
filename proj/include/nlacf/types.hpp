#ifndef NLACF_TYPES_HPP
#define NLACF_TYPES_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nlacf {

/// Point in R^n, n <= 3. Unused trailing components are zero.
using Vec = std::array<double, 3>;

inline constexpr Vec vec0() { return {0.0, 0.0, 0.0}; }

inline Vec vec(double x, double y = 0.0, double z = 0.0) { return {x, y, z}; }

inline Vec operator+(const Vec& a, const Vec& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double c, const Vec& a) { return {c * a[0], c * a[1], c * a[2]}; }

inline double dot(const Vec& a, const Vec& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

/// Scalar result of a quadrature, value plus a resolution-based error estimate.
struct Integral {
    double value = 0.0;
    double error = 0.0;

    Integral& operator+=(const Integral& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
};

struct NlacfError : std::runtime_error {
    explicit NlacfError(const std::string& what) : std::runtime_error(what) {}
};

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return M_PI;
        case 3: return 4.0 * M_PI / 3.0;
        default: throw NlacfError("unit_ball_volume: n must be 1, 2 or 3");
    }
}

/// Surface measure of the unit sphere in R^n (= n * omega_n).
inline double unit_sphere_measure(int n) { return n * unit_ball_volume(n); }

}  // namespace nlacf

#endif
