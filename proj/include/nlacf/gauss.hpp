#ifndef NLACF_GAUSS_HPP
#define NLACF_GAUSS_HPP

#include <vector>

namespace nlacf {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Nodes and weights for the given order (cached; thread-safe after first use).
const GaussRule& gauss_legendre(int order);

}  // namespace nlacf

#endif
