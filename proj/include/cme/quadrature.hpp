#pragma once

#include <cstddef>
#include <vector>

namespace cme {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;  // sum to 2
};

// Nodes and weights of the n-point Gauss-Legendre rule, cached per order.
const GaussLegendreRule& gauss_legendre(std::size_t n);

// Composite integration of fn over [a, b] split into the given segments
// (segment boundaries are clamped to [a, b]).
template <typename F>
double integrate_segments(F&& fn, const std::vector<double>& boundaries, std::size_t nodes_per_segment) {
    const GaussLegendreRule& rule = gauss_legendre(nodes_per_segment);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
        const double a = boundaries[s], b = boundaries[s + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double acc = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            acc += rule.weights[k] * fn(mid + half * rule.nodes[k]);
        total += half * acc;
    }
    return total;
}

}  // namespace cme
