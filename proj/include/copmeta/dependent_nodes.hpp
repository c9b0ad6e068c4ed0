#pragma once

// Dependent quadrature nodes: outer nodes u_{q1} paired with
// v_{q1,q2} = C^{-1}(u_{q2} | u_{q1}), so that a product rule in (u_{q1}, u_{q2})
// integrates against the copula distribution.

#include <cstddef>
#include <vector>

#include "copmeta/copulas.hpp"
#include "copmeta/quadrature.hpp"

namespace copmeta {

struct NodeGrid {
    std::size_t nq = 0;
    std::vector<double> u;        // outer nodes
    std::vector<double> weights;  // rule weights
    std::vector<double> v;        // row-major, v[q1 * nq + q2]

    double at(std::size_t q1, std::size_t q2) const { return v[q1 * nq + q2]; }
};

inline NodeGrid dependent_nodes(const QuadRule& rule, const CopulaSpec& spec) {
    validate(spec);
    NodeGrid grid;
    grid.nq = rule.size();
    grid.u = rule.nodes;
    grid.weights = rule.weights;
    grid.v.resize(grid.nq * grid.nq);
    for (std::size_t i = 0; i < grid.nq; ++i) {
        for (std::size_t j = 0; j < grid.nq; ++j) {
            grid.v[i * grid.nq + j] = inv_cond_cdf(rule.nodes[j], rule.nodes[i], spec);
        }
    }
    return grid;
}

}  // namespace copmeta
