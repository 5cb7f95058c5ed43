#pragma once

#include "srmcts/expr.hpp"
#include "srmcts/rng.hpp"

#include <vector>

namespace testutil {

using namespace srmcts;

// Random tree independent of the datagen sampler: grows top-down with a size
// budget and never puts a unary operator under another.
inline void grow(std::vector<Node>& out, int budget, bool under_unary, int d, Rng& rng)
{
    const double u = uniform01(rng);
    if (budget <= 1 || u < 0.3) {
        if (uniform01(rng) < 0.25)
            out.push_back(Node::constant(std::normal_distribution<double>(0.0, 2.0)(rng)));
        else
            out.push_back(Node::variable(uniform_int(rng, 0, d - 1)));
        return;
    }
    if (!under_unary && u < 0.5) {
        out.push_back(Node::op(static_cast<OpKind>(uniform_int(rng, 4, 11))));
        grow(out, budget - 1, true, d, rng);
        return;
    }
    out.push_back(Node::op(static_cast<OpKind>(uniform_int(rng, 0, 3))));
    const int left = uniform_int(rng, 1, std::max(1, budget - 2));
    grow(out, left, under_unary, d, rng);
    grow(out, std::max(1, budget - 1 - left), under_unary, d, rng);
}

inline Expression random_expression(Rng& rng, int max_size = 60, int d = 3)
{
    for (;;) {
        std::vector<Node> nodes;
        grow(nodes, uniform_int(rng, 1, max_size), false, d, rng);
        if (static_cast<int>(nodes.size()) <= max_size) return Expression::from_prefix(std::move(nodes));
    }
}

inline Matrix random_matrix(Rng& rng, std::size_t n, std::size_t d, double scale = 2.0)
{
    Matrix X(n, d);
    std::normal_distribution<double> z(0.0, scale);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) X(i, j) = z(rng);
    return X;
}

} // namespace testutil
