#pragma once

// Fixed-size descriptors of a (dataset, expression) state shared by the policy
// factors and the critic. Fit statistics use at most 100 rows.

#include "srmcts/dataset.hpp"
#include "srmcts/expr.hpp"
#include "srmcts/rng.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace srmcts {

inline constexpr std::size_t kStateFeatures = 64;
inline constexpr std::size_t kNodeFeatures = 24;
inline constexpr std::size_t kFeatureRows = 100;

namespace feat {
// state slots
inline constexpr std::size_t bias = 0, size = 1, depth = 2, empty = 3, op_counts = 4, constants = 16,
                             var_present = 17, var_available = 27, dims = 37, valid = 38, r2 = 39,
                             resid_mean = 40, resid_std = 41, resid_corr = 42, target_corr = 52,
                             target_mean = 62, target_scale = 63;
// node slots
inline constexpr std::size_t n_bias = 0, n_kind = 1, n_depth = 15, n_subtree = 16, n_root = 17,
                             n_unary_above = 18, n_unary_within = 19, n_position = 20, n_parent_binary = 21,
                             n_var_target_corr = 22, n_var_resid_corr = 23;
} // namespace feat

using StateVector = std::array<double, kStateFeatures>;
using NodeVector = std::array<double, kNodeFeatures>;

struct Features {
    Expression expr;
    int d = 0;
    StateVector state{};
    std::vector<NodeVector> nodes; // one per pre-order node
    double r2 = 0.0;               // fit on the subsample (sentinel 0 when invalid or empty)
    bool valid = false;
};

/// Deterministic given the rng state; draws from `rng` only when the dataset has
/// more than 100 rows.
Features featurize(const Dataset& ds, const Expression& expr, Rng& rng);

/// Pearson correlation, 0 when either side is constant.
double correlation(std::span<const double> a, std::span<const double> b);

} // namespace srmcts
