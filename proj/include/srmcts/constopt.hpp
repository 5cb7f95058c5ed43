#pragma once

// Constant fitting by BFGS on the mean squared error over a fixed row batch.

#include "srmcts/dataset.hpp"
#include "srmcts/expr.hpp"
#include "srmcts/rng.hpp"

#include <span>
#include <utility>
#include <vector>

namespace srmcts {

enum class ConstOptStrategy { never, best_only, all, alternate };

std::string_view to_string(ConstOptStrategy s) noexcept;
/// Throws std::invalid_argument on an unknown name.
ConstOptStrategy const_opt_strategy_from_string(std::string_view name);

struct ConstOptConfig {
    std::size_t batch_size = 256;
    int patience = 10;
    double timeout_seconds = 1.0;
    int max_iterations = 200;
    double improvement_tol = 1e-6; // on batch R²
    bool wall_clock = true;        // false: timeout ignored, for reproducible runs
};

struct ConstantTemplate {
    Expression expr;
    std::vector<std::size_t> positions; // pre-order positions of constant nodes

    /// Throws std::invalid_argument when the value count does not match.
    Expression substitute(std::span<const double> values) const;
};

std::pair<ConstantTemplate, std::vector<double>> extract_constants(const Expression& expr);

struct FitResult {
    Expression fitted;
    double r2 = 0.0;            // on the whole dataset passed in
    double batch_r2_before = 0.0;
    double batch_r2_after = 0.0;
    int iterations = 0;
    int objective_evaluations = 0;
    bool timed_out = false;
};

/// Throws OptimizationSkipped when the starting point is Invalid on the batch.
FitResult optimize_constants(const Expression& expr, const Dataset& ds, const ConstOptConfig& cfg, Rng& rng);

} // namespace srmcts
