#pragma once

#include "srmcts/dataset.hpp"
#include "srmcts/expr.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace srmcts {

/// 1 - SSE/SST. A zero-variance target gives 1 on an exact fit and -inf otherwise.
/// Throws LengthMismatch, or std::invalid_argument on empty input.
double r_squared(std::span<const double> y, std::span<const double> yhat);
/// -inf when the prediction is Invalid.
double r_squared(std::span<const double> y, const EvalOutcome& yhat);
/// R² of `expr` on the dataset; -inf for the empty expression.
double r_squared(const Expression& expr, const Dataset& ds);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// ceil(0.75 N) shuffled training rows, the rest for test. Throws TooSmall if N < 4.
Split split_indices(std::size_t n, std::uint64_t seed);
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, std::uint64_t seed);

struct ParetoPoint {
    std::string label;
    double neg_accuracy = 0.0; // lower is better
    double size = 0.0;         // lower is better
};

/// a dominates b: no worse in both objectives, strictly better in one.
bool dominates(const ParetoPoint& a, const ParetoPoint& b) noexcept;

/// Front index of each point after repeatedly peeling non-dominated sets.
std::vector<int> pareto_ranks(std::span<const ParetoPoint> points);

} // namespace srmcts
