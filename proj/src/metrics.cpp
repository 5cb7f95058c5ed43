#include "srmcts/metrics.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/kernels.hpp"
#include "srmcts/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srmcts {

double r_squared(std::span<const double> y, std::span<const double> yhat)
{
    if (y.size() != yhat.size()) throw LengthMismatch("r_squared: y and yhat lengths differ");
    if (y.empty()) throw std::invalid_argument("r_squared: empty input");
    const auto& k = kernels::active();
    const std::size_t n = y.size();
    const double mean = k.sum(y.data(), n) / static_cast<double>(n);
    const double sst = k.sum_sq_dev(y.data(), n, mean);
    const double sse = k.sum_sq_diff(y.data(), yhat.data(), n);
    if (!std::isfinite(sse)) return -std::numeric_limits<double>::infinity();
    if (sst == 0.0) return sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - sse / sst;
}

double r_squared(std::span<const double> y, const EvalOutcome& yhat)
{
    if (!yhat.valid()) {
        if (y.empty()) throw std::invalid_argument("r_squared: empty input");
        return -std::numeric_limits<double>::infinity();
    }
    return r_squared(y, std::span<const double>(yhat.values));
}

double r_squared(const Expression& expr, const Dataset& ds)
{
    if (expr.empty()) return -std::numeric_limits<double>::infinity();
    return r_squared(ds.y, evaluate(expr, ds.X));
}

Split split_indices(std::size_t n, std::uint64_t seed)
{
    if (n < 4) throw TooSmall("split needs at least 4 rows");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed, 0x5b117);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = (3 * n + 3) / 4;
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, std::uint64_t seed)
{
    const auto s = split_indices(ds.rows(), seed);
    return {ds.subset(s.train), ds.subset(s.test)};
}

bool dominates(const ParetoPoint& a, const ParetoPoint& b) noexcept
{
    return a.neg_accuracy <= b.neg_accuracy && a.size <= b.size &&
           (a.neg_accuracy < b.neg_accuracy || a.size < b.size);
}

std::vector<int> pareto_ranks(std::span<const ParetoPoint> points)
{
    // Sort by (accuracy, size): a point can only be dominated by points before it.
    const std::size_t n = points.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].neg_accuracy != points[b].neg_accuracy) return points[a].neg_accuracy < points[b].neg_accuracy;
        return points[a].size < points[b].size;
    });
    // rank(p) = 1 + max rank over dominators, which equals front-peeling order.
    std::vector<int> rank(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = points[order[i]];
        int r = 0;
        for (std::size_t j = 0; j < i; ++j)
            if (dominates(points[order[j]], p)) r = std::max(r, rank[order[j]] + 1);
        rank[order[i]] = r;
    }
    return rank;
}

} // namespace srmcts
