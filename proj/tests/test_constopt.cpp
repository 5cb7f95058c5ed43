#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/constopt.hpp"
#include "srmcts/errors.hpp"
#include "srmcts/metrics.hpp"

#include <chrono>
#include <cmath>

using namespace srmcts;

namespace {

Dataset from_fn(Rng& rng, std::size_t n, int d, auto fn)
{
    Dataset ds;
    ds.X = testutil::random_matrix(rng, n, static_cast<std::size_t>(d), 1.5);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.y[i] = fn(ds.X, i);
    return ds;
}

} // namespace

TEST_CASE("extract_constants")
{
    const auto e = parse_prefix("sub mul 2.5 x0 1.0");
    auto [t, c] = extract_constants(e);
    CHECK(c == std::vector<double>{2.5, 1.0});
    CHECK(t.substitute(c) == e);
    CHECK(extract_constants(parse_prefix("add x0 x1")).second.empty());
    CHECK(t.substitute(std::vector<double>{4.0, -3.0}) == parse_prefix("sub mul 4.0 x0 -3.0"));
    CHECK_THROWS_AS(t.substitute(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("strategy names")
{
    CHECK(const_opt_strategy_from_string("best_only") == ConstOptStrategy::best_only);
    CHECK_THROWS_AS(const_opt_strategy_from_string("sometimes"), std::invalid_argument);
}

TEST_CASE("affine recovery against the least-squares solution")
{
    Rng rng = make_rng(40);
    const auto ds = from_fn(rng, 200, 1, [](const Matrix& X, std::size_t i) { return 2.5 * X(i, 0) - 1.0; });
    const auto e = parse_prefix("add mul 1.0 x0 0.0");
    ConstOptConfig cfg;
    cfg.wall_clock = false;
    const auto fit = optimize_constants(e, ds, cfg, rng);
    const auto c = extract_constants(fit.fitted).second;
    CHECK(std::fabs(c[0] - 2.5) < 1e-3);
    CHECK(std::fabs(c[1] + 1.0) < 1e-3);
    CHECK(fit.r2 >= 0.999);
}

TEST_CASE("no constants: unchanged")
{
    Rng rng = make_rng(41);
    const auto ds = from_fn(rng, 50, 2, [](const Matrix& X, std::size_t i) { return X(i, 0) + 2 * X(i, 1); });
    const auto e = parse_prefix("add x0 x1");
    const auto fit = optimize_constants(e, ds, {}, rng);
    CHECK(fit.fitted == e);
    CHECK(fit.objective_evaluations == 1);
    CHECK(fit.r2 == doctest::Approx(r_squared(e, ds)).epsilon(1e-12));
}

TEST_CASE("invalid start is skipped")
{
    Rng rng = make_rng(42);
    const auto ds = from_fn(rng, 50, 1, [](const Matrix& X, std::size_t i) { return X(i, 0); });
    CHECK_THROWS_AS(optimize_constants(parse_prefix("log mul -1.0 square x0"), ds, {}, rng), OptimizationSkipped);
}

TEST_CASE("never worse than the start on the batch, and bounded in time")
{
    Rng rng = make_rng(43);
    const auto ds = from_fn(rng, 400, 2, [](const Matrix& X, std::size_t i) {
        return std::sin(1.3 * X(i, 0)) + 0.5 * X(i, 1) * X(i, 1);
    });
    int fitted = 0;
    for (int k = 0; k < 200; ++k) {
        const auto e = testutil::random_expression(rng, 20, 2);
        ConstOptConfig cfg;
        cfg.timeout_seconds = 0.05;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto fit = optimize_constants(e, ds, cfg, rng);
            CHECK(fit.batch_r2_after >= fit.batch_r2_before - 1e-9);
            ++fitted;
        } catch (const OptimizationSkipped&) {
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(dt < 0.05 + 0.2);
    }
    CHECK(fitted > 50);
}

TEST_CASE("deterministic given the seed")
{
    Rng a = make_rng(44), b = make_rng(44);
    Rng data = make_rng(45);
    const auto ds = from_fn(data, 300, 1, [](const Matrix& X, std::size_t i) { return 3.0 * std::cos(X(i, 0)) + 0.3; });
    ConstOptConfig cfg;
    cfg.wall_clock = false;
    const auto e = parse_prefix("add mul 1.0 cos x0 0.0");
    CHECK(optimize_constants(e, ds, cfg, a).fitted == optimize_constants(e, ds, cfg, b).fitted);
}
