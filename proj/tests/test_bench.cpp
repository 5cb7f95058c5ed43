#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "srmcts/bench.hpp"
#include "srmcts/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

using namespace srmcts;

namespace {

// Independent two-pass R²: mean first, then both sums of squares.
double r2_two_pass(const std::vector<double>& y, const std::vector<double>& yhat)
{
    long double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<long double>(y.size());
    long double sse = 0, sst = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (static_cast<long double>(y[i]) - yhat[i]) * (static_cast<long double>(y[i]) - yhat[i]);
        sst += (static_cast<long double>(y[i]) - mean) * (static_cast<long double>(y[i]) - mean);
    }
    return static_cast<double>(1.0L - sse / sst);
}

// Brute-force fronts: a point is in the current front when no remaining point dominates it.
std::vector<int> brute_ranks(const std::vector<ParetoPoint>& p)
{
    std::vector<int> rank(p.size(), -1);
    std::size_t assigned = 0;
    for (int front = 0; assigned < p.size(); ++front) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (rank[i] >= 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < p.size() && !dominated; ++j) {
                if (rank[j] >= 0 || j == i) continue;
                const bool no_worse = p[j].neg_accuracy <= p[i].neg_accuracy && p[j].size <= p[i].size;
                const bool better = p[j].neg_accuracy < p[i].neg_accuracy || p[j].size < p[i].size;
                dominated = no_worse && better;
            }
            if (!dominated) members.push_back(i);
        }
        for (auto i : members) rank[i] = front;
        assigned += members.size();
    }
    return rank;
}

void write_dataset(const std::filesystem::path& path, const std::string& prefix, int d, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    Dataset ds;
    ds.X = testutil::random_matrix(rng, 80, static_cast<std::size_t>(d), 1.0);
    ds.y = evaluate(parse_prefix(prefix), ds.X).values;
    write_csv(ds, path);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

BenchConfig quick_bench()
{
    BenchConfig b;
    b.seeds = {0, 1};
    b.campaign.synthetic_fraction = 0.0;
    b.campaign.trial.iterations = 60;
    b.campaign.evaluation_budget = 2000;
    b.campaign.total_trials = 4;
    b.campaign.strategy = ConstOptStrategy::never;
    b.campaign.train_steps_per_trial = 1;
    b.campaign.batch_size = 8;
    return b;
}

} // namespace

TEST_CASE("r_squared examples")
{
    const std::vector<double> y{1, 2, 3};
    CHECK(r_squared(y, y) == 1.0);
    CHECK(r_squared(y, std::vector<double>{2, 2, 2}) == doctest::Approx(0.0));
    CHECK(r_squared(y, std::vector<double>{2, 2, 3}) == doctest::Approx(0.5));
    CHECK(r_squared(y, EvalOutcome::failure(InvalidReason::domain_error)) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(r_squared(y, std::vector<double>{1, 2}), LengthMismatch);
    const std::vector<double> flat{4, 4, 4};
    CHECK(r_squared(flat, flat) == 1.0);
    CHECK(r_squared(flat, std::vector<double>{4, 4, 5}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("r_squared matches the two-pass oracle and ignores row order")
{
    Rng rng = make_rng(70);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 2, 400));
        const double scale = std::exp(uniform_int(rng, -5, 5));
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = scale * g(rng) + 3.0;
            yhat[i] = y[i] + 0.3 * scale * g(rng);
        }
        const double ref = r2_two_pass(y, yhat);
        CHECK(std::abs(r_squared(y, yhat) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> py(n), ph(n);
        for (std::size_t i = 0; i < n; ++i) py[i] = y[perm[i]], ph[i] = yhat[perm[i]];
        CHECK(r_squared(py, ph) == doctest::Approx(r_squared(y, yhat)).epsilon(1e-12));
    }
}

TEST_CASE("split_dataset")
{
    const auto s = split_indices(100, 5);
    CHECK(s.train.size() == 75);
    CHECK(s.test.size() == 25);
    CHECK(split_indices(10, 1).train.size() == 8);
    const auto again = split_indices(100, 5);
    CHECK(again.train == s.train);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto i : s.test) CHECK(all.insert(i).second);
    CHECK(all.size() == 100);
    CHECK(split_indices(100, 6).train != s.train);
    // shuffled, not a contiguous prefix
    CHECK(s.train.back() != 74);
    CHECK_THROWS_AS(split_indices(3, 0), TooSmall);
}

TEST_CASE("pareto examples and brute-force oracle")
{
    using P = ParetoPoint;
    // (-0.9, 10) is better than (-0.8, 20) in both objectives, so it dominates
    CHECK(pareto_ranks(std::vector<P>{{"a", -0.9, 10}, {"b", -0.8, 20}}) == std::vector<int>{0, 1});
    CHECK(pareto_ranks(std::vector<P>{{"a", -0.9, 20}, {"b", -0.8, 10}}) == std::vector<int>{0, 0});
    CHECK(pareto_ranks(std::vector<P>{{"a", -0.9, 10}, {"b", -0.8, 10}}) == std::vector<int>{0, 1});
    CHECK(pareto_ranks(std::vector<P>{{"a", -0.5, 3}}) == std::vector<int>{0});
    Rng rng = make_rng(71);
    for (int t = 0; t < 200; ++t) {
        std::vector<P> pts(static_cast<std::size_t>(uniform_int(rng, 1, 40)));
        for (auto& p : pts) p = {"", -uniform_int(rng, 0, 8) / 8.0, double(uniform_int(rng, 1, 10))};
        CHECK(pareto_ranks(pts) == brute_ranks(pts));
    }
}

TEST_CASE("aggregation matches a straight-line recomputation")
{
    std::vector<BenchRow> rows;
    Rng rng = make_rng(72);
    for (int d = 0; d < 5; ++d)
        for (std::uint64_t s = 0; s < 3; ++s) {
            BenchRow r;
            r.dataset = "d" + std::to_string(d);
            r.seed = s;
            r.r2_train = uniform01(rng);
            r.r2_test = uniform01(rng);
            r.size = static_cast<std::size_t>(uniform_int(rng, 1, 30));
            r.solved = r.r2_train >= 0.5;
            r.evaluations = 100 * s;
            rows.push_back(r);
        }
    const auto per = per_dataset_means(rows);
    REQUIRE(per.size() == 5);
    std::vector<double> means;
    for (int d = 0; d < 5; ++d) {
        double m = 0;
        for (int s = 0; s < 3; ++s) m += rows[static_cast<std::size_t>(d * 3 + s)].r2_test;
        means.push_back(m / 3);
        CHECK(per[static_cast<std::size_t>(d)].r2_test == doctest::Approx(m / 3));
    }
    std::sort(means.begin(), means.end());
    CHECK(aggregate_suite(per, Aggregate::median).r2_test == doctest::Approx(means[2]));
    CHECK(aggregate_suite(per, Aggregate::mean).r2_test ==
          doctest::Approx((means[0] + means[1] + means[2] + means[3] + means[4]) / 5));
    CHECK(aggregate({1, 2, 3, 10}, Aggregate::median) == 2.5);
    CHECK(std::isnan(aggregate({}, Aggregate::mean)));
}

TEST_CASE("metrics CSV and pareto CSV")
{
    std::istringstream in("size,label,accuracy\n10,a,0.9\n20,b,0.8\n10,c,0.8\n");
    const auto pts = read_metrics_csv(in);
    REQUIRE(pts.size() == 3);
    std::ostringstream out;
    write_pareto_csv(pts, out);
    CHECK(out.str() == "label,accuracy,size,rank\na,0.9,10,0\nb,0.8,20,2\nc,0.8,10,1\n");
    std::istringstream bad("label,accuracy\na,1\n");
    CHECK_THROWS(read_metrics_csv(bad));
}

TEST_CASE("benchmark suite: outputs, isolation, determinism")
{
    const auto dir = std::filesystem::temp_directory_path() / "srmcts_bench_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "suite");
    write_dataset(dir / "suite" / "a_sum.csv", "add x0 x1", 2, 1);
    write_dataset(dir / "suite" / "b_prod.csv", "mul x0 x2", 3, 2);
    {
        std::ofstream wide(dir / "suite" / "c_wide.csv");
        for (int j = 0; j < 11; ++j) wide << 'x' << j << ',';
        wide << "y\n";
        for (int r = 0; r < 5; ++r) {
            for (int j = 0; j < 12; ++j) wide << (j ? "," : "") << r + j;
            wide << '\n';
        }
    }
    {
        std::ofstream broken(dir / "suite" / "d_broken.csv");
        broken << "x0,y\n1,2\nfoo,3\n";
    }
    const auto cfg = quick_bench();
    const auto rep = run_benchmark(dir / "suite", cfg, ModelSnapshot::initial(), dir / "out1");
    CHECK(rep.rows.size() == 4);
    REQUIRE(rep.skipped.size() == 2);
    CHECK(rep.skipped[0].dataset == "c_wide");
    CHECK(rep.skipped[1].dataset == "d_broken");
    for (const auto& r : rep.rows) {
        CHECK(r.solved == (r.r2_train >= 0.99));
        CHECK(r.evaluations <= cfg.campaign.evaluation_budget);
    }
    for (const char* f : {"summary.csv", "timings.csv", "aggregate.csv", "curves.jsonl", "pareto.csv",
                          "expressions.csv", "skipped.csv"})
        CHECK(std::filesystem::exists(dir / "out1" / f));
    const auto summary = slurp(dir / "out1" / "summary.csv");
    CHECK(summary.rfind("dataset,seed,r2_train,r2_test,size,solved,evaluations,wall_time\n", 0) == 0);

    run_benchmark(dir / "suite", cfg, ModelSnapshot::initial(), dir / "out2");
    CHECK(slurp(dir / "out2" / "summary.csv") == summary);
    CHECK(slurp(dir / "out2" / "expressions.csv") == slurp(dir / "out1" / "expressions.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("test rows stay out of the search")
{
    Rng rng = make_rng(73);
    Dataset ds;
    ds.id = "leak";
    ds.X = testutil::random_matrix(rng, 40, 1, 1.0);
    ds.y.resize(40);
    for (std::size_t i = 0; i < 40; ++i) ds.y[i] = ds.X(i, 0);
    const auto split = split_indices(40, 3);
    // poison the test rows: a search that saw them could not reach train R² 1
    for (auto i : split.test) ds.y[i] = 1e6;
    auto cfg = quick_bench();
    cfg.seeds = {3};
    const auto row = run_one(ds, 3, cfg, ModelSnapshot::initial());
    CHECK(row.r2_train >= 0.99);
    CHECK(row.r2_test < 0.0);
}

TEST_CASE("certified shallow targets are solved within 50k evaluations")
{
    const auto dir = std::filesystem::temp_directory_path() / "srmcts_bench_shallow";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "suite");
    Rng rng = make_rng(0x5a11);
    std::set<std::vector<std::string>> seen;
    int written = 0;
    while (written < 10) {
        const int d = uniform_int(rng, 1, 3);
        Expression e;
        for (int s = uniform_int(rng, 2, 3); s > 0; --s) {
            const auto moves = oracle::leaf_mutations(e, d);
            try {
                e = apply_mutation(e, moves[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(moves.size()) - 1))]);
            } catch (const std::exception&) {
            }
        }
        if (!seen.insert(to_prefix(e)).second || !oracle::min_leaf_steps(e, d, 3)) continue;
        Dataset ds;
        ds.X = sample_inputs(GenConfig{}, 200, d, rng);
        const auto out = evaluate(e, ds.X);
        if (!out.valid()) continue;
        ds.y = out.values;
        if (*std::max_element(ds.y.begin(), ds.y.end()) - *std::min_element(ds.y.begin(), ds.y.end()) < 1e-9) continue;
        write_csv(ds, dir / "suite" / ("t" + std::to_string(written++) + ".csv"));
    }
    BenchConfig cfg;
    cfg.seeds = {0};
    cfg.campaign.synthetic_fraction = 0.0;
    cfg.campaign.evaluation_budget = 50000;
    const auto rep = run_benchmark(dir / "suite", cfg, ModelSnapshot::initial(), dir / "out");
    REQUIRE(rep.rows.size() == 10);
    CHECK(rep.suite.solve_rate >= 0.9);
    std::filesystem::remove_all(dir);
}
