#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/mcts.hpp"
#include "srmcts/metrics.hpp"

#include <cmath>
#include <map>

using namespace srmcts;

namespace {

Dataset planted(const std::string& prefix, int d, std::size_t n, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    Dataset ds;
    ds.id = prefix;
    ds.X = testutil::random_matrix(rng, n, static_cast<std::size_t>(d), 1.0);
    const auto truth = parse_prefix(prefix);
    const auto out = evaluate(truth, ds.X);
    REQUIRE(out.valid());
    ds.y = out.values;
    return ds;
}

SearchNode stats(std::uint64_t n, double v_sum, double prior)
{
    SearchNode s;
    s.N = n;
    s.v_sum = v_sum;
    s.prior = prior;
    return s;
}

std::size_t add(SearchTree& t, std::size_t parent, const SearchNode& s)
{
    const auto id = t.add_child(parent, parse_prefix("x0"), {}, s.prior);
    t[id].N = s.N;
    t[id].v_sum = s.v_sum;
    return id;
}

} // namespace

TEST_CASE("PUCT hand example")
{
    SearchTree t;
    const auto a = add(t, 0, stats(3, 2.4, 0.5));
    add(t, 0, stats(1, 0.2, 0.5));
    CHECK(puct_score(t[a], 4, 1.0) == doctest::Approx(1.05));
    CHECK(puct_score(t[2], 4, 1.0) == doctest::Approx(0.7));
    CHECK(select_child(t, 0, 1.0) == a);
}

TEST_CASE("PUCT degenerate ties")
{
    SearchTree t;
    add(t, 0, stats(0, 0, 0.2));
    const auto b = add(t, 0, stats(0, 0, 0.4));
    const auto c = add(t, 0, stats(0, 0, 0.4));
    CHECK(select_child(t, 0, 1.0) == b);
    CHECK(c > b);

    SearchTree single;
    const auto only = add(single, 0, stats(100, 0.0, 0.01));
    CHECK(select_child(single, 0, 2.0) == only);
    CHECK(select(single, 2.0) == std::vector<std::size_t>{0, only});
}

TEST_CASE("backpropagate decays with depth")
{
    SearchTree t;
    const auto a = add(t, 0, {});
    const auto b = add(t, a, {});
    const auto c = add(t, b, {});
    backpropagate(t, c, 1.0, 1.0);
    for (std::size_t id : {std::size_t{0}, a, b, c}) {
        CHECK(t[id].N == 1);
        CHECK(t[id].v_sum == 1.0);
    }
    backpropagate(t, c, 1.0, 0.9);
    CHECK(t[c].v_sum == doctest::Approx(2.0));
    CHECK(t[b].v_sum == doctest::Approx(1.9));
    CHECK(t[a].v_sum == doctest::Approx(1.81));

    SearchTree u;
    const auto x = add(u, 0, {});
    backpropagate(u, x, 0.5, 0.9);
    backpropagate(u, x, 0.5, 0.9);
    CHECK(u[x].V() == doctest::Approx(0.5));
}

TEST_CASE("sample_trial_config")
{
    Rng rng = make_rng(50);
    std::map<double, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto c = sample_trial_config(rng, {});
        CHECK(c.temperature >= 0.5);
        CHECK(c.temperature <= 1.0);
        CHECK(c.k_min == 8);
        CHECK(c.k_max == 16);
        ++counts[c.depth_penalty];
    }
    REQUIRE(counts.size() == 4);
    for (const auto& [v, c] : counts) CHECK(std::abs(c / double(n) - 0.25) <= 0.02);

    HyperRanges fixed;
    fixed.k_min = fixed.k_max = 4;
    fixed.temperature_lo = fixed.temperature_hi = 0.7;
    fixed.depth_penalties = {0.9};
    fixed.p_ucts = {1.5};
    const auto a = sample_trial_config(rng, fixed);
    const auto b = sample_trial_config(rng, fixed);
    CHECK(a.temperature == 0.7);
    CHECK(b.depth_penalty == 0.9);
    CHECK(a.p_uct == b.p_uct);
    CHECK(a.k_max == 4);
}

TEST_CASE("expand values children")
{
    const Dataset ds = planted("add x0 x1", 2, 120, 51);
    const FactoredPolicy uniform;
    const ConstantCritic critic;
    TrialConfig cfg;
    cfg.k_min = cfg.k_max = 12;
    cfg.stop_on_solve = false;
    SearchTree t;
    Rng rng = make_rng(52);
    const auto ex = expand(t, 0, ds, uniform, critic, cfg, 1000, rng);
    CHECK(ex.created == t[0].children.size());
    CHECK(ex.created > 0);
    CHECK(ex.created <= 12);
    double prior_sum = 0.0;
    double v_sum = 0.0;
    for (auto c : t[0].children) {
        CHECK(t[c].N == 1);
        CHECK(t[c].v_sum == (t[c].solved ? 1.0 : 0.5));
        CHECK(t[c].expr.size() >= 1);
        prior_sum += t[c].prior;
        v_sum += t[c].v_sum;
    }
    CHECK(prior_sum == doctest::Approx(1.0));
    CHECK(t[0].N == ex.created);
    CHECK(t[0].v_sum == doctest::Approx(v_sum));

    SearchTree capped;
    CHECK(expand(capped, 0, ds, uniform, critic, cfg, 3, rng).created <= 3);
}

TEST_CASE("run_trial finds x0 + x1 with the uniform policy")
{
    const Dataset ds = planted("add x0 x1", 2, 200, 53);
    const FactoredPolicy uniform;
    const ConstantCritic critic;
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng = make_rng(seed, 9);
        TrialConfig cfg;
        const auto r = run_trial(ds, uniform, critic, cfg, rng);
        if (r.solved) {
            ++solved;
            REQUIRE(!r.solved_traces.empty());
            for (const auto& tr : r.solved_traces) {
                const auto e = replay(tr, {});
                CHECK(r_squared(e, ds) >= 0.99);
            }
        }
        CHECK(r.evaluations <= cfg.iterations * static_cast<std::size_t>(cfg.k_max));
    }
    CHECK(solved >= 18);
}

TEST_CASE("run_trial edge cases and invariants")
{
    const Dataset ds = planted("mul x0 cos x1", 2, 100, 54);
    const FactoredPolicy uniform;
    const ConstantCritic critic;
    Rng rng = make_rng(55);

    TrialConfig zero;
    zero.iterations = 0;
    const auto none = run_trial(ds, uniform, critic, zero, rng);
    CHECK(!none.best);
    CHECK(none.evaluations == 0);

    TrialConfig cfg;
    cfg.iterations = 60;
    cfg.stop_on_solve = false;
    cfg.depth_penalty = 0.9;
    cfg.summary_min_visits = 0;
    const auto r = run_trial(ds, uniform, critic, cfg, rng);
    CHECK(r.best);
    CHECK(r.evaluations <= 60 * 16);
    CHECK(r.iterations_run == 60);
    CHECK(r.log.size() == 60);
    for (const auto& n : r.nodes) {
        const double v = n.v_sum / static_cast<double>(n.N);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].best_r2 >= r.log[i - 1].best_r2);

    TrialConfig budget = cfg;
    budget.evaluation_budget = 37;
    const auto b = run_trial(ds, uniform, critic, budget, rng);
    CHECK(b.evaluations <= 37);

    TrialConfig alt = cfg;
    alt.strategy = ConstOptStrategy::alternate;
    CHECK_THROWS_AS(run_trial(ds, uniform, critic, alt, rng), std::invalid_argument);
}

TEST_CASE("tree statistics: counting and strict growth")
{
    const Dataset ds = planted("sub mul x0 x0 x1", 2, 100, 56);
    const FactoredPolicy uniform;
    const ConstantCritic critic(0.3);
    TrialConfig cfg;
    cfg.stop_on_solve = false;
    cfg.depth_penalty = 0.95;
    Rng rng = make_rng(57);
    SearchTree t;
    std::size_t expansions = 0;
    for (int it = 0; it < 40; ++it) {
        const auto path = select(t, cfg.p_uct);
        const auto leaf = path.back();
        if (t[leaf].terminal) {
            backpropagate(t, leaf, 0.0, cfg.depth_penalty);
            continue;
        }
        expand(t, leaf, ds, uniform, critic, cfg, 1000, rng);
        ++expansions;
    }
    CHECK(expansions > 0);
    for (std::size_t id = 0; id < t.size(); ++id) {
        const auto& n = t[id];
        std::uint64_t sum = 0;
        for (auto c : n.children) {
            sum += t[c].N;
            CHECK(t[c].expr.size() > n.expr.size());
        }
        // every backup through a node originates at the node itself or in one child subtree
        CHECK(n.N >= sum);
        CHECK(n.V() >= 0.0);
        CHECK(n.V() <= 1.0);
        if (n.solved) CHECK(n.train_r2 >= cfg.solve_threshold);
    }
}

TEST_CASE("trial determinism")
{
    const Dataset ds = planted("add x0 mul x1 x1", 2, 100, 58);
    const FactoredPolicy uniform;
    const ConstantCritic critic;
    TrialConfig cfg;
    cfg.iterations = 50;
    Rng a = make_rng(59), b = make_rng(59);
    const auto ra = run_trial(ds, uniform, critic, cfg, a);
    const auto rb = run_trial(ds, uniform, critic, cfg, b);
    CHECK(ra.evaluations == rb.evaluations);
    CHECK(ra.best_r2 == rb.best_r2);
    CHECK(*ra.best == *rb.best);
}

TEST_CASE("refit_trace moves fitted constants onto the trace")
{
    Rng rng = make_rng(60);
    for (int i = 0; i < 50; ++i) {
        const auto target = testutil::random_expression(rng, 30, 3);
        const auto trace = dismantle(target, 3, rng);
        std::vector<Node> nodes(target.nodes().begin(), target.nodes().end());
        for (auto& n : nodes)
            if (n.kind == OpKind::constant) n.value += 1.0;
        const auto fitted = Expression::from_prefix(nodes);
        const auto moved = refit_trace(trace, fitted);
        CHECK(replay(moved, {}) == fitted);
    }
}

TEST_CASE("constant strategies")
{
    const Dataset ds = planted("add mul 2.5 x0 -1", 1, 100, 61);
    const FactoredPolicy uniform;
    const ConstantCritic critic;
    TrialConfig cfg;
    cfg.iterations = 200;
    cfg.strategy = ConstOptStrategy::all;
    cfg.constopt.wall_clock = false;
    Rng rng = make_rng(62);
    const auto r = run_trial(ds, uniform, critic, cfg, rng);
    CHECK(r.solved);
    for (const auto& tr : r.solved_traces) CHECK(r_squared(replay(tr, {}), ds) >= 0.99);
}
