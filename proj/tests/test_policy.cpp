#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/datagen.hpp"
#include "srmcts/errors.hpp"
#include "srmcts/policy.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

using namespace srmcts;

namespace {

Dataset toy_dataset(Rng& rng, int d = 3, std::size_t n = 150)
{
    Dataset ds;
    ds.id = "toy";
    ds.X = testutil::random_matrix(rng, n, static_cast<std::size_t>(d), 1.0);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.y[i] = ds.X(i, 0) * ds.X(i, 1 % d) + std::cos(ds.X(i, 0));
    return ds;
}

std::shared_ptr<const Features> feats(const Dataset& ds, const Expression& e, std::uint64_t seed = 0)
{
    Rng rng = make_rng(seed);
    return std::make_shared<const Features>(featurize(ds, e, rng));
}

double entropy(const std::map<std::string, int>& counts, int n)
{
    double h = 0.0;
    for (const auto& [k, c] : counts) {
        const double p = c / double(n);
        h -= p * std::log(p);
    }
    return h;
}

} // namespace

TEST_CASE("featurize")
{
    Rng rng = make_rng(30);
    const Dataset ds = toy_dataset(rng);
    const auto empty = *feats(ds, {});
    CHECK(empty.state[feat::size] == 0.0);
    CHECK(empty.state[feat::empty] == 1.0);
    CHECK(empty.state[feat::valid] == 0.0);
    CHECK(empty.state[feat::r2] == 0.0);
    CHECK(empty.nodes.empty());

    const auto truth = parse_prefix("add mul x0 x1 cos x0");
    const auto f = *feats(ds, truth);
    CHECK(f.state[feat::r2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.state[feat::valid] == 1.0);
    CHECK(f.nodes.size() == truth.size());
    CHECK(f.nodes[4][feat::n_unary_within] == 1.0);
    CHECK(f.nodes[5][feat::n_unary_above] == 1.0);
    CHECK(f.nodes[1][feat::n_unary_above] == 0.0);

    const auto a = *feats(ds, parse_prefix("mul x0 x2"), 7);
    const auto b = *feats(ds, parse_prefix("mul x0 x2"), 7);
    CHECK(a.state == b.state);
    for (double v : a.state) CHECK(std::isfinite(v));

    const auto bad = *feats(ds, parse_prefix("log sub x0 x0"));
    CHECK(bad.state[feat::valid] == 0.0);
    CHECK(bad.state[feat::r2] == 0.0);
}

TEST_CASE("sample log_prob equals the scored factor sum")
{
    Rng rng = make_rng(31);
    const Dataset ds = toy_dataset(rng);
    const ConstraintConfig cfg;
    for (int p = 0; p < 5; ++p) {
        const auto policy = FactoredPolicy::random(rng, 0.3);
        for (int i = 0; i < 60; ++i) {
            const Expression e = i % 6 == 0 ? Expression{} : testutil::random_expression(rng, 20, 3);
            const auto f = feats(ds, e, static_cast<std::uint64_t>(i));
            const double T = i % 2 == 0 ? 1.0 : 0.6;
            const auto s = policy.sample(*f, cfg, T, rng);
            const auto parts = policy.factor_log_probs(*f, cfg, s.mutation, T);
            CHECK(s.log_prob == doctest::Approx(parts.total()).epsilon(1e-12));
            CHECK(std::fabs(s.log_prob - policy.log_prob(*f, cfg, s.mutation, T)) <= 1e-9);
            CHECK(s.log_prob <= 0.0);
        }
    }
}

TEST_CASE("factor distributions are proper")
{
    Rng rng = make_rng(32);
    const Dataset ds = toy_dataset(rng);
    const auto policy = FactoredPolicy::random(rng, 0.5);
    for (int i = 0; i < 50; ++i) {
        const auto e = testutil::random_expression(rng, 30, 3);
        const auto f = feats(ds, e);
        double sa = 0.0;
        for (double p : policy.anchor_probs(*f)) sa += p;
        CHECK(std::fabs(sa - 1.0) <= 1e-9);
        for (std::size_t a = 1; a <= e.size(); ++a) {
            double so = 0.0;
            for (double p : policy.op_probs(*f, a, 0.7)) so += p;
            CHECK(std::fabs(so - 1.0) <= 1e-9);
        }
    }
    // a budget of one node leaves only leaves: the argument factor sums to 1 over them
    std::string big;
    for (int i = 0; i < 29; ++i) big += "add ";
    big += "x0";
    for (int i = 0; i < 29; ++i) big += " x1";
    const auto e = parse_prefix(big);
    REQUIRE(e.size() == 59);
    const auto f = feats(ds, e);
    double s = 0.0;
    for (int j = 0; j <= 3; ++j) {
        Mutation m{1, MutationOp::add_right, j < 3 ? Expression::variable(j) : Expression::constant(1.0)};
        s += std::exp(policy.factor_log_probs(*f, {}, m).arg);
    }
    CHECK(std::fabs(s - 1.0) <= 1e-9);
    Mutation too_big{1, MutationOp::add_right, parse_prefix("cos x0")};
    CHECK(policy.log_prob(*f, {}, too_big) == -std::numeric_limits<double>::infinity());
    Mutation hidden_var{1, MutationOp::add_right, Expression::variable(5)};
    CHECK(policy.log_prob(*f, {}, hidden_var) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("analytic NLL gradient matches finite differences")
{
    Rng rng = make_rng(33);
    const Dataset ds = toy_dataset(rng);
    auto policy = FactoredPolicy::random(rng, 0.2);
    std::vector<ImitationItem> items;
    for (int i = 0; i < 6; ++i) {
        const auto e = i == 0 ? Expression{} : testutil::random_expression(rng, 12, 3);
        const auto f = feats(ds, e);
        items.push_back({f, policy.sample(*f, {}, 1.0, rng).mutation});
    }
    std::vector<double> grad(FactoredPolicy::parameter_count(), 0.0);
    for (const auto& it : items) policy.accumulate_nll_gradient(*it.features, {}, it.target, grad);
    auto& theta = policy.parameters();
    for (int k = 0; k < 300; ++k) {
        const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(theta.size()) - 1));
        const double h = 1e-6, keep = theta[i];
        theta[i] = keep + h;
        double up = 0.0;
        for (const auto& it : items) up -= policy.log_prob(*it.features, {}, it.target);
        theta[i] = keep - h;
        double down = 0.0;
        for (const auto& it : items) down -= policy.log_prob(*it.features, {}, it.target);
        theta[i] = keep;
        CHECK(grad[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("sample_mutations")
{
    Rng rng = make_rng(34);
    const Dataset ds = toy_dataset(rng, 2);
    const FactoredPolicy uniform;
    const ConstraintConfig cfg;

    // coverage: every growth op kind shows up from x0
    const auto f = feats(ds, parse_prefix("x0"));
    std::set<MutationOp> ops;
    SampleStats stats;
    for (int i = 0; i < 200; ++i)
        for (const auto& c : sample_mutations(uniform, *f, cfg, 16, 1.0, rng, &stats)) {
            ops.insert(c.mutation.mutation.op);
            CHECK(validate_mutation(f->expr, c.mutation.mutation) == MutationError::none);
            CHECK(check_constraints(c.child, cfg) == Violation::none);
            CHECK(c.child.max_variable() < 2);
        }
    CHECK(ops.size() == kNumGrowthOps);
    CHECK(stats.raw > 0);

    // distinct children
    const auto kids = sample_mutations(uniform, *f, cfg, 16, 1.0, rng);
    std::set<std::vector<std::string>> uniq;
    for (const auto& c : kids) uniq.insert(to_prefix(c.child));
    CHECK(uniq.size() == kids.size());

    // saturated expression: every growth exceeds 60 nodes
    std::string chain;
    for (int i = 0; i < 29; ++i) chain += "add ";
    chain += "x0";
    for (int i = 0; i < 29; ++i) chain += " x1";
    const Expression sat = Expression::unary(OpKind::cos, parse_prefix(chain));
    REQUIRE(sat.size() == 60);
    const auto fs = feats(ds, sat);
    SampleStats sat_stats;
    CHECK_THROWS_AS(sample_mutations(uniform, *fs, cfg, 8, 1.0, rng, &sat_stats), PolicyExhausted);
    CHECK(sat_stats.raw == 80);
    CHECK(sat_stats.constraint_rejections() == 80);
}

TEST_CASE("anchor/op entropy grows with temperature")
{
    Rng rng = make_rng(35);
    const Dataset ds = toy_dataset(rng);
    const auto policy = FactoredPolicy::random(rng, 1.0);
    const auto f = feats(ds, parse_prefix("add mul x0 x1 sin x2"));
    auto measure = [&](double T) {
        std::map<std::string, int> anchor, op;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const auto s = policy.sample(*f, {}, T, rng);
            ++anchor[std::to_string(s.mutation.anchor)];
            ++op[std::string(mutation_op_name(s.mutation.op))];
        }
        return std::pair{entropy(anchor, n), entropy(op, n)};
    };
    const auto cold = measure(0.5);
    const auto warm = measure(1.0);
    CHECK(warm.first >= cold.first - 0.01);
    CHECK(warm.second >= cold.second - 0.01);
}

TEST_CASE("imitation_update")
{
    Rng rng = make_rng(36);
    const Dataset ds = toy_dataset(rng);
    const auto f = feats(ds, parse_prefix("mul x0 x1"));
    std::vector<ImitationItem> one{{f, Mutation{3, MutationOp::add_right, parse_prefix("cos x0")}}};

    FactoredPolicy frozen;
    const auto before = frozen.parameters();
    imitation_update(frozen, one, 0.0);
    CHECK(frozen.parameters() == before);

    FactoredPolicy p;
    double prev = std::numeric_limits<double>::infinity();
    int rises = 0;
    double last = 0.0;
    for (int step = 0; step < 500; ++step) {
        last = imitation_update(p, one, 0.05);
        if (last > prev + 1e-12) ++rises;
        prev = last;
    }
    CHECK(mean_nll(p, one) < 0.05);
    CHECK(rises <= 5);
}

TEST_CASE("imitation on a corpus beats the uniform policy on held-out traces")
{
    GenConfig cfg;
    std::vector<ImitationItem> train, held;
    for (std::size_t i = 0; i < 400; ++i) {
        auto rec = make_corpus_record(cfg, 10, 77, i);
        auto ds = std::make_shared<const Dataset>(std::move(rec.dataset));
        for (const auto& s : rec.trace.steps) (i < 300 ? train : held).push_back({feats(*ds, s.state, i), s.mutation});
    }
    FactoredPolicy p;
    const double uniform_nll = mean_nll(p, held);
    for (int epoch = 0; epoch < 8; ++epoch)
        for (std::size_t b = 0; b + 32 <= train.size(); b += 32)
            imitation_update(p, std::span(train).subspan(b, 32), 0.02);
    const double trained = mean_nll(p, held);
    MESSAGE("held-out NLL uniform " << uniform_nll << " trained " << trained);
    CHECK(trained < uniform_nll);
}

TEST_CASE("critics")
{
    Rng rng = make_rng(37);
    const Dataset ds = toy_dataset(rng);
    const ConstantCritic baseline;
    CHECK(baseline.value(*feats(ds, parse_prefix("x0"))) == 0.5);

    LinearCritic c;
    CHECK_THROWS_AS(critic_update(c, {}, 0.1), std::invalid_argument);
    std::vector<CriticItem> ones;
    for (int i = 0; i < 8; ++i) ones.push_back({feats(ds, testutil::random_expression(rng, 10, 3)), 1.0});
    for (int i = 0; i < 400; ++i) critic_update(c, ones, 0.05);
    for (const auto& it : ones) CHECK(c.value(*it.features) > 0.98);

    // loss is the mean of the per-item squared errors
    LinearCritic fresh;
    std::vector<CriticItem> mixed{{ones[0].features, 1.0}, {ones[1].features, 0.0}, {ones[2].features, 0.25}};
    double expect = 0.0;
    for (const auto& it : mixed) expect += std::pow(fresh.value(*it.features) - it.target, 2) / 3.0;
    CHECK(critic_update(fresh, mixed, 0.0) == doctest::Approx(expect).epsilon(1e-14));

    LinearCritic wild;
    std::normal_distribution<double> z(0.0, 50.0);
    for (auto& w : wild.parameters()) w = z(rng);
    Features f;
    for (int i = 0; i < 100000; ++i) {
        for (auto& s : f.state) s = z(rng);
        const double v = wild.value(f);
        CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("snapshot files round-trip")
{
    Rng rng = make_rng(38);
    auto policy = std::make_shared<FactoredPolicy>(FactoredPolicy::random(rng, 1.0));
    auto critic = std::make_shared<LinearCritic>();
    critic->parameters()[3] = -0.125;
    const ModelSnapshot s{42, policy, critic};
    const auto path = std::filesystem::temp_directory_path() / "srmcts_snapshot_test.json";
    save_snapshot(s, path);
    const auto back = load_snapshot(path);
    CHECK(back.version == 42);
    CHECK(back.policy->parameters() == policy->parameters());
    CHECK(back.critic->parameters() == critic->parameters());
    std::filesystem::remove(path);
}
