#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/errors.hpp"
#include "srmcts/expert_iteration.hpp"

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>

using namespace srmcts;

namespace {

std::shared_ptr<const Dataset> planted(const std::string& id, const std::string& prefix, int d, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    Dataset ds;
    ds.id = id;
    ds.X = testutil::random_matrix(rng, 120, static_cast<std::size_t>(d), 1.0);
    ds.y = evaluate(parse_prefix(prefix), ds.X).values;
    return std::make_shared<const Dataset>(std::move(ds));
}

TrialResult result_with(std::vector<MutationTrace> traces, std::vector<NodeSummary> nodes)
{
    TrialResult r;
    r.solved = !traces.empty();
    r.solved_traces = std::move(traces);
    r.nodes = std::move(nodes);
    return r;
}

MutationTrace trace_of(const std::string& prefix)
{
    Rng rng = make_rng(3);
    return dismantle(parse_prefix(prefix), 1, rng);
}

CampaignConfig small_campaign()
{
    CampaignConfig c;
    c.synthetic_fraction = 0.0;
    c.trial.iterations = 100;
    c.evaluation_budget = 5000;
    c.total_trials = 40;
    c.train_steps_per_trial = 2;
    c.batch_size = 16;
    c.strategy = ConstOptStrategy::never;
    c.seed = 7;
    return c;
}

} // namespace

TEST_CASE("FIFO queue evicts the oldest entry exactly")
{
    FifoQueue<int> q(3);
    for (int i = 0; i < 5; ++i) q.push(i);
    CHECK(q.size() == 3);
    CHECK(q.evicted() == 2);
    CHECK(q[0] == 2);
    CHECK(q[2] == 4);
    CHECK_THROWS_AS(FifoQueue<int>(0), std::invalid_argument);
}

TEST_CASE("harvest")
{
    auto ds = planted("h", "add x0 x1", 2, 1);
    SUBCASE("unsolved and rarely visited: nothing")
    {
        ReplayQueues q;
        const auto c = harvest(result_with({}, {{parse_prefix("x0"), 8, 4.0, false}}), ds, q, 8);
        CHECK(c.mutation_items == 0);
        CHECK(c.critic_items == 0);
        CHECK(q.critic.empty());
    }
    SUBCASE("shortest trace wins")
    {
        ReplayQueues q;
        const auto three = trace_of("add x0 mul x1 x1");
        const auto five = trace_of("add x0 mul x1 add x1 mul x0 x0");
        REQUIRE(three.steps.size() == 3);
        REQUIRE(five.steps.size() == 5);
        harvest(result_with({five, three}, {}), ds, q, 8);
        REQUIRE(q.mutations.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(q.mutations[i].state == three.steps[i].state);
    }
    SUBCASE("critic targets")
    {
        ReplayQueues q;
        harvest(result_with({}, {{parse_prefix("x0"), 9, 4.5, false}, {parse_prefix("x1"), 2, 0.2, true}}), ds, q, 8);
        REQUIRE(q.critic.size() == 2);
        CHECK(q.critic[0].target == doctest::Approx(0.5));
        CHECK(q.critic[1].target == 1.0);
    }
}

TEST_CASE("make_training_batch mixing")
{
    auto ds = planted("b", "add x0 x1", 2, 2);
    const auto tr = trace_of("add x0 x1");
    std::vector<MutationEntry> corpus;
    for (const auto& s : tr.steps) corpus.push_back({ds, s.state, s.mutation});
    Rng rng = make_rng(4);

    ReplayQueues empty;
    const auto only_corpus = make_training_batch(empty, corpus, {64, 0.5}, rng);
    CHECK(only_corpus.mutation.size() == 64);
    CHECK(only_corpus.from_corpus == 64);
    CHECK(only_corpus.critic.empty());
    CHECK(only_corpus.critic_skipped);

    ReplayQueues full;
    for (const auto& s : tr.steps) full.mutations.push({ds, s.state, s.mutation});
    full.critic.push({ds, parse_prefix("x0"), 0.3});
    const auto mixed = make_training_batch(full, corpus, {64, 0.5}, rng);
    CHECK(mixed.mutation.size() == 32);
    CHECK(mixed.from_corpus == 16);
    CHECK(mixed.from_queue == 16);
    CHECK(mixed.critic.size() == 32);
    CHECK(!mixed.critic_skipped);

    const auto no_mix = make_training_batch(full, corpus, {64, 0.0}, rng);
    CHECK(no_mix.from_corpus == 0);
    CHECK(no_mix.from_queue == 32);

    const auto queue_only = make_training_batch(full, {}, {10, 0.5}, rng);
    CHECK(queue_only.from_queue == 5);

    CHECK_THROWS_AS(make_training_batch(empty, {}, {64, 0.5}, rng), EmptySources);
}

TEST_CASE("campaign config file round-trip")
{
    CampaignConfig c = small_campaign();
    c.roster_paths = {"a.csv", "b.csv"};
    c.scheduling = Scheduling::sequential;
    c.ranges.p_ucts = {1.5};
    const auto back = campaign_config_from_json(campaign_config_to_json(c));
    CHECK(campaign_config_to_json(back) == campaign_config_to_json(c));
    CHECK(back.scheduling == Scheduling::sequential);
    CHECK_THROWS(campaign_config_from_json(R"({"no_such_key": 1})"));
    CHECK_THROWS(campaign_config_from_json(R"({"pretrain_mix_fraction": 2})"));
    CHECK(campaign_config_from_json("{}").evaluation_budget == 500000);
}

TEST_CASE("trivially solvable roster stops at first solve")
{
    auto ds = planted("easy", "add x0 x1", 2, 5);
    auto cfg = small_campaign();
    const auto rep = run_campaign({{ds, false}}, cfg, ModelSnapshot::initial());
    REQUIRE(rep.datasets.size() == 1);
    CHECK(rep.datasets[0].solved);
    CHECK(rep.datasets[0].trials == rep.trials.size());
    CHECK(rep.trials.back().solved);
    CHECK(rep.datasets[0].best_r2 >= 0.99);
    CHECK(rep.solved == 1);
}

TEST_CASE("snapshot versions increase and trials record them")
{
    auto a = planted("a", "mul x0 cos mul 3 x1", 2, 6);
    auto b = planted("b", "div x0 add 2 exp x1", 2, 7);
    auto cfg = small_campaign();
    cfg.total_trials = 8;
    const auto rep = run_campaign({{a, false}, {b, false}}, cfg, ModelSnapshot::initial());
    CHECK(rep.trials.size() <= 8);
    for (std::size_t i = 1; i < rep.trials.size(); ++i) {
        CHECK(rep.trials[i].trial > rep.trials[i - 1].trial);
        CHECK(rep.trials[i].snapshot_version >= rep.trials[i - 1].snapshot_version);
    }
    for (std::size_t i = 1; i < rep.snapshots.size(); ++i) CHECK(rep.snapshots[i].version > rep.snapshots[i - 1].version);
    if (!rep.snapshots.empty()) CHECK(rep.final_snapshot.version == rep.snapshots.back().version);
    for (const auto& d : rep.datasets) CHECK(d.evaluations <= cfg.evaluation_budget);

    std::ostringstream jsonl, csv;
    rep.write_jsonl(jsonl);
    rep.write_summary_csv(csv);
    CHECK(csv.str().rfind("dataset,solved,best_r2,evaluations,trials,first_solve_trial\n", 0) == 0);
    CHECK(jsonl.str().find("\"type\":\"trial\"") != std::string::npos);
}

TEST_CASE("scheduling modes")
{
    auto a = planted("a", "add x0 x1", 2, 8);
    auto b = planted("b", "mul x0 x1", 2, 9);
    auto c = planted("c", "sub x0 x1", 2, 10);
    const std::vector<RosterDataset> roster{{a, false}, {b, false}, {c, false}};
    auto cfg = small_campaign();
    cfg.learn = false;

    cfg.scheduling = Scheduling::simultaneous;
    cfg.evaluation_budget = 300;
    const auto sim = run_campaign(roster, cfg, ModelSnapshot::initial());
    REQUIRE(sim.trials.size() >= 3);
    CHECK(sim.trials[0].dataset == "a");
    CHECK(sim.trials[1].dataset != "a");

    cfg.scheduling = Scheduling::sequential;
    const auto seq = run_campaign(roster, cfg, ModelSnapshot::initial());
    // each dataset runs until solved or out of budget before the next starts
    std::vector<std::string> order;
    for (const auto& t : seq.trials)
        if (order.empty() || order.back() != t.dataset) order.push_back(t.dataset);
    CHECK(std::set<std::string>(order.begin(), order.end()).size() == order.size());
    for (const auto& t : seq.trials) CHECK(t.snapshot_version == 0);
}

TEST_CASE("inline campaigns are reproducible")
{
    auto a = planted("a", "add x0 cos x1", 2, 11);
    auto cfg = small_campaign();
    cfg.synthetic_fraction = 0.5;
    cfg.synthetic.d_max = 2;
    cfg.synthetic.internal_max = 6;
    cfg.total_trials = 6;
    cfg.strategy = ConstOptStrategy::alternate;
    const auto roster = build_roster({a}, cfg);
    REQUIRE(roster.size() == 2);
    CHECK(roster[1].synthetic);
    std::ostringstream x, y;
    run_campaign(roster, cfg, ModelSnapshot::initial()).write_summary_csv(x);
    run_campaign(build_roster({a}, cfg), cfg, ModelSnapshot::initial()).write_summary_csv(y);
    CHECK(x.str() == y.str());
}

TEST_CASE("worker failures requeue with the same budget")
{
    auto a = planted("a", "add x0 x1", 2, 12);
    auto cfg = small_campaign();
    int calls = 0;
    const TrialHook flaky = [&](const std::string&, std::size_t) {
        if (++calls <= 2) throw std::runtime_error("worker crashed");
    };
    const auto rep = run_campaign({{a, false}}, cfg, ModelSnapshot::initial(), {}, flaky);
    CHECK(rep.failures == 2);
    CHECK(rep.datasets[0].solved);
    CHECK(!rep.datasets[0].failed);

    const TrialHook dead = [](const std::string&, std::size_t) { throw std::runtime_error("down"); };
    const auto gone = run_campaign({{a, false}}, cfg, ModelSnapshot::initial(), {}, dead);
    CHECK(gone.datasets[0].failed);
    CHECK(gone.datasets[0].evaluations == 0);
    CHECK(gone.failures == cfg.max_failures);
}

TEST_CASE("threaded campaign")
{
    std::vector<RosterDataset> roster;
    const char* targets[] = {"add x0 x1", "mul x0 x1", "sub x1 x0", "add x0 cos x1"};
    for (int i = 0; i < 4; ++i) roster.push_back({planted("t" + std::to_string(i), targets[i], 2, 20 + i), false});
    auto cfg = small_campaign();
    cfg.workers = 3;
    cfg.trainers = 2;
    std::atomic<int> calls{0};
    const TrialHook hook = [&](const std::string&, std::size_t) {
        if (calls++ == 1) throw std::runtime_error("one failure");
    };
    const auto rep = run_campaign(roster, cfg, ModelSnapshot::initial(), {}, hook);
    CHECK(rep.failures == 1);
    CHECK(rep.solved >= 3);
    for (std::size_t i = 1; i < rep.snapshots.size(); ++i) CHECK(rep.snapshots[i].version > rep.snapshots[i - 1].version);
    std::set<std::size_t> ids;
    for (const auto& t : rep.trials) ids.insert(t.trial);
    CHECK(ids.size() == rep.trials.size());
}

TEST_CASE("pretraining lowers imitation NLL")
{
    GenConfig g = GenConfig::in_domain();
    g.d_max = 3;
    g.internal_max = 10;
    std::vector<CorpusRecord> corpus;
    for (std::size_t i = 0; i < 60; ++i) corpus.push_back(make_corpus_record(g, 10, 13, i));
    Rng rng = make_rng(14);
    const auto items = imitation_items(corpus, rng);
    FactoredPolicy policy;
    const double before = mean_nll(policy, items);
    PretrainConfig pc;
    pc.epochs = 3;
    const auto epochs = pretrain_policy(policy, items, pc, rng);
    CHECK(epochs.size() == 3);
    CHECK(mean_nll(policy, items) < before);
    CHECK(pretraining_entries(corpus).size() == items.size());
}
