// Command-line front end: generate, pretrain, search, bench, pareto.

#include "srmcts/bench.hpp"
#include "srmcts/expert_iteration.hpp"
#include "srmcts/kernels.hpp"
#include "srmcts/tokenizer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace srmcts;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

std::size_t parse_goal(const std::string& s)
{
    if (s == "inf" || s == "unbounded") return kUnboundedGoal;
    const long long v = std::stoll(s);
    if (v < 1) throw std::invalid_argument("--goal must be >= 1 or 'inf'");
    return static_cast<std::size_t>(v);
}

std::vector<CorpusRecord> load_corpus(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    return read_corpus(f);
}

ModelSnapshot load_or_initial(const std::string& path)
{
    return path.empty() ? ModelSnapshot::initial() : load_snapshot(path);
}

// Campaign flags shared by search and bench. Values given on the command line
// override the config file, which overrides the defaults.
struct CampaignFlags {
    std::string config_path;
    std::size_t iterations = 0, budget = 0, trials = 0, workers = 0, trainers = 0;
    double mix = 0, synthetic = 0, threshold = 0;
    std::string strategy, scheduling;
    bool frozen = false;
    CLI::Option *o_iter{}, *o_budget{}, *o_trials{}, *o_workers{}, *o_trainers{}, *o_mix{}, *o_syn{}, *o_thr{},
        *o_strategy{}, *o_sched{}, *o_frozen{};

    void add(CLI::App* app)
    {
        app->add_option("--config", config_path, "campaign config file (JSON)")->check(CLI::ExistingFile);
        o_iter = app->add_option("--iterations", iterations, "MCTS iterations per trial");
        o_budget = app->add_option("--budget", budget, "evaluation budget per dataset");
        o_trials = app->add_option("--max-trials", trials, "total trial cap");
        o_workers = app->add_option("--workers", workers, "worker threads (1 = reproducible single thread)");
        o_trainers = app->add_option("--trainers", trainers, "trainer threads in threaded mode");
        o_mix = app->add_option("--mix", mix, "fraction of pretraining items in mutation batches")->check(CLI::Range(0.0, 1.0));
        o_syn = app->add_option("--synthetic-fraction", synthetic, "share of synthetic datasets in the roster")
                    ->check(CLI::Range(0.0, 0.99));
        o_thr = app->add_option("--solve-threshold", threshold, "train R2 that counts as solved");
        o_strategy = app->add_option("--const-opt", strategy, "never | best_only | all | alternate");
        o_sched = app->add_option("--scheduling", scheduling, "simultaneous | sequential");
        o_frozen = app->add_flag("--frozen", frozen, "no online training");
    }

    CampaignConfig resolve(std::uint64_t seed) const
    {
        CampaignConfig c = config_path.empty() ? CampaignConfig{} : campaign_config_from_json(read_file(config_path));
        c.seed = seed;
        if (o_iter->count()) c.trial.iterations = iterations;
        if (o_budget->count()) c.evaluation_budget = budget;
        if (o_trials->count()) c.total_trials = trials;
        if (o_workers->count()) c.workers = workers;
        if (o_trainers->count()) c.trainers = trainers;
        if (o_mix->count()) c.pretrain_mix_fraction = mix;
        if (o_syn->count()) c.synthetic_fraction = synthetic;
        if (o_thr->count()) c.trial.solve_threshold = threshold;
        if (o_strategy->count()) c.strategy = const_opt_strategy_from_string(strategy);
        if (o_sched->count()) c.scheduling = scheduling_from_string(scheduling);
        if (frozen) c.learn = false;
        c.check();
        return c;
    }
};

int cmd_generate(std::uint64_t seed, std::size_t count, const std::string& goal, const std::string& preset,
                 int d_max, const std::string& out, const std::string& traces, const std::string& vocab,
                 const std::string& csv_dir)
{
    GenConfig g = preset == "out" ? GenConfig::out_of_domain() : GenConfig::in_domain();
    if (d_max > 0) g.d_max = std::min(g.d_max, d_max), g.d_min = std::min(g.d_min, g.d_max);
    g.check();
    const std::size_t goal_n = parse_goal(goal);
    auto sink = open_out(out);
    std::ofstream trace_sink;
    if (!traces.empty()) trace_sink = open_out(traces);
    if (!csv_dir.empty()) std::filesystem::create_directories(csv_dir);

    CorpusSummary sum;
    GenStats stats;
    for (std::size_t i = 0; i < count; ++i) {
        const auto rec = make_corpus_record(g, goal_n, seed, i, &stats);
        sink << corpus_record_to_json(rec) << '\n';
        if (trace_sink.is_open()) write_trace_records(rec, trace_sink);
        if (!csv_dir.empty()) write_csv(rec.dataset, std::filesystem::path(csv_dir) / (rec.dataset.id + ".csv"));
        ++sum.trace_length_histogram[rec.trace.steps.size()];
        sum.total_steps += rec.trace.steps.size();
    }
    if (!vocab.empty()) write_vocabulary(vocab);
    std::cout << "records " << count << ", steps " << sum.total_steps << "\ntrace lengths:";
    for (const auto& [len, n] : sum.trace_length_histogram) std::cout << ' ' << len << ':' << n;
    std::cout << '\n';
    return 0;
}

int cmd_pretrain(std::uint64_t seed, const std::string& corpus_path, const std::string& init, const std::string& out,
                 PretrainConfig pc, double holdout)
{
    Rng rng = make_rng(seed);
    auto corpus = load_corpus(corpus_path);
    if (corpus.empty()) throw std::runtime_error("empty corpus");
    const std::size_t n_hold = static_cast<std::size_t>(holdout * static_cast<double>(corpus.size()));
    std::vector<CorpusRecord> held(corpus.end() - static_cast<std::ptrdiff_t>(n_hold), corpus.end());
    corpus.resize(corpus.size() - n_hold);
    const auto items = imitation_items(corpus, rng);
    const auto held_items = imitation_items(held, rng);

    ModelSnapshot snap = load_or_initial(init);
    FactoredPolicy policy = *snap.policy;
    const FactoredPolicy uniform;
    if (!held_items.empty())
        std::cout << "held-out NLL: uniform " << mean_nll(uniform, held_items) << ", start " << mean_nll(policy, held_items)
                  << '\n';
    pretrain_policy(policy, items, pc, rng, [](const EpochReport& e) {
        std::cout << "epoch " << e.epoch << " train NLL " << e.train_nll << std::endl;
    });
    if (!held_items.empty()) std::cout << "held-out NLL: trained " << mean_nll(policy, held_items) << '\n';
    snap.version += 1;
    snap.policy = std::make_shared<const FactoredPolicy>(std::move(policy));
    save_snapshot(snap, out);
    std::cout << "wrote " << out << " (version " << snap.version << ")\n";
    return 0;
}

int cmd_search(const std::string& data, const std::string& snapshot, const CampaignConfig& cfg,
               const std::string& report, const std::string& trace_log, const std::string& corpus_path,
               const std::string& snapshot_out)
{
    auto ds = std::make_shared<const Dataset>(read_csv(data, std::filesystem::path(data).stem().string()));
    CampaignConfig c = cfg;
    c.keep_iteration_logs = !trace_log.empty();
    const auto roster = build_roster({ds}, c);
    const auto corpus = corpus_path.empty() ? std::vector<MutationEntry>{} : pretraining_entries(load_corpus(corpus_path));
    const auto rep = run_campaign(roster, c, load_or_initial(snapshot), corpus);
    const auto& o = rep.datasets.front();
    std::cout << "dataset " << o.id << (o.solved ? " solved" : " not solved") << " r2_train " << format_real(o.best_r2)
              << " evaluations " << o.evaluations << " trials " << o.trials << '\n';
    if (o.best) {
        const auto s = simplify(*o.best);
        std::cout << "best " << to_prefix_string(s) << "\nsize " << s.size() << '\n';
    }
    if (!report.empty()) {
        auto f = open_out(report);
        rep.write_jsonl(f);
    }
    if (!trace_log.empty()) {
        auto f = open_out(trace_log);
        rep.write_iteration_log(f);
    }
    if (!snapshot_out.empty()) save_snapshot(rep.final_snapshot, snapshot_out);
    return o.solved ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symbolic regression by Monte-Carlo tree search over expression mutations"};
    app.require_subcommand(1);
    std::string simd;
    app.add_option("--simd", simd, "kernel variant: scalar | avx2 | neon (default: best available)");

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic imitation corpus (JSONL)");
    std::uint64_t gen_seed = 0;
    std::size_t gen_count = 1000;
    std::string gen_goal = "10", gen_preset = "in", gen_out, gen_traces, gen_vocab, gen_csv;
    int gen_dmax = 0;
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--count", gen_count, "number of records");
    gen->add_option("--goal", gen_goal, "mutation size goal (integer or 'inf')");
    gen->add_option("--preset", gen_preset, "in | out (in-domain or out-of-domain sizes)")->check(CLI::IsMember({"in", "out"}));
    gen->add_option("--max-dims", gen_dmax, "cap on the number of input variables");
    gen->add_option("--out", gen_out, "corpus JSONL")->required();
    gen->add_option("--traces", gen_traces, "also write flat per-step trace records (JSONL)");
    gen->add_option("--vocab", gen_vocab, "also write the token vocabulary");
    gen->add_option("--csv-dir", gen_csv, "also write each dataset as CSV");

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "imitation training of the mutation policy on a corpus");
    std::uint64_t pre_seed = 0;
    std::string pre_corpus, pre_init, pre_out;
    PretrainConfig pc;
    double pre_holdout = 0.05;
    pre->add_option("--seed", pre_seed, "random seed");
    pre->add_option("--corpus", pre_corpus, "corpus JSONL from generate")->required()->check(CLI::ExistingFile);
    pre->add_option("--init", pre_init, "starting snapshot (default: uniform policy)");
    pre->add_option("--out", pre_out, "snapshot file to write")->required();
    pre->add_option("--epochs", pc.epochs, "passes over the corpus");
    pre->add_option("--batch-size", pc.batch_size, "items per Adam step");
    pre->add_option("--lr", pc.learning_rate, "Adam learning rate");
    pre->add_option("--holdout", pre_holdout, "fraction of records held out for NLL reporting")->check(CLI::Range(0.0, 0.9));

    // search
    auto* search = app.add_subcommand("search", "search one CSV dataset");
    std::uint64_t search_seed = 0;
    std::string search_data, search_snap, search_report, search_trace, search_corpus, search_snap_out;
    CampaignFlags search_flags;
    search->add_option("--seed", search_seed, "random seed");
    search->add_option("--data", search_data, "CSV with header x0..x(d-1),y")->required()->check(CLI::ExistingFile);
    search->add_option("--snapshot", search_snap, "policy/critic snapshot (default: uniform)");
    search->add_option("--corpus", search_corpus, "pretraining corpus mixed into online updates");
    search->add_option("--report", search_report, "campaign report (JSONL)");
    search->add_option("--trace-log", search_trace, "per-iteration trial log (JSONL)");
    search->add_option("--save-snapshot", search_snap_out, "write the final snapshot");
    search_flags.add(search);

    // bench
    auto* bench = app.add_subcommand("bench", "run a suite of CSV datasets");
    std::uint64_t bench_seed = 0;
    std::string bench_suite, bench_out, bench_snap, bench_corpus, bench_agg = "median";
    std::vector<std::uint64_t> bench_seeds{0, 1, 2};
    std::size_t bench_jobs = 1;
    CampaignFlags bench_flags;
    bench->add_option("--seed", bench_seed, "campaign seed");
    bench->add_option("--suite", bench_suite, "directory of CSV datasets")->required()->check(CLI::ExistingPath);
    bench->add_option("--out", bench_out, "output directory")->required();
    bench->add_option("--seeds", bench_seeds, "split seeds")->delimiter(',');
    bench->add_option("--snapshot", bench_snap, "policy/critic snapshot (default: uniform)");
    bench->add_option("--corpus", bench_corpus, "pretraining corpus mixed into online updates");
    bench->add_option("--aggregate", bench_agg, "median | mean across datasets")->check(CLI::IsMember({"median", "mean"}));
    bench->add_option("--jobs", bench_jobs, "concurrent (dataset, seed) jobs");
    bench_flags.add(bench);

    // pareto
    auto* pareto = app.add_subcommand("pareto", "rank a metrics CSV (label, accuracy, size) by Pareto fronts");
    std::uint64_t pareto_seed = 0;
    std::string pareto_in, pareto_out;
    pareto->add_option("--seed", pareto_seed, "unused; accepted for uniformity");
    pareto->add_option("--in", pareto_in, "metrics CSV")->required()->check(CLI::ExistingFile);
    pareto->add_option("--out", pareto_out, "output CSV (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!simd.empty() && !kernels::select(simd)) throw std::runtime_error("kernel variant unavailable: " + simd);
        if (*gen)
            return cmd_generate(gen_seed, gen_count, gen_goal, gen_preset, gen_dmax, gen_out, gen_traces, gen_vocab,
                                gen_csv);
        if (*pre) return cmd_pretrain(pre_seed, pre_corpus, pre_init, pre_out, pc, pre_holdout);
        if (*search)
            return cmd_search(search_data, search_snap, search_flags.resolve(search_seed), search_report,
                              search_trace, search_corpus, search_snap_out);
        if (*bench) {
            BenchConfig bc;
            bc.campaign = bench_flags.resolve(bench_seed);
            bc.seeds = bench_seeds;
            bc.aggregate = aggregate_from_string(bench_agg);
            bc.solve_threshold = bc.campaign.trial.solve_threshold;
            bc.jobs = bench_jobs;
            const auto corpus =
                bench_corpus.empty() ? std::vector<MutationEntry>{} : pretraining_entries(load_corpus(bench_corpus));
            const auto rep = run_benchmark(bench_suite, bc, load_or_initial(bench_snap), bench_out, corpus, &std::cerr);
            std::cout << "datasets " << rep.per_dataset.size() << ", skipped " << rep.skipped.size() << ", solve rate "
                      << format_real(rep.suite.solve_rate) << ", " << to_string(bc.aggregate) << " test R2 "
                      << format_real(rep.suite.r2_test) << ", " << to_string(bc.aggregate) << " size "
                      << format_real(rep.suite.size) << '\n';
            return 0;
        }
        if (*pareto) {
            std::ifstream in(pareto_in);
            const auto pts = read_metrics_csv(in);
            if (pareto_out.empty()) {
                write_pareto_csv(pts, std::cout);
            } else {
                auto f = open_out(pareto_out);
                write_pareto_csv(pts, f);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
