#include "srmcts/expert_iteration.hpp"

#include "srmcts/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <ostream>
#include <thread>

namespace srmcts {

using nlohmann::json;

HarvestCounts harvest(const TrialResult& result, const std::shared_ptr<const Dataset>& dataset, ReplayQueues& queues,
                      std::uint64_t n_min_visits)
{
    HarvestCounts out;
    if (!result.solved_traces.empty()) {
        const auto shortest = std::min_element(result.solved_traces.begin(), result.solved_traces.end(),
                                               [](const auto& a, const auto& b) { return a.steps.size() < b.steps.size(); });
        for (const auto& step : shortest->steps) {
            queues.mutations.push({dataset, step.state, step.mutation});
            ++out.mutation_items;
        }
    }
    for (const auto& n : result.nodes) {
        double target;
        if (n.on_solution_path)
            target = 1.0;
        else if (n.N > n_min_visits)
            target = std::clamp(n.v_sum / static_cast<double>(n.N), 0.0, 1.0);
        else
            continue;
        queues.critic.push({dataset, n.expr, target});
        ++out.critic_items;
    }
    return out;
}

std::vector<MutationEntry> pretraining_entries(const std::vector<CorpusRecord>& corpus)
{
    std::vector<MutationEntry> out;
    for (const auto& rec : corpus) {
        auto ds = std::make_shared<const Dataset>(rec.dataset);
        for (const auto& step : rec.trace.steps) out.push_back({ds, step.state, step.mutation});
    }
    return out;
}

namespace {

struct BatchPlan {
    std::vector<MutationEntry> mutation;
    std::vector<CriticEntry> critic;
    std::size_t from_corpus = 0;
    std::size_t from_queue = 0;
    bool critic_skipped = false;
};

template <class Source>
const auto& pick(const Source& src, Rng& rng)
{
    return src[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(src.size()) - 1))];
}

BatchPlan plan_batch(const ReplayQueues& queues, const std::vector<MutationEntry>& corpus, const BatchConfig& cfg,
                     Rng& rng)
{
    if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (!(cfg.pretrain_mix_fraction >= 0.0 && cfg.pretrain_mix_fraction <= 1.0))
        throw std::invalid_argument("pretrain_mix_fraction must be in [0, 1]");
    const bool have_mutation = !queues.mutations.empty() || !corpus.empty();
    if (!have_mutation && queues.critic.empty()) throw EmptySources("no corpus, mutation queue or critic queue items");

    BatchPlan plan;
    std::size_t n_mut = cfg.batch_size;
    std::size_t n_crit = 0;
    if (queues.critic.empty())
        plan.critic_skipped = true;
    else if (!have_mutation)
        n_mut = 0, n_crit = cfg.batch_size;
    else
        n_mut = cfg.batch_size / 2, n_crit = cfg.batch_size - n_mut;

    std::size_t n_corpus = static_cast<std::size_t>(std::llround(cfg.pretrain_mix_fraction * static_cast<double>(n_mut)));
    if (corpus.empty()) n_corpus = 0;
    if (queues.mutations.empty()) n_corpus = n_mut;
    for (std::size_t i = 0; i < n_mut; ++i) {
        if (i < n_corpus) {
            plan.mutation.push_back(pick(corpus, rng));
            ++plan.from_corpus;
        } else {
            plan.mutation.push_back(pick(queues.mutations, rng));
            ++plan.from_queue;
        }
    }
    for (std::size_t i = 0; i < n_crit; ++i) plan.critic.push_back(pick(queues.critic, rng));
    return plan;
}

TrainingBatch featurize_plan(const BatchPlan& plan, Rng& rng)
{
    TrainingBatch b;
    b.from_corpus = plan.from_corpus;
    b.from_queue = plan.from_queue;
    b.critic_skipped = plan.critic_skipped;
    for (const auto& e : plan.mutation)
        b.mutation.push_back({std::make_shared<const Features>(featurize(*e.dataset, e.state, rng)), e.mutation});
    for (const auto& e : plan.critic)
        b.critic.push_back({std::make_shared<const Features>(featurize(*e.dataset, e.expr, rng)), e.target});
    return b;
}

} // namespace

TrainingBatch make_training_batch(const ReplayQueues& queues, const std::vector<MutationEntry>& corpus,
                                  const BatchConfig& cfg, Rng& rng)
{
    return featurize_plan(plan_batch(queues, corpus, cfg, rng), rng);
}

// -- pretraining -----------------------------------------------------------------

std::vector<ImitationItem> imitation_items(const std::vector<CorpusRecord>& corpus, Rng& rng)
{
    std::vector<ImitationItem> out;
    for (const auto& rec : corpus)
        for (const auto& step : rec.trace.steps)
            out.push_back({std::make_shared<const Features>(featurize(rec.dataset, step.state, rng)), step.mutation});
    return out;
}

std::vector<EpochReport> pretrain_policy(FactoredPolicy& policy, const std::vector<ImitationItem>& items,
                                         const PretrainConfig& cfg, Rng& rng,
                                         const std::function<void(const EpochReport&)>& on_epoch)
{
    if (items.empty()) throw std::invalid_argument("pretrain_policy: no items");
    if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    std::vector<EpochReport> out;
    std::vector<std::size_t> order(items.size());
    std::vector<ImitationItem> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(items[order[i]]);
            const double nll = imitation_update(policy, batch, cfg.learning_rate, cfg.constraints);
            if (std::isfinite(nll)) {
                sum += nll;
                ++batches;
            }
        }
        out.push_back({epoch, batches ? sum / static_cast<double>(batches) : 0.0});
        if (on_epoch) on_epoch(out.back());
    }
    return out;
}

// -- configuration ---------------------------------------------------------------

std::string_view to_string(Scheduling s) noexcept
{
    return s == Scheduling::simultaneous ? "simultaneous" : "sequential";
}

Scheduling scheduling_from_string(std::string_view name)
{
    if (name == "simultaneous") return Scheduling::simultaneous;
    if (name == "sequential") return Scheduling::sequential;
    throw std::invalid_argument("unknown scheduling: " + std::string(name));
}

void CampaignConfig::check() const
{
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(synthetic_fraction) || synthetic_fraction == 1.0)
        throw std::invalid_argument("synthetic_fraction must be in [0, 1)");
    if (!unit(pretrain_mix_fraction)) throw std::invalid_argument("pretrain_mix_fraction must be in [0, 1]");
    if (trainers == 0) throw std::invalid_argument("trainers must be >= 1");
    if (mutation_capacity == 0 || critic_capacity == 0) throw std::invalid_argument("queue capacities must be positive");
    if (total_trials == 0 || evaluation_budget == 0) throw std::invalid_argument("budgets must be positive");
    if (!(wall_limit_seconds > 0.0)) throw std::invalid_argument("wall limit must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(policy_learning_rate > 0.0) || !(critic_learning_rate > 0.0))
        throw std::invalid_argument("learning rates must be positive");
    trial.check();
    synthetic.check();
}

std::string campaign_config_to_json(const CampaignConfig& c)
{
    json roster = json::array();
    for (const auto& p : c.roster_paths) roster.push_back(p.string());
    const json j{
        {"roster", roster},
        {"synthetic_fraction", c.synthetic_fraction},
        {"synthetic_d_min", c.synthetic.d_min},
        {"synthetic_d_max", c.synthetic.d_max},
        {"synthetic_points", c.synthetic.n_points},
        {"synthetic_internal_min", c.synthetic.internal_min},
        {"synthetic_internal_max", c.synthetic.internal_max},
        {"workers", c.workers},
        {"trainers", c.trainers},
        {"n_min_visits", c.n_min_visits},
        {"pretrain_mix_fraction", c.pretrain_mix_fraction},
        {"mutation_capacity", c.mutation_capacity},
        {"critic_capacity", c.critic_capacity},
        {"total_trials", c.total_trials},
        {"evaluation_budget", c.evaluation_budget},
        {"wall_limit_seconds", c.wall_limit_seconds},
        {"scheduling", std::string(to_string(c.scheduling))},
        {"learn", c.learn},
        {"train_steps_per_trial", c.train_steps_per_trial},
        {"batch_size", c.batch_size},
        {"policy_learning_rate", c.policy_learning_rate},
        {"critic_learning_rate", c.critic_learning_rate},
        {"iterations", c.trial.iterations},
        {"solve_threshold", c.trial.solve_threshold},
        {"max_operators", c.trial.constraints.max_operators},
        {"k_min", c.ranges.k_min},
        {"k_max", c.ranges.k_max},
        {"temperature_min", c.ranges.temperature_lo},
        {"temperature_max", c.ranges.temperature_hi},
        {"depth_penalties", c.ranges.depth_penalties},
        {"p_ucts", c.ranges.p_ucts},
        {"constant_strategy", std::string(to_string(c.strategy))},
        {"constopt_batch_size", c.trial.constopt.batch_size},
        {"constopt_patience", c.trial.constopt.patience},
        {"constopt_timeout_seconds", c.trial.constopt.timeout_seconds},
        {"max_failures", c.max_failures},
        {"seed", c.seed},
    };
    return j.dump(2);
}

CampaignConfig campaign_config_from_json(const std::string& text)
{
    const json j = json::parse(text);
    if (!j.is_object()) throw std::runtime_error("campaign config must be a JSON object");
    const json defaults = json::parse(campaign_config_to_json({}));
    for (const auto& [k, v] : j.items())
        if (!defaults.contains(k)) throw std::runtime_error("unknown campaign config key: " + k);
    json m = defaults;
    m.update(j);

    CampaignConfig c;
    for (const auto& p : m.at("roster")) c.roster_paths.emplace_back(p.get<std::string>());
    c.synthetic_fraction = m.at("synthetic_fraction").get<double>();
    c.synthetic.d_min = m.at("synthetic_d_min").get<int>();
    c.synthetic.d_max = m.at("synthetic_d_max").get<int>();
    c.synthetic.n_points = m.at("synthetic_points").get<std::size_t>();
    c.synthetic.internal_min = m.at("synthetic_internal_min").get<int>();
    c.synthetic.internal_max = m.at("synthetic_internal_max").get<int>();
    c.workers = m.at("workers").get<std::size_t>();
    c.trainers = m.at("trainers").get<std::size_t>();
    c.n_min_visits = m.at("n_min_visits").get<std::uint64_t>();
    c.pretrain_mix_fraction = m.at("pretrain_mix_fraction").get<double>();
    c.mutation_capacity = m.at("mutation_capacity").get<std::size_t>();
    c.critic_capacity = m.at("critic_capacity").get<std::size_t>();
    c.total_trials = m.at("total_trials").get<std::size_t>();
    c.evaluation_budget = m.at("evaluation_budget").get<std::size_t>();
    c.wall_limit_seconds = m.at("wall_limit_seconds").get<double>();
    c.scheduling = scheduling_from_string(m.at("scheduling").get<std::string>());
    c.learn = m.at("learn").get<bool>();
    c.train_steps_per_trial = m.at("train_steps_per_trial").get<std::size_t>();
    c.batch_size = m.at("batch_size").get<std::size_t>();
    c.policy_learning_rate = m.at("policy_learning_rate").get<double>();
    c.critic_learning_rate = m.at("critic_learning_rate").get<double>();
    c.trial.iterations = m.at("iterations").get<std::size_t>();
    c.trial.solve_threshold = m.at("solve_threshold").get<double>();
    c.trial.constraints.max_operators = m.at("max_operators").get<int>();
    c.ranges.k_min = m.at("k_min").get<int>();
    c.ranges.k_max = m.at("k_max").get<int>();
    c.ranges.temperature_lo = m.at("temperature_min").get<double>();
    c.ranges.temperature_hi = m.at("temperature_max").get<double>();
    c.ranges.depth_penalties = m.at("depth_penalties").get<std::vector<double>>();
    c.ranges.p_ucts = m.at("p_ucts").get<std::vector<double>>();
    c.strategy = const_opt_strategy_from_string(m.at("constant_strategy").get<std::string>());
    c.trial.constopt.batch_size = m.at("constopt_batch_size").get<std::size_t>();
    c.trial.constopt.patience = m.at("constopt_patience").get<int>();
    c.trial.constopt.timeout_seconds = m.at("constopt_timeout_seconds").get<double>();
    c.max_failures = m.at("max_failures").get<std::size_t>();
    c.seed = m.at("seed").get<std::uint64_t>();
    c.check();
    return c;
}

// -- report ----------------------------------------------------------------------

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_real(double v)
{
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void CampaignReport::write_jsonl(std::ostream& out) const
{
    for (const auto& t : trials) {
        json curve = json::array();
        for (const auto& p : t.curve) curve.push_back({p.evaluations, number_or_null(p.best_r2)});
        out << json{{"type", "trial"},
                    {"trial", t.trial},
                    {"dataset", t.dataset},
                    {"snapshot_version", t.snapshot_version},
                    {"k_min", t.config.k_min},
                    {"k_max", t.config.k_max},
                    {"temperature", t.config.temperature},
                    {"depth_penalty", t.config.depth_penalty},
                    {"p_uct", t.config.p_uct},
                    {"constant_strategy", std::string(to_string(t.config.strategy))},
                    {"solved", t.solved},
                    {"best_r2", number_or_null(t.best_r2)},
                    {"evaluations", t.evaluations},
                    {"invalid_samples", t.invalid_samples},
                    {"wall_seconds", t.wall_seconds},
                    {"curve", curve}}
                   .dump()
            << '\n';
    }
    for (const auto& s : snapshots)
        out << json{{"type", "snapshot"},
                    {"version", s.version},
                    {"after_trials", s.after_trials},
                    {"policy_nll", number_or_null(s.policy_nll)},
                    {"critic_loss", number_or_null(s.critic_loss)}}
                   .dump()
            << '\n';
    for (const auto& d : datasets)
        out << json{{"type", "dataset"},
                    {"dataset", d.id},
                    {"synthetic", d.synthetic},
                    {"solved", d.solved},
                    {"failed", d.failed},
                    {"best_r2", number_or_null(d.best_r2)},
                    {"best", d.best ? json(to_prefix(*d.best)) : json(nullptr)},
                    {"evaluations", d.evaluations},
                    {"trials", d.trials},
                    {"first_solve_trial", d.first_solve_trial ? json(*d.first_solve_trial) : json(nullptr)}}
                   .dump()
            << '\n';
}

void CampaignReport::write_iteration_log(std::ostream& out) const
{
    for (const auto& t : trials)
        for (const auto& l : t.iterations)
            out << json{{"trial", t.trial},
                        {"dataset", t.dataset},
                        {"iteration", l.iteration},
                        {"depth", l.depth},
                        {"k", l.k},
                        {"best_r2", number_or_null(l.best_r2)},
                        {"evaluations", l.evaluations}}
                       .dump()
                << '\n';
}

void CampaignReport::write_summary_csv(std::ostream& out) const
{
    out << "dataset,solved,best_r2,evaluations,trials,first_solve_trial\n";
    for (const auto& d : datasets)
        out << d.id << ',' << (d.solved ? 1 : 0) << ',' << csv_real(d.best_r2) << ',' << d.evaluations << ','
            << d.trials << ',' << (d.first_solve_trial ? std::to_string(*d.first_solve_trial) : std::string()) << '\n';
}

// -- roster ----------------------------------------------------------------------

std::vector<RosterDataset> build_roster(const std::vector<std::shared_ptr<const Dataset>>& external,
                                        const CampaignConfig& cfg)
{
    std::vector<RosterDataset> roster;
    for (const auto& d : external) roster.push_back({d, false});
    std::size_t n_syn = 0;
    if (cfg.synthetic_fraction > 0.0) {
        const double ratio = cfg.synthetic_fraction / (1.0 - cfg.synthetic_fraction);
        n_syn = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(external.size()))));
    }
    for (std::size_t i = 0; i < n_syn; ++i) {
        Rng rng = make_rng(cfg.seed, 0x5e1f0000ULL + i);
        roster.push_back({std::make_shared<const Dataset>(
                              make_example(cfg.synthetic, rng, "synthetic-" + std::to_string(cfg.seed) + "-" + std::to_string(i))),
                          true});
    }
    return roster;
}

// -- campaign --------------------------------------------------------------------

namespace {

struct Job {
    std::size_t trial = 0;
    std::size_t dataset = 0;
    TrialConfig config;
};

struct JobResult {
    Job job;
    std::uint64_t snapshot_version = 0;
    std::optional<TrialResult> result;
    std::string error;
};

struct DatasetState {
    DatasetOutcome outcome;
    std::size_t best_size = 0;
    std::size_t failures = 0;
    bool in_flight = false;

    bool done(const CampaignConfig& cfg) const
    {
        return outcome.solved || outcome.failed || outcome.evaluations >= cfg.evaluation_budget ||
               (cfg.workers > 1 && outcome.wall_seconds >= cfg.wall_limit_seconds);
    }
};

// Parameters being trained plus the last published immutable snapshot.
struct Learner {
    FactoredPolicy policy;
    LinearCritic critic;
    std::shared_ptr<const ModelSnapshot> published;
};

class Campaign {
public:
    Campaign(const std::vector<RosterDataset>& roster, const CampaignConfig& cfg, ModelSnapshot initial,
             const std::vector<MutationEntry>& corpus, const TrialHook& hook)
        : roster_(roster), cfg_(cfg), corpus_(corpus), hook_(hook), queues_(cfg.mutation_capacity, cfg.critic_capacity),
          control_rng_(make_rng(cfg.seed, 1)), train_rng_(make_rng(cfg.seed, 2))
    {
        if (!initial.policy) initial.policy = std::make_shared<const FactoredPolicy>();
        if (!initial.critic) initial.critic = std::make_shared<const LinearCritic>();
        learner_.policy = *initial.policy;
        learner_.critic = *initial.critic;
        learner_.published = std::make_shared<const ModelSnapshot>(std::move(initial));
        for (const auto& r : roster) {
            DatasetState s;
            s.outcome.id = r.data->id;
            s.outcome.synthetic = r.synthetic;
            states_.push_back(std::move(s));
        }
    }

    CampaignReport run()
    {
        if (cfg_.workers <= 1)
            run_inline();
        else
            run_threaded();
        CampaignReport rep;
        for (auto& s : states_) {
            rep.solved += s.outcome.solved ? 1 : 0;
            rep.failures += s.failures;
            rep.datasets.push_back(s.outcome);
        }
        std::sort(trials_.begin(), trials_.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
        rep.trials = std::move(trials_);
        rep.snapshots = std::move(snapshots_);
        rep.final_snapshot = *learner_.published;
        rep.queue_mutation_items = queues_.mutations.size();
        rep.queue_critic_items = queues_.critic.size();
        return rep;
    }

private:
    // Next dataset to dispatch, or npos. Simultaneous scheduling rotates over
    // every unfinished dataset; sequential stays on the first unfinished one.
    std::size_t next_dataset()
    {
        const std::size_t n = states_.size();
        if (cfg_.scheduling == Scheduling::sequential) {
            for (std::size_t i = 0; i < n; ++i)
                if (!states_[i].done(cfg_)) return states_[i].in_flight ? npos : i;
            return npos;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = (cursor_ + k) % n;
            if (!states_[i].done(cfg_) && !states_[i].in_flight) {
                cursor_ = i + 1;
                return i;
            }
        }
        return npos;
    }

    bool any_active() const
    {
        for (const auto& s : states_)
            if (!s.done(cfg_)) return true;
        return false;
    }

    Job make_job(std::size_t dataset)
    {
        Job job;
        job.trial = dispatched_++;
        job.dataset = dataset;
        TrialConfig base = cfg_.trial;
        base.summary_min_visits = cfg_.n_min_visits;
        base.record_log = true;
        if (cfg_.workers <= 1) base.constopt.wall_clock = false;
        job.config = sample_trial_config(control_rng_, cfg_.ranges, base);
        const auto& st = states_[dataset];
        job.config.strategy = cfg_.strategy != ConstOptStrategy::alternate
            ? cfg_.strategy
            : (st.outcome.trials % 2 == 0 ? ConstOptStrategy::never : ConstOptStrategy::all);
        job.config.evaluation_budget = cfg_.evaluation_budget - st.outcome.evaluations;
        return job;
    }

    JobResult execute(const Job& job, const std::shared_ptr<const ModelSnapshot>& snap) const
    {
        JobResult r;
        r.job = job;
        r.snapshot_version = snap->version;
        try {
            if (hook_) hook_(roster_[job.dataset].data->id, job.trial);
            Rng rng = make_rng(cfg_.seed, 0x7e1a1000000ULL + job.trial);
            r.result = run_trial(*roster_[job.dataset].data, *snap->policy, *snap->critic, job.config, rng);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    }

    // Folds a finished job into dataset state and the replay queues. Returns
    // whether the trial completed (so training may follow).
    bool absorb(JobResult&& r)
    {
        auto& st = states_[r.job.dataset];
        st.in_flight = false;
        if (!r.result) {
            ++st.failures;
            if (st.failures >= cfg_.max_failures) st.outcome.failed = true;
            return false;
        }
        const TrialResult& res = *r.result;
        auto& o = st.outcome;
        TrialRecord rec;
        rec.trial = r.job.trial;
        rec.dataset = o.id;
        rec.snapshot_version = r.snapshot_version;
        rec.config = r.job.config;
        rec.solved = res.solved;
        rec.best_r2 = res.best_r2;
        rec.evaluations = res.evaluations;
        rec.invalid_samples = res.sampling.malformed + res.sampling.constraint_rejections();
        rec.wall_seconds = res.wall_seconds;
        double running = -std::numeric_limits<double>::infinity();
        for (const auto& l : res.log)
            if (l.best_r2 > running) {
                running = l.best_r2;
                rec.curve.push_back({o.evaluations + l.evaluations, l.best_r2});
            }
        if (cfg_.keep_iteration_logs) rec.iterations = res.log;
        trials_.push_back(std::move(rec));

        if (res.best_fitted) {
            const std::size_t sz = simplify(*res.best_fitted).size();
            if (!o.best || res.best_r2 > o.best_r2 || (res.best_r2 == o.best_r2 && sz < st.best_size)) {
                o.best = *res.best_fitted;
                o.best_r2 = res.best_r2;
                st.best_size = sz;
            }
        }
        o.evaluations += res.evaluations;
        o.wall_seconds += res.wall_seconds;
        if (res.solved && !o.solved) {
            o.solved = true;
            o.first_solve_trial = o.trials;
        }
        ++o.trials;
        harvest(res, roster_[r.job.dataset].data, queues_, cfg_.n_min_visits);
        return true;
    }

    bool can_train() const { return cfg_.learn && (!corpus_.empty() || !queues_.mutations.empty() || !queues_.critic.empty()); }

    // One gradient step on the learner; caller holds whatever lock guards it.
    void train_step(const TrainingBatch& b, double& nll, double& closs)
    {
        if (!b.mutation.empty())
            nll = imitation_update(learner_.policy, b.mutation, cfg_.policy_learning_rate, cfg_.trial.constraints);
        if (!b.critic.empty()) closs = critic_update(learner_.critic, b.critic, cfg_.critic_learning_rate);
    }

    std::shared_ptr<const ModelSnapshot> make_snapshot() const
    {
        ModelSnapshot s;
        s.version = learner_.published->version + 1;
        s.policy = std::make_shared<const FactoredPolicy>(learner_.policy);
        s.critic = std::make_shared<const LinearCritic>(learner_.critic);
        return std::make_shared<const ModelSnapshot>(std::move(s));
    }

    void run_inline()
    {
        const BatchConfig bc{cfg_.batch_size, cfg_.pretrain_mix_fraction};
        while (dispatched_ < cfg_.total_trials && any_active()) {
            const std::size_t d = next_dataset();
            if (d == npos) break;
            const Job job = make_job(d);
            if (!absorb(execute(job, learner_.published)) || !can_train()) continue;
            double nll = std::numeric_limits<double>::quiet_NaN(), closs = nll;
            for (std::size_t s = 0; s < cfg_.train_steps_per_trial; ++s)
                train_step(featurize_plan(plan_batch(queues_, corpus_, bc, train_rng_), train_rng_), nll, closs);
            if (cfg_.train_steps_per_trial > 0) {
                learner_.published = make_snapshot();
                snapshots_.push_back({learner_.published->version, trials_.size(), nll, closs});
            }
        }
    }

    void run_threaded()
    {
        const BatchConfig bc{cfg_.batch_size, cfg_.pretrain_mix_fraction};
        std::mutex mu;               // queues, snapshot pointer, job/result channels, dataset states
        std::mutex learn_mu;         // learner parameters
        std::condition_variable job_cv, result_cv, train_cv;
        std::deque<Job> jobs;
        std::deque<JobResult> results;
        std::size_t train_tokens = 0;
        bool stopping = false;

        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < cfg_.workers; ++w)
            threads.emplace_back([&] {
                for (;;) {
                    Job job;
                    std::shared_ptr<const ModelSnapshot> snap;
                    {
                        std::unique_lock lk(mu);
                        job_cv.wait(lk, [&] { return stopping || !jobs.empty(); });
                        if (jobs.empty()) return;
                        job = jobs.front();
                        jobs.pop_front();
                        snap = learner_.published;
                    }
                    JobResult r = execute(job, snap);
                    {
                        std::lock_guard lk(mu);
                        results.push_back(std::move(r));
                    }
                    result_cv.notify_one();
                }
            });
        for (std::size_t t = 0; t < cfg_.trainers; ++t)
            threads.emplace_back([&, t] {
                Rng rng = make_rng(cfg_.seed, 0x7a1e0000ULL + t);
                for (;;) {
                    BatchPlan plan;
                    {
                        std::unique_lock lk(mu);
                        train_cv.wait(lk, [&] { return stopping || train_tokens > 0; });
                        if (stopping) return;
                        --train_tokens;
                        plan = plan_batch(queues_, corpus_, bc, rng);
                    }
                    const TrainingBatch batch = featurize_plan(plan, rng);
                    double nll = std::numeric_limits<double>::quiet_NaN(), closs = nll;
                    std::lock_guard learn_lk(learn_mu);
                    train_step(batch, nll, closs);
                    auto snap = make_snapshot();
                    std::lock_guard lk(mu);
                    learner_.published = std::move(snap);
                    snapshots_.push_back({learner_.published->version, trials_.size(), nll, closs});
                }
            });

        std::size_t in_flight = 0;
        {
            std::unique_lock lk(mu);
            for (;;) {
                while (in_flight < cfg_.workers && dispatched_ < cfg_.total_trials) {
                    const std::size_t d = next_dataset();
                    if (d == npos) break;
                    states_[d].in_flight = true;
                    jobs.push_back(make_job(d));
                    ++in_flight;
                    job_cv.notify_one();
                }
                if (in_flight == 0) break;
                result_cv.wait(lk, [&] { return !results.empty(); });
                while (!results.empty()) {
                    JobResult r = std::move(results.front());
                    results.pop_front();
                    --in_flight;
                    if (absorb(std::move(r)) && can_train()) {
                        train_tokens += cfg_.train_steps_per_trial;
                        train_cv.notify_all();
                    }
                }
            }
            stopping = true;
        }
        job_cv.notify_all();
        train_cv.notify_all();
        for (auto& th : threads) th.join();
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    const std::vector<RosterDataset>& roster_;
    const CampaignConfig& cfg_;
    const std::vector<MutationEntry>& corpus_;
    const TrialHook& hook_;
    ReplayQueues queues_;
    Learner learner_;
    std::vector<DatasetState> states_;
    std::vector<TrialRecord> trials_;
    std::vector<SnapshotEvent> snapshots_;
    Rng control_rng_;
    Rng train_rng_;
    std::size_t dispatched_ = 0;
    std::size_t cursor_ = 0;
};

} // namespace

CampaignReport run_campaign(const std::vector<RosterDataset>& roster, const CampaignConfig& cfg, ModelSnapshot initial,
                            const std::vector<MutationEntry>& pretrain_corpus, const TrialHook& hook)
{
    if (roster.empty()) throw std::invalid_argument("run_campaign: empty roster");
    cfg.check();
    return Campaign(roster, cfg, std::move(initial), pretrain_corpus, hook).run();
}

} // namespace srmcts
