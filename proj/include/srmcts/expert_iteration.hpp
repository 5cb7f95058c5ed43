#pragma once

// Expert iteration: harvest search results into FIFO replay queues, mix them
// with pretraining data, and train the policy and critic between trials while
// a controller schedules datasets over workers.

#include "srmcts/datagen.hpp"
#include "srmcts/mcts.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace srmcts {

template <class T>
class FifoQueue {
public:
    explicit FifoQueue(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
    }

    void push(T item)
    {
        if (items_.size() == capacity_) {
            items_.pop_front();
            ++evicted_;
        }
        items_.push_back(std::move(item));
    }
    const T& operator[](std::size_t i) const { return items_[i]; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t evicted() const noexcept { return evicted_; }

private:
    std::size_t capacity_;
    std::size_t evicted_ = 0;
    std::deque<T> items_;
};

struct MutationEntry {
    std::shared_ptr<const Dataset> dataset;
    Expression state;
    Mutation mutation;
};

struct CriticEntry {
    std::shared_ptr<const Dataset> dataset;
    Expression expr;
    double target = 0.0;
};

struct ReplayQueues {
    FifoQueue<MutationEntry> mutations;
    FifoQueue<CriticEntry> critic;

    explicit ReplayQueues(std::size_t mutation_capacity = 50000, std::size_t critic_capacity = 200000)
        : mutations(mutation_capacity), critic(critic_capacity) {}
};

struct HarvestCounts {
    std::size_t mutation_items = 0;
    std::size_t critic_items = 0;
};

/// Pushes the shortest solved trace step by step, target 1 for every node on a
/// solution path, and V for other nodes with N > n_min_visits.
HarvestCounts harvest(const TrialResult& result, const std::shared_ptr<const Dataset>& dataset, ReplayQueues& queues,
                      std::uint64_t n_min_visits);

/// Pretraining pool: every step of every corpus trace.
std::vector<MutationEntry> pretraining_entries(const std::vector<CorpusRecord>& corpus);

struct BatchConfig {
    std::size_t batch_size = 64;
    double pretrain_mix_fraction = 0.5;
};

struct TrainingBatch {
    std::vector<ImitationItem> mutation;
    std::vector<CriticItem> critic;
    std::size_t from_corpus = 0;
    std::size_t from_queue = 0;
    bool critic_skipped = false;
};

/// Halves the batch between mutation and critic items; the mutation half takes
/// round(mix * half) corpus items and the rest from the queue, each source
/// covering for the other when empty. Sampling is uniform with replacement.
/// Throws EmptySources when every source is empty.
TrainingBatch make_training_batch(const ReplayQueues& queues, const std::vector<MutationEntry>& corpus,
                                  const BatchConfig& cfg, Rng& rng);

// -- pretraining -----------------------------------------------------------------

struct PretrainConfig {
    std::size_t epochs = 4;
    std::size_t batch_size = 64;
    double learning_rate = 3e-3;
    ConstraintConfig constraints;
};

struct EpochReport {
    std::size_t epoch = 0;
    double train_nll = 0.0; // mean pre-step batch NLL over the epoch
};

/// Imitation on precomputed items, shuffled every epoch.
std::vector<EpochReport> pretrain_policy(FactoredPolicy& policy, const std::vector<ImitationItem>& items,
                                         const PretrainConfig& cfg, Rng& rng,
                                         const std::function<void(const EpochReport&)>& on_epoch = {});

/// Featurizes every step of every trace.
std::vector<ImitationItem> imitation_items(const std::vector<CorpusRecord>& corpus, Rng& rng);

// -- campaign --------------------------------------------------------------------

enum class Scheduling { simultaneous, sequential };
std::string_view to_string(Scheduling s) noexcept;
Scheduling scheduling_from_string(std::string_view name);

struct CampaignConfig {
    std::vector<std::filesystem::path> roster_paths; // external CSV datasets (config-file form of the roster)
    double synthetic_fraction = 0.5;                 // share of fresh synthetic datasets in the roster
    GenConfig synthetic = GenConfig::in_domain();
    std::size_t workers = 1;  // <= 1: single thread, jobs processed in order, reproducible
    std::size_t trainers = 1;
    std::uint64_t n_min_visits = 8;
    double pretrain_mix_fraction = 0.5;
    std::size_t mutation_capacity = 50000;
    std::size_t critic_capacity = 200000;
    std::size_t total_trials = 1000000;
    std::size_t evaluation_budget = 500000; // per dataset
    double wall_limit_seconds = 86400.0;    // per dataset, threaded mode only
    Scheduling scheduling = Scheduling::simultaneous;
    bool learn = true;
    std::size_t train_steps_per_trial = 4;
    std::size_t batch_size = 64;
    double policy_learning_rate = 1e-3;
    double critic_learning_rate = 1e-2;
    TrialConfig trial;  // iterations, solve threshold, constraints, constant-fit settings
    HyperRanges ranges;
    ConstOptStrategy strategy = ConstOptStrategy::alternate;
    std::size_t max_failures = 3; // per dataset before it is abandoned
    bool keep_iteration_logs = false;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on out-of-range fields.
    void check() const;
};

std::string campaign_config_to_json(const CampaignConfig& cfg);
/// Unknown keys are rejected; missing keys keep their defaults.
CampaignConfig campaign_config_from_json(const std::string& text);

struct CurvePoint {
    std::size_t evaluations = 0; // cumulative for the dataset
    double best_r2 = 0.0;
};

struct TrialRecord {
    std::size_t trial = 0; // campaign-wide dispatch index
    std::string dataset;
    std::uint64_t snapshot_version = 0;
    TrialConfig config;
    bool solved = false;
    double best_r2 = 0.0;
    std::size_t evaluations = 0;
    std::size_t invalid_samples = 0;
    double wall_seconds = 0.0;
    std::vector<CurvePoint> curve; // best-so-far improvements inside the trial, dataset-cumulative evaluations
    std::vector<IterationLog> iterations; // only with keep_iteration_logs
};

struct DatasetOutcome {
    std::string id;
    bool synthetic = false;
    bool solved = false;
    bool failed = false; // abandoned after repeated worker errors
    double best_r2 = -std::numeric_limits<double>::infinity();
    std::optional<Expression> best; // fitted variant of the best tree node
    std::size_t evaluations = 0;
    std::size_t trials = 0;
    std::optional<std::size_t> first_solve_trial;
    double wall_seconds = 0.0;
};

struct SnapshotEvent {
    std::uint64_t version = 0;
    std::size_t after_trials = 0;
    double policy_nll = 0.0;
    double critic_loss = 0.0;
};

struct CampaignReport {
    std::vector<DatasetOutcome> datasets;
    std::vector<TrialRecord> trials;
    std::vector<SnapshotEvent> snapshots;
    ModelSnapshot final_snapshot;
    std::size_t solved = 0;
    std::size_t failures = 0;
    std::size_t queue_mutation_items = 0;
    std::size_t queue_critic_items = 0;

    void write_jsonl(std::ostream& out) const;
    /// One line per search iteration of every trial (needs keep_iteration_logs).
    void write_iteration_log(std::ostream& out) const;
    /// dataset,solved,best_r2,evaluations,trials,first_solve_trial
    void write_summary_csv(std::ostream& out) const;
};

struct RosterDataset {
    std::shared_ptr<const Dataset> data; // the rows search may see
    bool synthetic = false;
};

/// Adds cfg.synthetic_fraction worth of synthetic datasets to `external`.
std::vector<RosterDataset> build_roster(const std::vector<std::shared_ptr<const Dataset>>& external,
                                        const CampaignConfig& cfg);

/// Test hook: called before each trial; an exception counts as a worker failure.
using TrialHook = std::function<void(const std::string& dataset, std::size_t trial)>;

CampaignReport run_campaign(const std::vector<RosterDataset>& roster, const CampaignConfig& cfg,
                            ModelSnapshot initial, const std::vector<MutationEntry>& pretrain_corpus = {},
                            const TrialHook& hook = {});

} // namespace srmcts
