#pragma once

// One search trial: PUCT selection, policy-driven expansion, per-child value
// backup with depth decay. The tree is discarded when the trial ends.

#include "srmcts/constopt.hpp"
#include "srmcts/dataset.hpp"
#include "srmcts/policy.hpp"

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace srmcts {

struct HyperRanges {
    int k_min = 8;
    int k_max = 16;
    double temperature_lo = 0.5;
    double temperature_hi = 1.0;
    std::vector<double> depth_penalties{0.8, 0.9, 0.95, 1.0};
    std::vector<double> p_ucts{0.5, 1.0, 2.0};
};

struct TrialConfig {
    std::size_t iterations = 1000;
    int k_min = 8;
    int k_max = 16;
    double p_uct = 1.0;
    double temperature = 1.0;
    double depth_penalty = 1.0;
    ConstOptStrategy strategy = ConstOptStrategy::never; // alternate is resolved by the caller
    ConstOptConfig constopt;
    double solve_threshold = 0.99;
    std::size_t evaluation_budget = std::numeric_limits<std::size_t>::max();
    bool stop_on_solve = true;
    ConstraintConfig constraints;
    std::uint64_t summary_min_visits = 8; // nodes reported for critic targets need N above this
    bool record_log = true;

    /// Throws std::invalid_argument on out-of-range fields.
    void check() const;
};

/// K range, temperature, depth penalty and exploration constant drawn per trial;
/// everything else copied from `base`.
TrialConfig sample_trial_config(Rng& rng, const HyperRanges& ranges, TrialConfig base = {});

struct SearchNode {
    Expression expr;
    Mutation edge; // mutation from the parent; unused at the root
    std::size_t parent = npos;
    std::vector<std::size_t> children;
    std::uint64_t N = 0;
    double v_sum = 0.0;
    double prior = 1.0;
    double train_r2 = -std::numeric_limits<double>::infinity();
    std::optional<Expression> fitted;
    bool solved = false;
    bool terminal = false;
    int depth = 0;
    std::shared_ptr<const Features> features;

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    double V() const noexcept { return N > 0 ? v_sum / static_cast<double>(N) : 0.0; }
};

class SearchTree {
public:
    SearchTree();
    std::size_t add_child(std::size_t parent, Expression expr, Mutation edge, double prior);
    SearchNode& operator[](std::size_t id) { return nodes_[id]; }
    const SearchNode& operator[](std::size_t id) const { return nodes_[id]; }
    std::size_t size() const noexcept { return nodes_.size(); }
    static constexpr std::size_t root = 0;

    /// Mutations from the root to `id`, with the state each applies to.
    MutationTrace trace_to(std::size_t id) const;

private:
    std::vector<SearchNode> nodes_;
};

/// V + p_uct * sqrt(sum of sibling N) / (1 + N) * prior, with V = 0 when N = 0.
double puct_score(const SearchNode& child, std::uint64_t sibling_visits, double p_uct) noexcept;
/// Best child of `id`: highest score, then higher prior, then lowest id.
std::size_t select_child(const SearchTree& tree, std::size_t id, double p_uct);
/// Root-to-leaf path following select_child.
std::vector<std::size_t> select(const SearchTree& tree, double p_uct);
/// N += 1 and v_sum += value * penalty^k for the node (k = 0) and each ancestor.
void backpropagate(SearchTree& tree, std::size_t id, double value, double depth_penalty);

struct IterationLog {
    std::size_t iteration = 0;
    int depth = 0;
    std::size_t k = 0;
    double best_r2 = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
};

struct NodeSummary {
    Expression expr;
    std::uint64_t N = 0;
    double v_sum = 0.0;
    bool on_solution_path = false;
};

struct TrialResult {
    std::optional<Expression> best;        // as stored in the tree
    std::optional<Expression> best_fitted; // after constant fitting (equals best when none ran)
    double best_r2 = -std::numeric_limits<double>::infinity();
    bool solved = false;
    std::vector<MutationTrace> solved_traces;
    std::vector<NodeSummary> nodes; // solution-path nodes and nodes with N > summary_min_visits
    std::size_t node_count = 0;
    std::size_t evaluations = 0;
    std::size_t iterations_run = 0;
    std::size_t exhausted_leaves = 0;
    SampleStats sampling;
    double wall_seconds = 0.0;
    std::vector<IterationLog> log;
};

struct ExpansionStats {
    std::size_t created = 0;
    bool solved = false;
    bool exhausted = false;
};

/// Expands `leaf` with up to min(K, budget_left) children, each valued and
/// backed up on its own. Marks the leaf terminal (and backs up 0) when the
/// policy is exhausted.
ExpansionStats expand(SearchTree& tree, std::size_t leaf, const Dataset& train, const MutationPolicy& policy,
                      const Critic& critic, const TrialConfig& cfg, std::size_t budget_left, Rng& rng,
                      SampleStats* stats = nullptr);

TrialResult run_trial(const Dataset& train, const MutationPolicy& policy, const Critic& critic,
                      const TrialConfig& cfg, Rng& rng);

/// Rewrites a trace so its constants carry the values of `fitted`, which must
/// differ from the trace target in constant values only.
MutationTrace refit_trace(const MutationTrace& trace, const Expression& fitted);

} // namespace srmcts
