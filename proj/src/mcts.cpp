#include "srmcts/mcts.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace srmcts {

void TrialConfig::check() const
{
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (k_min < 1 || k_max > 64 || k_min > k_max) throw std::invalid_argument("K range must lie within [1, 64]");
    if (!(p_uct > 0.0)) throw std::invalid_argument("p_uct must be > 0");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(depth_penalty > 0.0 && depth_penalty <= 1.0)) throw std::invalid_argument("depth_penalty must be in (0, 1]");
}

TrialConfig sample_trial_config(Rng& rng, const HyperRanges& r, TrialConfig base)
{
    if (r.depth_penalties.empty() || r.p_ucts.empty()) throw std::invalid_argument("empty hyperparameter set");
    base.k_min = r.k_min;
    base.k_max = r.k_max;
    base.temperature = r.temperature_lo == r.temperature_hi
        ? r.temperature_lo
        : std::uniform_real_distribution<double>(r.temperature_lo, r.temperature_hi)(rng);
    base.depth_penalty = r.depth_penalties[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<int>(r.depth_penalties.size()) - 1))];
    base.p_uct = r.p_ucts[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(r.p_ucts.size()) - 1))];
    return base;
}

// -- tree ------------------------------------------------------------------------

SearchTree::SearchTree() { nodes_.emplace_back(); }

std::size_t SearchTree::add_child(std::size_t parent, Expression expr, Mutation edge, double prior)
{
    SearchNode n;
    n.expr = std::move(expr);
    n.edge = std::move(edge);
    n.parent = parent;
    n.prior = prior;
    n.depth = nodes_[parent].depth + 1;
    nodes_.push_back(std::move(n));
    const std::size_t id = nodes_.size() - 1;
    nodes_[parent].children.push_back(id);
    return id;
}

MutationTrace SearchTree::trace_to(std::size_t id) const
{
    MutationTrace t;
    t.target = nodes_[id].expr;
    for (std::size_t at = id; at != root; at = nodes_[at].parent)
        t.steps.push_back({nodes_[nodes_[at].parent].expr, nodes_[at].edge});
    std::reverse(t.steps.begin(), t.steps.end());
    return t;
}

double puct_score(const SearchNode& child, std::uint64_t sibling_visits, double p_uct) noexcept
{
    const double explore = std::sqrt(static_cast<double>(sibling_visits)) / (1.0 + static_cast<double>(child.N));
    return child.V() + p_uct * explore * child.prior;
}

std::size_t select_child(const SearchTree& tree, std::size_t id, double p_uct)
{
    const auto& kids = tree[id].children;
    std::uint64_t total = 0;
    for (std::size_t c : kids) total += tree[c].N;
    std::size_t best = kids.front();
    double best_score = puct_score(tree[best], total, p_uct);
    for (std::size_t i = 1; i < kids.size(); ++i) {
        const std::size_t c = kids[i];
        const double s = puct_score(tree[c], total, p_uct);
        // children are stored in id order, so keeping the incumbent on full ties keeps the lowest id
        if (s > best_score || (s == best_score && tree[c].prior > tree[best].prior)) {
            best = c;
            best_score = s;
        }
    }
    return best;
}

std::vector<std::size_t> select(const SearchTree& tree, double p_uct)
{
    std::vector<std::size_t> path{SearchTree::root};
    while (!tree[path.back()].children.empty()) path.push_back(select_child(tree, path.back(), p_uct));
    return path;
}

void backpropagate(SearchTree& tree, std::size_t id, double value, double depth_penalty)
{
    double v = value;
    for (std::size_t at = id;; at = tree[at].parent) {
        tree[at].N += 1;
        tree[at].v_sum += v;
        if (at == SearchTree::root) break;
        v *= depth_penalty;
    }
}

// -- expansion -------------------------------------------------------------------

ExpansionStats expand(SearchTree& tree, std::size_t leaf, const Dataset& train, const MutationPolicy& policy,
                      const Critic& critic, const TrialConfig& cfg, std::size_t budget_left, Rng& rng,
                      SampleStats* stats)
{
    ExpansionStats out;
    if (!tree[leaf].children.empty()) throw std::logic_error("expand: node already has children");
    if (budget_left == 0) return out;
    if (!tree[leaf].features) tree[leaf].features = std::make_shared<const Features>(featurize(train, tree[leaf].expr, rng));

    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(uniform_int(rng, cfg.k_min, cfg.k_max)), budget_left);
    std::vector<SampledChild> kids;
    try {
        kids = sample_mutations(policy, *tree[leaf].features, cfg.constraints, k, cfg.temperature, rng, stats);
    } catch (const PolicyExhausted&) {
        tree[leaf].terminal = true;
        out.exhausted = true;
        backpropagate(tree, leaf, 0.0, cfg.depth_penalty);
        return out;
    }

    // priors renormalised over the sampled children
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& c : kids) mx = std::max(mx, c.mutation.log_prob);
    std::vector<double> prior(kids.size());
    double z = 0.0;
    for (std::size_t i = 0; i < kids.size(); ++i) z += (prior[i] = std::exp(kids[i].mutation.log_prob - mx));
    for (auto& p : prior) p /= z;

    for (std::size_t i = 0; i < kids.size(); ++i) {
        const std::size_t id = tree.add_child(leaf, std::move(kids[i].child), std::move(kids[i].mutation.mutation), prior[i]);
        SearchNode& node = tree[id];
        node.train_r2 = r_squared(node.expr, train);
        if (cfg.strategy == ConstOptStrategy::all) {
            try {
                auto fit = optimize_constants(node.expr, train, cfg.constopt, rng);
                if (fit.r2 > node.train_r2) {
                    node.train_r2 = fit.r2;
                    node.fitted = std::move(fit.fitted);
                }
            } catch (const OptimizationSkipped&) {
            }
        }
        node.solved = node.train_r2 >= cfg.solve_threshold;
        double v = 1.0;
        if (!node.solved) {
            if (critic.needs_features()) node.features = std::make_shared<const Features>(featurize(train, node.expr, rng));
            v = std::clamp(critic.value(node.features ? *node.features : Features{}), 0.0, 1.0);
        }
        ++out.created;
        backpropagate(tree, id, v, cfg.depth_penalty);
        if (node.solved) {
            out.solved = true;
            if (cfg.stop_on_solve) break;
        }
    }
    return out;
}

// -- trial -----------------------------------------------------------------------

namespace {

// Higher R², then smaller simplified size, then earlier discovery.
struct BestTracker {
    std::size_t id = SearchNode::npos;
    double r2 = -std::numeric_limits<double>::infinity();
    std::size_t size = 0;

    void offer(const SearchTree& tree, std::size_t candidate)
    {
        const SearchNode& n = tree[candidate];
        if (!std::isfinite(n.train_r2) && id != SearchNode::npos) return;
        const std::size_t sz = simplify(n.fitted ? *n.fitted : n.expr).size();
        if (id == SearchNode::npos || n.train_r2 > r2 || (n.train_r2 == r2 && sz < size)) {
            id = candidate;
            r2 = n.train_r2;
            size = sz;
        }
    }
};

} // namespace

TrialResult run_trial(const Dataset& train, const MutationPolicy& policy, const Critic& critic,
                      const TrialConfig& cfg, Rng& rng)
{
    TrialResult res;
    if (cfg.iterations == 0) return res;
    cfg.check();
    if (cfg.strategy == ConstOptStrategy::alternate)
        throw std::invalid_argument("run_trial needs a concrete constant-optimization strategy");
    const auto start = std::chrono::steady_clock::now();

    SearchTree tree;
    BestTracker best;
    std::vector<std::size_t> solved_nodes;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (res.evaluations >= cfg.evaluation_budget) break;
        const auto path = select(tree, cfg.p_uct);
        const std::size_t leaf = path.back();
        ++res.iterations_run;
        IterationLog log;
        log.iteration = it;
        log.depth = tree[leaf].depth;
        if (tree[leaf].terminal) {
            backpropagate(tree, leaf, 0.0, cfg.depth_penalty);
        } else {
            const std::size_t first = tree.size();
            const auto ex = expand(tree, leaf, train, policy, critic, cfg, cfg.evaluation_budget - res.evaluations, rng,
                                   &res.sampling);
            if (ex.exhausted) ++res.exhausted_leaves;
            res.evaluations += ex.created;
            log.k = ex.created;
            for (std::size_t id = first; id < tree.size(); ++id) {
                best.offer(tree, id);
                if (tree[id].solved) solved_nodes.push_back(id);
            }
        }
        log.best_r2 = best.r2;
        log.evaluations = res.evaluations;
        if (cfg.record_log) res.log.push_back(log);
        if (!solved_nodes.empty() && cfg.stop_on_solve) break;
    }

    res.node_count = tree.size() - 1;
    if (best.id != SearchNode::npos) {
        SearchNode& b = tree[best.id];
        res.best = b.expr;
        res.best_fitted = b.fitted ? *b.fitted : b.expr;
        res.best_r2 = b.train_r2;
        if (cfg.strategy == ConstOptStrategy::best_only) {
            try {
                auto fit = optimize_constants(b.expr, train, cfg.constopt, rng);
                if (fit.r2 > res.best_r2) {
                    res.best_r2 = fit.r2;
                    res.best_fitted = fit.fitted;
                    b.fitted = std::move(fit.fitted);
                    b.train_r2 = res.best_r2;
                    if (!b.solved && res.best_r2 >= cfg.solve_threshold) {
                        b.solved = true;
                        solved_nodes.push_back(best.id);
                    }
                }
            } catch (const OptimizationSkipped&) {
            }
        }
    }
    res.solved = !solved_nodes.empty();

    std::vector<char> on_path(tree.size(), 0);
    for (std::size_t id : solved_nodes) {
        MutationTrace t = tree.trace_to(id);
        if (tree[id].fitted) t = refit_trace(t, *tree[id].fitted);
        res.solved_traces.push_back(std::move(t));
        for (std::size_t at = id; at != SearchTree::root; at = tree[at].parent) on_path[at] = 1;
    }
    for (std::size_t id = 1; id < tree.size(); ++id) {
        const SearchNode& n = tree[id];
        if (on_path[id] || n.N > cfg.summary_min_visits) res.nodes.push_back({n.expr, n.N, n.v_sum, on_path[id] != 0});
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// -- constant refit along a trace --------------------------------------------------------

MutationTrace refit_trace(const MutationTrace& trace, const Expression& fitted)
{
    // Replay with every constant's value replaced by a unique id, so each constant
    // in the final expression can be traced back to the argument that inserted it.
    auto tag = [](const Expression& e, double& next) {
        std::vector<Node> nodes(e.nodes().begin(), e.nodes().end());
        for (auto& n : nodes)
            if (n.kind == OpKind::constant) n.value = next++;
        return Expression::from_prefix(std::move(nodes));
    };
    double next = 0.0;
    std::vector<Expression> states;
    std::vector<std::optional<Expression>> args;
    Expression shadow;
    for (const auto& step : trace.steps) {
        Mutation m = step.mutation;
        if (m.arg) m.arg = tag(*m.arg, next);
        states.push_back(shadow);
        args.push_back(m.arg);
        shadow = apply_unchecked(shadow, m);
    }
    if (shadow.size() != fitted.size()) throw std::invalid_argument("refit_trace: structure mismatch");
    std::map<double, double> value_of;
    for (std::size_t p = 0; p < fitted.size(); ++p) {
        const Node& a = shadow.nodes()[p];
        const Node& b = fitted.nodes()[p];
        if (a.kind != b.kind || a.var != b.var) throw std::invalid_argument("refit_trace: structure mismatch");
        if (a.kind == OpKind::constant) value_of[a.value] = b.value;
    }
    auto untag = [&](const Expression& e) {
        std::vector<Node> nodes(e.nodes().begin(), e.nodes().end());
        for (auto& n : nodes)
            if (n.kind == OpKind::constant) n.value = value_of.at(n.value);
        return Expression::from_prefix(std::move(nodes));
    };
    MutationTrace out;
    out.target = fitted;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        Mutation m = trace.steps[i].mutation;
        if (args[i]) m.arg = untag(*args[i]);
        out.steps.push_back({states[i].empty() ? Expression{} : untag(states[i]), std::move(m)});
    }
    return out;
}

} // namespace srmcts
