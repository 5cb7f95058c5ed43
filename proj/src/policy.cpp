#include "srmcts/policy.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/float_tokens.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

namespace srmcts {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxRows = 16;

double dot(const double* w, const double* x, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i];
    return s;
}

// Masked softmax over `rows` logits. Returns log-probabilities (-inf when masked).
void log_softmax(const double* logits, const bool* allowed, int rows, double* out)
{
    double mx = kNegInf;
    for (int r = 0; r < rows; ++r)
        if (allowed[r]) mx = std::max(mx, logits[r]);
    double s = 0.0;
    for (int r = 0; r < rows; ++r)
        if (allowed[r]) s += std::exp(logits[r] - mx);
    const double lse = mx + std::log(s);
    for (int r = 0; r < rows; ++r) out[r] = allowed[r] ? logits[r] - lse : kNegInf;
}

int draw(const double* logp, int rows, Rng& rng)
{
    double u = uniform01(rng);
    int last = -1;
    for (int r = 0; r < rows; ++r) {
        if (logp[r] == kNegInf) continue;
        last = r;
        u -= std::exp(logp[r]);
        if (u < 0.0) return r;
    }
    return last;
}

// A linear-softmax factor: logits = (W x + bias) / T.
struct Factor {
    const double* W;
    std::size_t cols;
    int rows;
    double* grad; // W-shaped, or nullptr

    // Chooses (when idx < 0 and rng given) or scores `idx`; returns its log-prob.
    double pick(const double* x, const bool* allowed, const double* bias, double T, int& idx, Rng* rng) const
    {
        double logits[kMaxRows], logp[kMaxRows];
        for (int r = 0; r < rows; ++r)
            logits[r] = (dot(W + static_cast<std::size_t>(r) * cols, x, cols) + (bias ? bias[r] : 0.0)) / T;
        log_softmax(logits, allowed, rows, logp);
        if (idx < 0) idx = draw(logp, rows, *rng);
        if (idx < 0 || idx >= rows || logp[idx] == kNegInf) return kNegInf;
        if (grad) {
            for (int r = 0; r < rows; ++r) {
                if (logp[r] == kNegInf) continue;
                const double coef = std::exp(logp[r]) - (r == idx ? 1.0 : 0.0);
                double* g = grad + static_cast<std::size_t>(r) * cols;
                for (std::size_t c = 0; c < cols; ++c) g[c] += coef * x[c];
            }
        }
        return logp[idx];
    }
};

constexpr std::array<FactoredPolicy::Block, FactoredPolicy::kNumBlocks> make_layout()
{
    std::array<FactoredPolicy::Block, FactoredPolicy::kNumBlocks> b{{
        {"anchor", 1, kNodeFeatures, 0},
        {"op", kNumGrowthOps, FactoredPolicy::kOpInputs, 0},
        {"b_category", 3, FactoredPolicy::kArgInputs, 0},
        {"b_unary", 8, FactoredPolicy::kArgInputs, 0},
        {"b_binary", 4, FactoredPolicy::kArgInputs, 0},
        {"b_leaf", FactoredPolicy::kLeafSymbols, FactoredPolicy::kArgInputs, 0},
    }};
    std::size_t off = 0;
    for (auto& blk : b) {
        blk.offset = off;
        off += blk.rows * blk.cols;
    }
    return b;
}

constexpr auto kLayout = make_layout();

enum Category { leaf_cat = 0, unary_cat = 1, binary_cat = 2 };

int category_of(OpKind k) { return is_leaf(k) ? leaf_cat : is_unary(k) ? unary_cat : binary_cat; }

} // namespace

// -- optimiser -------------------------------------------------------------------

void AdamState::apply(std::vector<double>& theta, std::span<const double> grad, double lr)
{
    if (lr == 0.0) return;
    if (m.size() != theta.size()) resize(theta.size());
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
        v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
        theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
}

// -- factored policy --------------------------------------------------------------

const std::array<FactoredPolicy::Block, FactoredPolicy::kNumBlocks>& FactoredPolicy::layout() { return kLayout; }

std::size_t FactoredPolicy::parameter_count()
{
    const auto& last = kLayout.back();
    return last.offset + last.rows * last.cols;
}

FactoredPolicy::FactoredPolicy() : theta_(parameter_count(), 0.0) {}

FactoredPolicy FactoredPolicy::random(Rng& rng, double scale)
{
    FactoredPolicy p;
    std::normal_distribution<double> z(0.0, scale);
    for (auto& t : p.theta_) t = z(rng);
    return p;
}

struct FactoredPolicy::Walk {
    Rng* rng = nullptr;            // sampling
    std::span<const Node> given;   // scoring
    std::vector<Node>* out = nullptr;
    double* grad = nullptr;        // full parameter-shaped gradient
};

double FactoredPolicy::walk_arg(const Features& f, const ConstraintConfig& cfg, MutationOp op, std::size_t anchor,
                                double T, Walk& w) const
{
    const bool sampling = w.rng != nullptr;
    const auto n = static_cast<long long>(f.expr.size());
    long long budget = static_cast<long long>(cfg.max_operators);
    if (op != MutationOp::root_replace) budget -= n + 1;

    bool anchor_unary = false;
    double anchor_extent = 0.0;
    if (op != MutationOp::root_replace) {
        anchor_unary = f.nodes[anchor - 1][feat::n_unary_above] > 0.0;
        anchor_extent = static_cast<double>(f.expr.subtree_end(anchor - 1) - (anchor - 1)) / 60.0;
    }

    auto block = [&](BlockId id) {
        const Block& b = kLayout[id];
        return Factor{theta_.data() + b.offset, b.cols, static_cast<int>(b.rows), w.grad ? w.grad + b.offset : nullptr};
    };
    const Factor cat = block(category_block), un = block(unary_block), bin = block(binary_block),
                 leaf = block(leaf_block);
    static constexpr double stop_bias[3] = {kStopBias, 0.0, 0.0};

    struct Slot {
        int depth;
        int parent; // 0 none, 1 unary, 2 binary
        bool right;
        bool under_unary;
    };
    std::vector<Slot> stack{{0, 0, false, anchor_unary}};
    std::array<double, kArgInputs> x{};
    std::copy(f.state.begin(), f.state.end(), x.begin());
    x[kStateFeatures + static_cast<std::size_t>(op)] = 1.0;
    double* slot = x.data() + kStateFeatures + kNumMutationOps;

    bool leaf_allowed[kLeafSymbols];
    for (int j = 0; j < static_cast<int>(kLeafSymbols); ++j) leaf_allowed[j] = j >= kMaxVariables || j < f.d;
    static constexpr bool all_allowed[8] = {true, true, true, true, true, true, true, true};

    double lp = 0.0;
    long long emitted = 0;
    std::size_t gi = 0;
    while (!stack.empty()) {
        const Slot s = stack.back();
        stack.pop_back();
        const auto open = static_cast<long long>(stack.size());
        slot[0] = std::min(s.depth, 12) / 6.0;
        slot[1] = std::min<long long>(emitted, 24) / 12.0;
        slot[2] = std::min<long long>(open, 12) / 6.0;
        slot[3] = s.under_unary;
        slot[4] = static_cast<double>(std::max<long long>(budget - emitted, 0)) / 60.0;
        slot[5] = s.parent == 1;
        slot[6] = s.parent == 2;
        slot[7] = emitted == 0;
        slot[8] = s.right;
        slot[9] = anchor_extent;

        const bool cat_allowed[3] = {true, emitted + 2 + open <= budget, emitted + 3 + open <= budget};
        const Node* target = nullptr;
        int c = -1, sym = -1;
        if (!sampling) {
            if (gi >= w.given.size()) return kNegInf;
            target = &w.given[gi++];
            c = category_of(target->kind);
            if (c == leaf_cat) sym = target->kind == OpKind::constant ? kMaxVariables : target->var;
            else if (c == unary_cat) sym = static_cast<int>(target->kind) - static_cast<int>(OpKind::cos);
            else sym = static_cast<int>(target->kind);
        }
        lp += cat.pick(x.data(), cat_allowed, stop_bias, T, c, w.rng);
        if (lp == kNegInf) return kNegInf;

        Node node;
        if (c == leaf_cat) {
            lp += leaf.pick(x.data(), leaf_allowed, nullptr, T, sym, w.rng);
            if (sampling) {
                node = sym == kMaxVariables
                    ? Node::constant(round_to_tokens(std::normal_distribution<double>(0.0, 1.0)(*w.rng)))
                    : Node::variable(sym);
            }
        } else if (c == unary_cat) {
            lp += un.pick(x.data(), all_allowed, nullptr, T, sym, w.rng);
            node = Node::op(static_cast<OpKind>(static_cast<int>(OpKind::cos) + sym));
            stack.push_back({s.depth + 1, 1, false, true});
        } else {
            lp += bin.pick(x.data(), all_allowed, nullptr, T, sym, w.rng);
            node = Node::op(static_cast<OpKind>(sym));
            stack.push_back({s.depth + 1, 2, true, s.under_unary});
            stack.push_back({s.depth + 1, 2, false, s.under_unary});
        }
        if (lp == kNegInf) return kNegInf;
        if (sampling) w.out->push_back(node);
        ++emitted;
    }
    if (!sampling && gi != w.given.size()) return kNegInf;
    return lp;
}

std::vector<double> FactoredPolicy::anchor_probs(const Features& f, double T) const
{
    const std::size_t n = f.expr.size();
    std::vector<double> logits(n), p(n);
    const double* wa = theta_.data() + kLayout[anchor_block].offset;
    double mx = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        logits[i] = dot(wa, f.nodes[i].data(), kNodeFeatures) / T;
        mx = std::max(mx, logits[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (p[i] = std::exp(logits[i] - mx));
    for (auto& v : p) v /= s;
    return p;
}

std::array<double, kNumGrowthOps> FactoredPolicy::op_probs(const Features& f, std::size_t anchor, double T) const
{
    std::array<double, kOpInputs> x{};
    std::copy(f.nodes[anchor - 1].begin(), f.nodes[anchor - 1].end(), x.begin());
    std::copy(f.state.begin(), f.state.end(), x.begin() + kNodeFeatures);
    const Block& b = kLayout[op_block];
    double logits[kNumGrowthOps], logp[kNumGrowthOps];
    bool allowed[kNumGrowthOps];
    for (int r = 0; r < kNumGrowthOps; ++r) {
        logits[r] = dot(theta_.data() + b.offset + static_cast<std::size_t>(r) * b.cols, x.data(), b.cols) / T;
        allowed[r] = true;
    }
    log_softmax(logits, allowed, kNumGrowthOps, logp);
    std::array<double, kNumGrowthOps> p{};
    for (int r = 0; r < kNumGrowthOps; ++r) p[static_cast<std::size_t>(r)] = std::exp(logp[r]);
    return p;
}

namespace {

// Anchor factor: one shared weight vector scored against every node.
double anchor_pick(const double* wa, const Features& f, double T, std::size_t& anchor, Rng* rng, double* grad)
{
    const std::size_t n = f.expr.size();
    std::vector<double> logits(n);
    double mx = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        logits[i] = dot(wa, f.nodes[i].data(), kNodeFeatures) / T;
        mx = std::max(mx, logits[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(logits[i] - mx);
    const double lse = mx + std::log(s);
    if (rng) {
        double u = uniform01(*rng);
        anchor = n;
        for (std::size_t i = 0; i < n; ++i) {
            u -= std::exp(logits[i] - lse);
            if (u < 0.0) {
                anchor = i + 1;
                break;
            }
        }
    }
    if (anchor < 1 || anchor > n) return kNegInf;
    if (grad) {
        for (std::size_t i = 0; i < n; ++i) {
            const double coef = std::exp(logits[i] - lse) - (i + 1 == anchor ? 1.0 : 0.0);
            for (std::size_t c = 0; c < kNodeFeatures; ++c) grad[c] += coef * f.nodes[i][c];
        }
    }
    return logits[anchor - 1] - lse;
}

} // namespace

ScoredMutation FactoredPolicy::sample(const Features& f, const ConstraintConfig& cfg, double T, Rng& rng) const
{
    ScoredMutation out;
    Mutation& m = out.mutation;
    double lp = 0.0;
    if (f.expr.empty()) {
        m.anchor = 0;
        m.op = MutationOp::root_replace;
    } else {
        lp += anchor_pick(theta_.data() + kLayout[anchor_block].offset, f, T, m.anchor, &rng, nullptr);
        std::array<double, kOpInputs> x{};
        std::copy(f.nodes[m.anchor - 1].begin(), f.nodes[m.anchor - 1].end(), x.begin());
        std::copy(f.state.begin(), f.state.end(), x.begin() + kNodeFeatures);
        const Block& b = kLayout[op_block];
        const Factor op{theta_.data() + b.offset, b.cols, kNumGrowthOps, nullptr};
        static constexpr bool all[kNumGrowthOps] = {true, true, true, true, true, true, true, true,
                                                    true, true, true, true, true, true, true, true};
        int idx = -1;
        lp += op.pick(x.data(), all, nullptr, T, idx, &rng);
        m.op = growth_op(idx);
    }
    if (requires_arg(m.op)) {
        std::vector<Node> nodes;
        Walk w;
        w.rng = &rng;
        w.out = &nodes;
        lp += walk_arg(f, cfg, m.op, m.anchor, T, w);
        m.arg = Expression::from_prefix(std::move(nodes));
    }
    out.log_prob = lp;
    return out;
}

FactorLogProbs FactoredPolicy::factor_log_probs(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                                                double T) const
{
    FactorLogProbs lp;
    const bool empty = f.expr.empty();
    if (empty != (m.op == MutationOp::root_replace)) {
        lp.op = kNegInf;
        return lp;
    }
    if (requires_arg(m.op) != m.arg.has_value() || (m.arg && m.arg->empty())) {
        lp.arg = kNegInf;
        return lp;
    }
    if (!empty) {
        std::size_t anchor = m.anchor;
        lp.anchor = anchor_pick(theta_.data() + kLayout[anchor_block].offset, f, T, anchor, nullptr, nullptr);
        if (lp.anchor == kNegInf) return lp;
        lp.op = std::log(op_probs(f, anchor, T)[static_cast<std::size_t>(growth_index(m.op))]);
    }
    if (m.arg) {
        Walk w;
        w.given = m.arg->nodes();
        lp.arg = walk_arg(f, cfg, m.op, m.anchor, T, w);
    }
    return lp;
}

double FactoredPolicy::log_prob(const Features& f, const ConstraintConfig& cfg, const Mutation& m, double T) const
{
    return factor_log_probs(f, cfg, m, T).total();
}

double FactoredPolicy::accumulate_nll_gradient(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                                               std::span<double> grad) const
{
    // Score first so out-of-support items leave the gradient untouched.
    const double lp = log_prob(f, cfg, m, 1.0);
    if (lp == kNegInf) return std::numeric_limits<double>::infinity();
    if (!f.expr.empty()) {
        std::size_t anchor = m.anchor;
        anchor_pick(theta_.data() + kLayout[anchor_block].offset, f, 1.0, anchor, nullptr,
                    grad.data() + kLayout[anchor_block].offset);
        std::array<double, kOpInputs> x{};
        std::copy(f.nodes[anchor - 1].begin(), f.nodes[anchor - 1].end(), x.begin());
        std::copy(f.state.begin(), f.state.end(), x.begin() + kNodeFeatures);
        const Block& b = kLayout[op_block];
        const Factor op{theta_.data() + b.offset, b.cols, kNumGrowthOps, grad.data() + b.offset};
        static constexpr bool all[kNumGrowthOps] = {true, true, true, true, true, true, true, true,
                                                    true, true, true, true, true, true, true, true};
        int idx = growth_index(m.op);
        op.pick(x.data(), all, nullptr, 1.0, idx, nullptr);
    }
    if (m.arg) {
        Walk w;
        w.given = m.arg->nodes();
        w.grad = grad.data();
        walk_arg(f, cfg, m.op, m.anchor, 1.0, w);
    }
    return -lp;
}

// -- critic ----------------------------------------------------------------------

LinearCritic::LinearCritic() : w_(kStateFeatures, 0.0) {}

double LinearCritic::value(const Features& f) const
{
    const double z = dot(w_.data(), f.state.data(), kStateFeatures);
    return 1.0 / (1.0 + std::exp(-z));
}

// -- sampling ----------------------------------------------------------------------

SampleStats& SampleStats::operator+=(const SampleStats& o) noexcept
{
    raw += o.raw;
    malformed += o.malformed;
    constraint_too_large += o.constraint_too_large;
    constraint_nesting += o.constraint_nesting;
    duplicates += o.duplicates;
    return *this;
}

std::vector<SampledChild> sample_mutations(const MutationPolicy& policy, const Features& f,
                                           const ConstraintConfig& cfg, std::size_t k, double temperature,
                                           Rng& rng, SampleStats* stats)
{
    if (k < 1) throw std::invalid_argument("sample_mutations: K must be >= 1");
    if (!(temperature > 0.0)) throw std::invalid_argument("sample_mutations: temperature must be > 0");
    SampleStats local;
    std::vector<SampledChild> out;
    std::unordered_set<Expression, ExpressionHash> seen;
    const std::size_t attempts = 10 * k;
    for (std::size_t a = 0; a < attempts && out.size() < k; ++a) {
        ScoredMutation s = policy.sample(f, cfg, temperature, rng);
        ++local.raw;
        if (validate_mutation(f.expr, s.mutation) != MutationError::none) {
            ++local.malformed;
            continue;
        }
        Expression child = apply_unchecked(f.expr, s.mutation);
        const Violation v = check_constraints(child, cfg);
        if (v == Violation::too_large) {
            ++local.constraint_too_large;
            continue;
        }
        if (v == Violation::nesting) {
            ++local.constraint_nesting;
            continue;
        }
        if (v != Violation::none || child.max_variable() >= f.d) {
            ++local.malformed;
            continue;
        }
        if (!seen.insert(child).second) {
            ++local.duplicates;
            continue;
        }
        out.push_back({std::move(s), std::move(child)});
    }
    if (stats) *stats += local;
    if (out.empty()) throw PolicyExhausted("no valid mutation in " + std::to_string(attempts) + " draws");
    return out;
}

// -- training --------------------------------------------------------------------

double imitation_update(FactoredPolicy& policy, std::span<const ImitationItem> batch, double lr,
                        const ConstraintConfig& cfg)
{
    if (batch.empty()) throw std::invalid_argument("imitation_update: empty batch");
    std::vector<double> grad(FactoredPolicy::parameter_count(), 0.0);
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& item : batch) {
        const double nll = policy.accumulate_nll_gradient(*item.features, cfg, item.target, grad);
        if (!std::isfinite(nll)) continue;
        total += nll;
        ++used;
    }
    if (used == 0) return std::numeric_limits<double>::infinity();
    for (auto& g : grad) g /= static_cast<double>(used);
    policy.optimizer().apply(policy.parameters(), grad, lr);
    return total / static_cast<double>(used);
}

double mean_nll(const MutationPolicy& policy, std::span<const ImitationItem> batch, const ConstraintConfig& cfg)
{
    if (batch.empty()) throw std::invalid_argument("mean_nll: empty batch");
    double total = 0.0;
    for (const auto& item : batch) total -= policy.log_prob(*item.features, cfg, item.target, 1.0);
    return total / static_cast<double>(batch.size());
}

double critic_update(LinearCritic& critic, std::span<const CriticItem> batch, double lr)
{
    if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
    std::vector<double> grad(kStateFeatures, 0.0);
    double loss = 0.0;
    for (const auto& item : batch) {
        if (!(item.target >= 0.0 && item.target <= 1.0)) throw std::invalid_argument("critic target outside [0, 1]");
        const double v = critic.value(*item.features);
        const double e = v - item.target;
        loss += e * e;
        const double coef = 2.0 * e * v * (1.0 - v);
        for (std::size_t c = 0; c < kStateFeatures; ++c) grad[c] += coef * item.features->state[c];
    }
    const double n = static_cast<double>(batch.size());
    for (auto& g : grad) g /= n;
    critic.optimizer().apply(critic.parameters(), grad, lr);
    return loss / n;
}

// -- snapshots -------------------------------------------------------------------

ModelSnapshot ModelSnapshot::initial()
{
    return {0, std::make_shared<const FactoredPolicy>(), std::make_shared<const LinearCritic>()};
}

void save_snapshot(const ModelSnapshot& s, const std::filesystem::path& path)
{
    nlohmann::json arrays = nlohmann::json::object();
    const auto& theta = s.policy->parameters();
    for (const auto& b : FactoredPolicy::layout()) {
        const auto first = theta.begin() + static_cast<std::ptrdiff_t>(b.offset);
        arrays[std::string("policy.") + b.name] =
            std::vector<double>(first, first + static_cast<std::ptrdiff_t>(b.rows * b.cols));
    }
    arrays["critic.w"] = s.critic->parameters();
    const nlohmann::json j{{"version", s.version}, {"arrays", arrays}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump() << '\n';
}

ModelSnapshot load_snapshot(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const auto j = nlohmann::json::parse(in);
    auto policy = std::make_shared<FactoredPolicy>();
    auto critic = std::make_shared<LinearCritic>();
    const auto& arrays = j.at("arrays");
    for (const auto& b : FactoredPolicy::layout()) {
        const auto v = arrays.at(std::string("policy.") + b.name).get<std::vector<double>>();
        if (v.size() != b.rows * b.cols) throw std::runtime_error(std::string("snapshot array size mismatch: ") + b.name);
        std::copy(v.begin(), v.end(), policy->parameters().begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
    const auto w = arrays.at("critic.w").get<std::vector<double>>();
    if (w.size() != kStateFeatures) throw std::runtime_error("snapshot array size mismatch: critic.w");
    critic->parameters() = w;
    return {j.at("version").get<std::uint64_t>(), std::move(policy), std::move(critic)};
}

} // namespace srmcts
