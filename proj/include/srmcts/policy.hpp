#pragma once

// Mutation policy and critic.
//
// FactoredPolicy is a linear-softmax stand-in for a sequence model:
//   P(m | s) = P(anchor | s) * P(op | s, anchor) * P(B | s, op)
// where B is produced by a pre-order grammar. At each B slot a category
// {leaf, unary, binary} is drawn (the leaf logit carries a fixed stop bias, so
// zero weights give geometric sizes), then a symbol within the category.
// Variables >= d are masked, and operators are masked once the size budget
// left by max_operators could no longer be met. Constant leaves draw their
// value from N(0, 1) at token precision; the value is not part of log_prob.

#include "srmcts/features.hpp"
#include "srmcts/mutation.hpp"
#include "srmcts/rng.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace srmcts {

struct ScoredMutation {
    Mutation mutation;
    double log_prob = 0.0;
};

class MutationPolicy {
public:
    virtual ~MutationPolicy() = default;
    /// One raw draw. May violate constraints; sample_mutations filters.
    virtual ScoredMutation sample(const Features& f, const ConstraintConfig& cfg, double temperature,
                                  Rng& rng) const = 0;
    /// log P(m | state) at the given temperature; -inf outside the support.
    virtual double log_prob(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                            double temperature = 1.0) const = 0;
};

class Critic {
public:
    virtual ~Critic() = default;
    /// In [0, 1].
    virtual double value(const Features& f) const = 0;
    /// False lets callers skip featurizing states just for this critic.
    virtual bool needs_features() const { return true; }
};

class ConstantCritic final : public Critic {
public:
    explicit ConstantCritic(double v = 0.5) : v_(v) {}
    double value(const Features&) const override { return v_; }
    bool needs_features() const override { return false; }

private:
    double v_;
};

struct AdamState {
    std::vector<double> m, v;
    std::uint64_t step = 0;

    void resize(std::size_t n) { m.assign(n, 0.0); v.assign(n, 0.0); step = 0; }
    /// theta -= lr * adam(grad)
    void apply(std::vector<double>& theta, std::span<const double> grad, double lr);
};

struct FactorLogProbs {
    double anchor = 0.0;
    double op = 0.0;
    double arg = 0.0;
    double total() const noexcept { return anchor + op + arg; }
};

class FactoredPolicy final : public MutationPolicy {
public:
    // Slot inputs of the B grammar: state | op one-hot | slot descriptors.
    static constexpr std::size_t kSlotFeatures = 10;
    static constexpr std::size_t kOpInputs = kNodeFeatures + kStateFeatures;
    static constexpr std::size_t kArgInputs = kStateFeatures + kNumMutationOps + kSlotFeatures;
    static constexpr std::size_t kLeafSymbols = kMaxVariables + 1; // x0..x9, constant
    static constexpr double kStopBias = 1.0;

    struct Block {
        const char* name;
        std::size_t rows, cols, offset;
    };
    enum BlockId { anchor_block, op_block, category_block, unary_block, binary_block, leaf_block, kNumBlocks };

    /// Zero weights: the uniform policy.
    FactoredPolicy();
    static FactoredPolicy random(Rng& rng, double scale);

    ScoredMutation sample(const Features& f, const ConstraintConfig& cfg, double temperature, Rng& rng) const override;
    double log_prob(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                    double temperature = 1.0) const override;
    FactorLogProbs factor_log_probs(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                                    double temperature = 1.0) const;

    /// Anchor distribution over the 1..n nodes (empty for the empty expression).
    std::vector<double> anchor_probs(const Features& f, double temperature = 1.0) const;
    /// Distribution over the 16 growth ops at `anchor` (indexed by growth_index).
    std::array<double, kNumGrowthOps> op_probs(const Features& f, std::size_t anchor, double temperature = 1.0) const;

    /// Adds d(-log P(m))/d(theta) at temperature 1 into `grad`; returns -log P(m).
    double accumulate_nll_gradient(const Features& f, const ConstraintConfig& cfg, const Mutation& m,
                                   std::span<double> grad) const;

    std::vector<double>& parameters() noexcept { return theta_; }
    const std::vector<double>& parameters() const noexcept { return theta_; }
    AdamState& optimizer() noexcept { return adam_; }
    static const std::array<Block, kNumBlocks>& layout();
    static std::size_t parameter_count();

private:
    struct Walk;
    double walk_arg(const Features& f, const ConstraintConfig& cfg, MutationOp op, std::size_t anchor,
                    double temperature, Walk& w) const;

    std::vector<double> theta_;
    AdamState adam_;
};

class LinearCritic final : public Critic {
public:
    LinearCritic();
    double value(const Features& f) const override;

    std::vector<double>& parameters() noexcept { return w_; }
    const std::vector<double>& parameters() const noexcept { return w_; }
    AdamState& optimizer() noexcept { return adam_; }

private:
    std::vector<double> w_;
    AdamState adam_;
};

// -- sampling with validity accounting ---------------------------------------------

struct SampleStats {
    std::size_t raw = 0;
    std::size_t malformed = 0;
    std::size_t constraint_too_large = 0;
    std::size_t constraint_nesting = 0;
    std::size_t duplicates = 0;

    std::size_t constraint_rejections() const noexcept { return constraint_too_large + constraint_nesting; }
    SampleStats& operator+=(const SampleStats& o) noexcept;
};

struct SampledChild {
    ScoredMutation mutation;
    Expression child;
};

/// Up to K distinct valid children from at most 10*K raw draws.
/// Throws PolicyExhausted when none of the draws is valid.
std::vector<SampledChild> sample_mutations(const MutationPolicy& policy, const Features& f,
                                           const ConstraintConfig& cfg, std::size_t k, double temperature,
                                           Rng& rng, SampleStats* stats = nullptr);

// -- training --------------------------------------------------------------------

struct ImitationItem {
    std::shared_ptr<const Features> features; // of the state the mutation applies to
    Mutation target;
};

struct CriticItem {
    std::shared_ptr<const Features> features;
    double target = 0.0;
};

/// One Adam step on the mean NLL; returns the pre-step mean NLL.
/// Items whose target lies outside the policy support are skipped.
double imitation_update(FactoredPolicy& policy, std::span<const ImitationItem> batch, double learning_rate,
                        const ConstraintConfig& cfg = {});
/// Mean NLL without updating; items outside the support count as +inf.
double mean_nll(const MutationPolicy& policy, std::span<const ImitationItem> batch, const ConstraintConfig& cfg = {});

/// One Adam step on mean squared error; returns the pre-step loss.
/// Throws std::invalid_argument on an empty batch or a target outside [0, 1].
double critic_update(LinearCritic& critic, std::span<const CriticItem> batch, double learning_rate);

// -- snapshots -------------------------------------------------------------------

struct ModelSnapshot {
    std::uint64_t version = 0;
    std::shared_ptr<const FactoredPolicy> policy;
    std::shared_ptr<const LinearCritic> critic;

    static ModelSnapshot initial();
};

/// JSON object {"version": n, "arrays": {name: [reals...]}}.
void save_snapshot(const ModelSnapshot& s, const std::filesystem::path& path);
ModelSnapshot load_snapshot(const std::filesystem::path& path);

} // namespace srmcts
