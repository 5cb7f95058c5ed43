#pragma once

// Mutation grammar: <anchor, op, B> triplets that grow an expression, and the
// dismantling procedure that turns a target expression into an imitation trace.

#include "srmcts/expr.hpp"
#include "srmcts/rng.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace srmcts {

enum class MutationOp : std::uint8_t {
    wrap_cos, wrap_sin, wrap_tan, wrap_exp, wrap_log, wrap_sqrt, wrap_inv, wrap_square,
    root_replace,
    add_right, sub_right, mul_right, div_right,
    add_left, sub_left, mul_left, div_left,
};

inline constexpr int kNumMutationOps = 17;
/// Ops legal on a non-empty expression: everything except root_replace.
inline constexpr int kNumGrowthOps = 16;

constexpr bool is_wrap(MutationOp op) noexcept { return op < MutationOp::root_replace; }
constexpr bool requires_arg(MutationOp op) noexcept { return !is_wrap(op); }
constexpr bool is_left_variant(MutationOp op) noexcept { return op >= MutationOp::add_left; }

/// Unary operator inserted by a wrap op.
OpKind wrapped_kind(MutationOp op) noexcept;
/// Binary operator inserted by an *_left / *_right op.
OpKind inserted_kind(MutationOp op) noexcept;
MutationOp wrap_op(OpKind unary) noexcept;
MutationOp binary_op(OpKind binary, bool left) noexcept;

std::string_view mutation_op_name(MutationOp op) noexcept;
std::optional<MutationOp> mutation_op_from_name(std::string_view name) noexcept;

/// Index in [0, kNumGrowthOps) for the 16 growth ops, skipping root_replace.
int growth_index(MutationOp op) noexcept;
MutationOp growth_op(int index) noexcept;

struct Mutation {
    std::size_t anchor = 0; // 1-based pre-order node index; ignored by root_replace
    MutationOp op = MutationOp::root_replace;
    std::optional<Expression> arg;

    friend bool operator==(const Mutation&, const Mutation&) = default;
};

enum class MutationError {
    none,
    bad_index,
    missing_arg,
    extra_arg,
    empty_arg,
    root_replace_on_nonempty,
    growth_on_empty,
};

std::string_view to_string(MutationError e) noexcept;

MutationError validate_mutation(const Expression& expr, const Mutation& m) noexcept;

/// Applies a validated mutation without checking size/nesting constraints.
/// Throws InvalidMutation when validation fails.
Expression apply_unchecked(const Expression& expr, const Mutation& m);

/// Throws InvalidMutation or ConstraintViolation.
Expression apply_mutation(const Expression& expr, const Mutation& m, const ConstraintConfig& cfg = {});

struct TraceStep {
    Expression state; // expression the mutation is applied to
    Mutation mutation;
};

struct MutationTrace {
    std::vector<TraceStep> steps;
    Expression target;
};

/// Goal value meaning "emit the whole target in one root_replace".
inline constexpr std::size_t kUnboundedGoal = std::numeric_limits<std::size_t>::max();

/// Removes nodes from `target` until nothing is left and returns the reverse
/// sequence. Each removal takes the smallest argument subtree of at least
/// `goal` nodes (the largest available if none is that big), uniformly among
/// nodes offering it; once the remainder has fewer than `goal` nodes it
/// becomes a single root_replace. A unary removal counts as size 1.
MutationTrace dismantle(const Expression& target, std::size_t goal, Rng& rng);

/// Folds the trace's mutations from the empty expression. Throws InvalidMutation
/// on a corrupt trace.
Expression replay(const MutationTrace& trace, const ConstraintConfig& cfg = {});

} // namespace srmcts
