#include "srmcts/mutation.hpp"

#include "srmcts/errors.hpp"

#include <algorithm>
#include <array>

namespace srmcts {

namespace {

constexpr std::array<std::string_view, kNumMutationOps> kNames{
    "wrap_cos", "wrap_sin", "wrap_tan", "wrap_exp", "wrap_log", "wrap_sqrt", "wrap_inv", "wrap_square",
    "root_replace",
    "add_right", "sub_right", "mul_right", "div_right",
    "add_left", "sub_left", "mul_left", "div_left",
};

} // namespace

OpKind wrapped_kind(MutationOp op) noexcept
{
    return static_cast<OpKind>(static_cast<int>(OpKind::cos) + static_cast<int>(op));
}

OpKind inserted_kind(MutationOp op) noexcept
{
    const int base = static_cast<int>(is_left_variant(op) ? MutationOp::add_left : MutationOp::add_right);
    return static_cast<OpKind>(static_cast<int>(op) - base);
}

MutationOp wrap_op(OpKind unary) noexcept
{
    return static_cast<MutationOp>(static_cast<int>(unary) - static_cast<int>(OpKind::cos));
}

MutationOp binary_op(OpKind binary, bool left) noexcept
{
    const int base = static_cast<int>(left ? MutationOp::add_left : MutationOp::add_right);
    return static_cast<MutationOp>(base + static_cast<int>(binary));
}

std::string_view mutation_op_name(MutationOp op) noexcept { return kNames[static_cast<std::size_t>(op)]; }

std::optional<MutationOp> mutation_op_from_name(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<MutationOp>(i);
    return std::nullopt;
}

int growth_index(MutationOp op) noexcept
{
    const int i = static_cast<int>(op);
    return i < static_cast<int>(MutationOp::root_replace) ? i : i - 1;
}

MutationOp growth_op(int index) noexcept
{
    return static_cast<MutationOp>(index < static_cast<int>(MutationOp::root_replace) ? index : index + 1);
}

std::string_view to_string(MutationError e) noexcept
{
    switch (e) {
    case MutationError::none: return "ok";
    case MutationError::bad_index: return "bad_index";
    case MutationError::missing_arg: return "missing_arg";
    case MutationError::extra_arg: return "extra_arg";
    case MutationError::empty_arg: return "empty_arg";
    case MutationError::root_replace_on_nonempty: return "root_replace_on_nonempty";
    case MutationError::growth_on_empty: return "growth_on_empty";
    }
    return "?";
}

MutationError validate_mutation(const Expression& expr, const Mutation& m) noexcept
{
    if (m.op == MutationOp::root_replace) {
        if (!expr.empty()) return MutationError::root_replace_on_nonempty;
    } else {
        if (expr.empty()) return MutationError::growth_on_empty;
        if (m.anchor < 1 || m.anchor > expr.size()) return MutationError::bad_index;
    }
    if (requires_arg(m.op)) {
        if (!m.arg) return MutationError::missing_arg;
        if (m.arg->empty()) return MutationError::empty_arg;
    } else if (m.arg) {
        return MutationError::extra_arg;
    }
    return MutationError::none;
}

Expression apply_unchecked(const Expression& expr, const Mutation& m)
{
    if (const auto err = validate_mutation(expr, m); err != MutationError::none)
        throw InvalidMutation(std::string(to_string(err)));
    if (m.op == MutationOp::root_replace) return *m.arg;

    const auto nodes = expr.nodes();
    const std::size_t begin = m.anchor - 1;
    const std::size_t end = expr.subtree_end(begin);
    std::vector<Node> out;
    out.reserve(expr.size() + 1 + (m.arg ? m.arg->size() : 0));
    out.insert(out.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(begin));
    const auto a_first = nodes.begin() + static_cast<std::ptrdiff_t>(begin);
    const auto a_last = nodes.begin() + static_cast<std::ptrdiff_t>(end);
    if (is_wrap(m.op)) {
        out.push_back(Node::op(wrapped_kind(m.op)));
        out.insert(out.end(), a_first, a_last);
    } else {
        out.push_back(Node::op(inserted_kind(m.op)));
        const auto b = m.arg->nodes();
        if (is_left_variant(m.op)) {
            out.insert(out.end(), b.begin(), b.end());
            out.insert(out.end(), a_first, a_last);
        } else {
            out.insert(out.end(), a_first, a_last);
            out.insert(out.end(), b.begin(), b.end());
        }
    }
    out.insert(out.end(), a_last, nodes.end());
    return Expression::from_prefix(std::move(out));
}

Expression apply_mutation(const Expression& expr, const Mutation& m, const ConstraintConfig& cfg)
{
    Expression result = apply_unchecked(expr, m);
    if (const auto v = check_constraints(result, cfg); v != Violation::none)
        throw ConstraintViolation(std::string(to_string(v)));
    return result;
}

// -- dismantling -------------------------------------------------------------------

namespace {

struct Removal {
    std::size_t pos;      // 0-based node being removed
    bool arg_is_right;    // binary only
    std::size_t arg_size; // |B|, or 1 for a unary node
};

std::vector<Removal> removals_at(const Expression& e, std::size_t pos)
{
    const Node& n = e.nodes()[pos];
    if (is_unary(n.kind)) return {{pos, false, 1}};
    if (!is_binary(n.kind)) return {};
    const std::size_t mid = e.subtree_end(pos + 1);
    const std::size_t end = e.subtree_end(mid);
    return {{pos, true, end - mid}, {pos, false, mid - pos - 1}};
}

TraceStep undo(const Expression& e, const Removal& r)
{
    const auto nodes = e.nodes();
    const OpKind kind = nodes[r.pos].kind;
    const std::size_t end = e.subtree_end(r.pos);
    std::vector<Node> reduced(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(r.pos));
    Mutation m;
    m.anchor = r.pos + 1;
    auto append = [&](std::size_t from, std::size_t to) {
        reduced.insert(reduced.end(), nodes.begin() + static_cast<std::ptrdiff_t>(from),
                       nodes.begin() + static_cast<std::ptrdiff_t>(to));
    };
    if (is_unary(kind)) {
        append(r.pos + 1, end);
        m.op = wrap_op(kind);
    } else {
        const std::size_t mid = e.subtree_end(r.pos + 1);
        if (r.arg_is_right) {
            append(r.pos + 1, mid);
            m.arg = e.subtree(mid);
        } else {
            append(mid, end);
            m.arg = e.subtree(r.pos + 1);
        }
        m.op = binary_op(kind, !r.arg_is_right);
    }
    append(end, nodes.size());
    return {Expression::from_prefix(std::move(reduced)), std::move(m)};
}

} // namespace

MutationTrace dismantle(const Expression& target, std::size_t goal, Rng& rng)
{
    if (target.empty()) throw std::invalid_argument("cannot dismantle the empty expression");
    goal = std::max<std::size_t>(goal, 1);

    MutationTrace trace;
    trace.target = target;
    std::vector<TraceStep> backward;
    Expression current = target;

    while (current.size() >= goal) {
        std::vector<std::vector<Removal>> per_node;
        std::size_t best = 0;
        for (std::size_t p = 0; p < current.size(); ++p) {
            auto opts = removals_at(current, p);
            for (const auto& r : opts) best = std::max(best, r.arg_size);
            if (!opts.empty()) per_node.push_back(std::move(opts));
        }
        if (per_node.empty()) break; // single leaf
        // Tightest fit: the smallest argument size that still reaches the goal.
        const std::size_t threshold = std::min(goal, best);
        std::size_t fit = best;
        for (const auto& opts : per_node)
            for (const auto& r : opts)
                if (r.arg_size >= threshold) fit = std::min(fit, r.arg_size);

        std::vector<std::vector<Removal>> eligible;
        for (auto& opts : per_node) {
            std::vector<Removal> keep;
            for (const auto& r : opts)
                if (r.arg_size == fit) keep.push_back(r);
            if (!keep.empty()) eligible.push_back(std::move(keep));
        }
        const auto& chosen_node = eligible[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1))];
        const Removal& chosen = chosen_node[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(chosen_node.size()) - 1))];

        TraceStep step = undo(current, chosen);
        current = step.state;
        backward.push_back(std::move(step));
    }

    backward.push_back({Expression{}, Mutation{0, MutationOp::root_replace, current}});
    trace.steps.assign(backward.rbegin(), backward.rend());
    return trace;
}

Expression replay(const MutationTrace& trace, const ConstraintConfig& cfg)
{
    if (trace.steps.empty()) throw InvalidMutation("empty trace");
    Expression e;
    for (const auto& step : trace.steps) {
        if (step.state != e) throw InvalidMutation("trace state does not match replay");
        e = apply_mutation(e, step.mutation, cfg);
    }
    return e;
}

} // namespace srmcts
