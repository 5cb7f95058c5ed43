#pragma once

// Expression intermediate representation.
//
// An Expression is an immutable tree stored as its pre-order (Polish) node
// sequence. The empty sequence is the empty expression, the root of every
// search. Node numbering is 1-based pre-order: the root is node 1.

#include "srmcts/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srmcts {

enum class OpKind : std::uint8_t {
    add, sub, mul, div,
    cos, sin, tan, exp, log, sqrt, inv, square,
    variable, constant,
};

inline constexpr int kMaxVariables = 10;
inline constexpr int kNumOpKinds = 14;
inline constexpr double kOverflowLimit = 1e30;

constexpr int arity(OpKind k) noexcept
{
    switch (k) {
    case OpKind::add: case OpKind::sub: case OpKind::mul: case OpKind::div: return 2;
    case OpKind::variable: case OpKind::constant: return 0;
    default: return 1;
    }
}
constexpr bool is_binary(OpKind k) noexcept { return arity(k) == 2; }
constexpr bool is_unary(OpKind k) noexcept { return arity(k) == 1; }
constexpr bool is_leaf(OpKind k) noexcept { return arity(k) == 0; }

std::string_view op_name(OpKind k) noexcept;
std::optional<OpKind> op_from_name(std::string_view name) noexcept;

struct Node {
    OpKind kind = OpKind::constant;
    std::uint8_t var = 0;
    double value = 0.0;

    static Node op(OpKind k) noexcept { return {k, 0, 0.0}; }
    static Node variable(int index) noexcept { return {OpKind::variable, static_cast<std::uint8_t>(index), 0.0}; }
    static Node constant(double v) noexcept { return {OpKind::constant, 0, v}; }

    friend bool operator==(const Node&, const Node&) = default;
};

class Expression {
public:
    Expression() = default;

    /// Takes a pre-order node sequence; throws ParseError unless it is exactly one tree.
    static Expression from_prefix(std::vector<Node> nodes);

    static Expression variable(int index);
    static Expression constant(double value);
    static Expression unary(OpKind kind, const Expression& child);
    static Expression binary(OpKind kind, const Expression& left, const Expression& right);

    bool empty() const noexcept { return nodes_.empty(); }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::span<const Node> nodes() const noexcept { return nodes_; }

    /// One past the last pre-order position of the subtree rooted at `pos` (0-based).
    std::size_t subtree_end(std::size_t pos) const noexcept;

    /// Copy of the subtree rooted at pre-order position `pos` (0-based).
    Expression subtree(std::size_t pos) const;

    /// Depth in edges; a single leaf has depth 0, the empty expression -1.
    int depth() const noexcept;

    /// Largest variable index, or -1 when no variable appears.
    int max_variable() const noexcept;

    std::size_t hash() const noexcept;

    friend bool operator==(const Expression&, const Expression&) = default;

private:
    explicit Expression(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    std::vector<Node> nodes_;
};

struct ExpressionHash {
    std::size_t operator()(const Expression& e) const noexcept { return e.hash(); }
};

// -- text ---------------------------------------------------------------------

enum class ConstantFormat { decimal, triplet };

Expression parse_prefix(std::span<const std::string> tokens);
/// Whitespace-separated prefix tokens, e.g. "add x0 mul 3.0 x1".
Expression parse_prefix(std::string_view text);

std::vector<std::string> to_prefix(const Expression& expr, ConstantFormat format = ConstantFormat::decimal);
std::string to_prefix_string(const Expression& expr);
std::string to_infix(const Expression& expr);

/// Shortest round-trip decimal, always with a '.' or exponent ("3.0", "1e+30").
std::string format_constant(double value);

// -- evaluation ---------------------------------------------------------------

enum class InvalidReason { domain_error, overflow, non_finite };
std::string_view to_string(InvalidReason r) noexcept;

struct EvalOutcome {
    std::vector<double> values;
    std::optional<InvalidReason> invalid;

    bool valid() const noexcept { return !invalid.has_value(); }

    static EvalOutcome failure(InvalidReason r) { return {{}, r}; }
};

/// Column-wise evaluation over every row of X. Numeric failure of any row
/// (log/sqrt domain, zero denominators, |v| > 1e30, NaN) makes the whole
/// outcome Invalid. Throws DimensionError if a variable index >= X.cols().
EvalOutcome evaluate(const Expression& expr, const Matrix& X);

// -- measurement and rewriting --------------------------------------------------

inline std::size_t size(const Expression& expr) noexcept { return expr.size(); }

/// Fixed bottom-up rewrite system: constant folding, identity and annihilator
/// removal, inv(inv(a)) -> a, square(sqrt(a)) -> a. Idempotent, never grows.
Expression simplify(const Expression& expr);

/// Node at 1-based pre-order `index`; throws IndexError outside [1, size].
const Node& node_at(const Expression& expr, std::size_t index);

// -- constraints ---------------------------------------------------------------

struct ConstraintConfig {
    std::size_t max_operators = 60;
};

enum class Violation { none, too_large, nesting, bad_variable };
std::string_view to_string(Violation v) noexcept;

/// too_large when size > max_operators; nesting when a unary operator has another
/// unary operator anywhere below it (only add/sub/mul/div may nest freely).
Violation check_constraints(const Expression& expr, const ConstraintConfig& cfg = {});

} // namespace srmcts
