#include "srmcts/expr.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/float_tokens.hpp"
#include "srmcts/kernels.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>

namespace srmcts {

namespace {

constexpr std::array<std::string_view, kNumOpKinds> kOpNames{
    "add", "sub", "mul", "div", "cos", "sin", "tan", "exp",
    "log", "sqrt", "inv", "square", "var", "const",
};

std::vector<std::string> split_ws(std::string_view text)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) out.push_back(std::move(tok));
    return out;
}

std::optional<int> parse_variable(const std::string& tok)
{
    if (tok.size() < 2 || tok[0] != 'x') return std::nullopt;
    int idx = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), idx);
    if (ec != std::errc{} || p != tok.data() + tok.size()) return std::nullopt;
    return idx;
}

std::optional<double> parse_decimal(const std::string& tok)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

std::string_view op_name(OpKind k) noexcept { return kOpNames[static_cast<std::size_t>(k)]; }

std::optional<OpKind> op_from_name(std::string_view name) noexcept
{
    for (int i = 0; i < 12; ++i)
        if (kOpNames[static_cast<std::size_t>(i)] == name) return static_cast<OpKind>(i);
    return std::nullopt;
}

// -- Expression -----------------------------------------------------------------

Expression Expression::from_prefix(std::vector<Node> nodes)
{
    std::size_t need = 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (need == 0) throw ParseError(i, "excess tokens");
        if (nodes[i].kind == OpKind::variable && nodes[i].var >= kMaxVariables)
            throw ParseError(i, "variable index >= 10");
        need += static_cast<std::size_t>(arity(nodes[i].kind));
        need -= 1;
    }
    if (!nodes.empty() && need != 0) throw ParseError(nodes.size(), "truncated");
    return Expression(std::move(nodes));
}

Expression Expression::variable(int index)
{
    if (index < 0 || index >= kMaxVariables) throw ParseError(0, "variable index >= 10");
    return Expression({Node::variable(index)});
}

Expression Expression::constant(double value) { return Expression({Node::constant(value)}); }

Expression Expression::unary(OpKind kind, const Expression& child)
{
    std::vector<Node> n;
    n.reserve(child.size() + 1);
    n.push_back(Node::op(kind));
    n.insert(n.end(), child.nodes_.begin(), child.nodes_.end());
    return from_prefix(std::move(n));
}

Expression Expression::binary(OpKind kind, const Expression& left, const Expression& right)
{
    std::vector<Node> n;
    n.reserve(left.size() + right.size() + 1);
    n.push_back(Node::op(kind));
    n.insert(n.end(), left.nodes_.begin(), left.nodes_.end());
    n.insert(n.end(), right.nodes_.begin(), right.nodes_.end());
    return from_prefix(std::move(n));
}

std::size_t Expression::subtree_end(std::size_t pos) const noexcept
{
    std::size_t need = 1;
    std::size_t i = pos;
    while (need > 0 && i < nodes_.size()) {
        need += static_cast<std::size_t>(arity(nodes_[i].kind));
        need -= 1;
        ++i;
    }
    return i;
}

Expression Expression::subtree(std::size_t pos) const
{
    const std::size_t end = subtree_end(pos);
    return Expression(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(pos),
                                        nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

int Expression::depth() const noexcept
{
    if (nodes_.empty()) return -1;
    // Stack of remaining child slots per open node.
    std::vector<int> open;
    int best = 0;
    for (const Node& n : nodes_) {
        const int d = static_cast<int>(open.size());
        best = std::max(best, d);
        if (!open.empty()) --open.back();
        if (arity(n.kind) > 0) open.push_back(arity(n.kind));
        while (!open.empty() && open.back() == 0) open.pop_back();
    }
    return best;
}

int Expression::max_variable() const noexcept
{
    int m = -1;
    for (const Node& n : nodes_)
        if (n.kind == OpKind::variable) m = std::max(m, static_cast<int>(n.var));
    return m;
}

std::size_t Expression::hash() const noexcept
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    for (const Node& n : nodes_) {
        mix(static_cast<std::uint64_t>(n.kind));
        if (n.kind == OpKind::variable) mix(n.var);
        if (n.kind == OpKind::constant) mix(std::bit_cast<std::uint64_t>(n.value));
    }
    return static_cast<std::size_t>(h);
}

// -- text -------------------------------------------------------------------------

Expression parse_prefix(std::span<const std::string> tokens)
{
    std::vector<Node> nodes;
    std::size_t need = 1;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (need == 0) throw ParseError(i, "excess tokens");
        const std::string& tok = tokens[i];
        Node node;
        std::size_t consumed = 1;
        if (auto op = op_from_name(tok)) {
            node = Node::op(*op);
        } else if (auto var = parse_variable(tok)) {
            if (*var >= kMaxVariables) throw ParseError(i, "variable index >= 10");
            node = Node::variable(*var);
        } else if (is_sign_token(tok)) {
            auto v = decode_float(tokens.subspan(i));
            if (!v) throw ParseError(i, "malformed constant triplet");
            node = Node::constant(*v);
            consumed = 3;
        } else if (auto v = parse_decimal(tok)) {
            node = Node::constant(*v);
        } else {
            throw ParseError(i, "unknown token '" + tok + "'");
        }
        nodes.push_back(node);
        need += static_cast<std::size_t>(arity(node.kind));
        need -= 1;
        i += consumed;
    }
    if (tokens.empty()) throw ParseError(0, "truncated");
    if (need != 0) throw ParseError(tokens.size(), "truncated");
    return Expression::from_prefix(std::move(nodes));
}

Expression parse_prefix(std::string_view text)
{
    const auto tokens = split_ws(text);
    return parse_prefix(std::span<const std::string>(tokens));
}

std::string format_constant(double value)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
    std::string s(buf, p);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::vector<std::string> to_prefix(const Expression& expr, ConstantFormat format)
{
    std::vector<std::string> out;
    out.reserve(expr.size());
    for (const Node& n : expr.nodes()) {
        switch (n.kind) {
        case OpKind::variable:
            out.push_back("x" + std::to_string(n.var));
            break;
        case OpKind::constant:
            if (format == ConstantFormat::decimal) {
                out.push_back(format_constant(n.value));
            } else {
                for (auto& t : encode_float(n.value)) out.push_back(std::move(t));
            }
            break;
        default:
            out.emplace_back(op_name(n.kind));
        }
    }
    return out;
}

std::string to_prefix_string(const Expression& expr)
{
    std::string s;
    for (const auto& t : to_prefix(expr)) {
        if (!s.empty()) s += ' ';
        s += t;
    }
    return s;
}

namespace {

std::string infix_at(const Expression& e, std::size_t pos)
{
    const Node& n = e.nodes()[pos];
    switch (n.kind) {
    case OpKind::variable: return "x" + std::to_string(n.var);
    case OpKind::constant: return format_constant(n.value);
    default: break;
    }
    if (is_binary(n.kind)) {
        const std::size_t r = e.subtree_end(pos + 1);
        static constexpr std::array<const char*, 4> sym{" + ", " - ", " * ", " / "};
        return "(" + infix_at(e, pos + 1) + sym[static_cast<std::size_t>(n.kind)] + infix_at(e, r) + ")";
    }
    const std::string a = infix_at(e, pos + 1);
    switch (n.kind) {
    case OpKind::inv: return "(" + a + ")^-1";
    case OpKind::square: return "(" + a + ")^2";
    default: return std::string(op_name(n.kind)) + "(" + a + ")";
    }
}

} // namespace

std::string to_infix(const Expression& expr)
{
    if (expr.empty()) return "<empty>";
    return infix_at(expr, 0);
}

std::string_view to_string(InvalidReason r) noexcept
{
    switch (r) {
    case InvalidReason::domain_error: return "domain_error";
    case InvalidReason::overflow: return "overflow";
    case InvalidReason::non_finite: return "non_finite";
    }
    return "?";
}

// -- evaluation -------------------------------------------------------------------

namespace {

class BufferPool {
public:
    int acquire(std::size_t n)
    {
        if (!free_.empty()) {
            const int id = free_.back();
            free_.pop_back();
            bufs_[static_cast<std::size_t>(id)].resize(n);
            return id;
        }
        bufs_.emplace_back(n);
        return static_cast<int>(bufs_.size() - 1);
    }
    void release(int id)
    {
        if (id >= 0) free_.push_back(id);
    }
    double* data(int id) { return bufs_[static_cast<std::size_t>(id)].data(); }
    void reset()
    {
        free_.clear();
        for (std::size_t i = 0; i < bufs_.size(); ++i) free_.push_back(static_cast<int>(i));
    }

private:
    std::vector<std::vector<double>> bufs_;
    std::vector<int> free_;
};

struct Operand {
    const double* data;
    int buf; // -1 when borrowed from X
};

InvalidReason classify(const double* v, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (std::isnan(v[i])) return InvalidReason::non_finite;
    return InvalidReason::overflow;
}

template <typename F>
void map_unary(const double* a, double* out, std::size_t n, F f)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i]);
}

} // namespace

EvalOutcome evaluate(const Expression& expr, const Matrix& X)
{
    if (expr.empty()) throw std::invalid_argument("cannot evaluate the empty expression");
    const int maxvar = expr.max_variable();
    if (maxvar >= static_cast<int>(X.cols()))
        throw DimensionError("variable x" + std::to_string(maxvar) + " but data has " +
                             std::to_string(X.cols()) + " columns");

    const auto& k = kernels::active();
    const std::size_t n = X.rows();
    thread_local BufferPool pool;
    pool.reset();

    std::vector<Operand> stack;
    stack.reserve(expr.size());
    const auto nodes = expr.nodes();

    auto fresh = [&](const Operand& a) -> Operand {
        if (a.buf >= 0) return a;
        const int id = pool.acquire(n);
        return {pool.data(id), id};
    };

    for (std::size_t p = nodes.size(); p-- > 0;) {
        const Node& node = nodes[p];
        if (node.kind == OpKind::variable) {
            const double* col = X.col(node.var).data();
            if (!k.all_bounded(col, n, kOverflowLimit)) return EvalOutcome::failure(classify(col, n));
            stack.push_back({col, -1});
            continue;
        }
        if (node.kind == OpKind::constant) {
            if (!std::isfinite(node.value)) return EvalOutcome::failure(InvalidReason::non_finite);
            if (std::fabs(node.value) > kOverflowLimit) return EvalOutcome::failure(InvalidReason::overflow);
            const int id = pool.acquire(n);
            k.fill(node.value, pool.data(id), n);
            stack.push_back({pool.data(id), id});
            continue;
        }

        Operand out{};
        if (is_binary(node.kind)) {
            const Operand left = stack.back();
            stack.pop_back();
            const Operand right = stack.back();
            stack.pop_back();
            if (node.kind == OpKind::div && k.any_zero(right.data, n))
                return EvalOutcome::failure(InvalidReason::domain_error);
            if (left.buf >= 0) {
                out = left;
                pool.release(right.buf);
            } else if (right.buf >= 0) {
                out = right;
            } else {
                out = fresh(left);
            }
            double* o = pool.data(out.buf);
            switch (node.kind) {
            case OpKind::add: k.add(left.data, right.data, o, n); break;
            case OpKind::sub: k.sub(left.data, right.data, o, n); break;
            case OpKind::mul: k.mul(left.data, right.data, o, n); break;
            default: k.div(left.data, right.data, o, n); break;
            }
        } else {
            const Operand a = stack.back();
            stack.pop_back();
            switch (node.kind) {
            case OpKind::log:
                if (k.any_nonpositive(a.data, n)) return EvalOutcome::failure(InvalidReason::domain_error);
                break;
            case OpKind::sqrt:
                if (k.any_negative(a.data, n)) return EvalOutcome::failure(InvalidReason::domain_error);
                break;
            case OpKind::inv:
                if (k.any_zero(a.data, n)) return EvalOutcome::failure(InvalidReason::domain_error);
                break;
            default: break;
            }
            out = fresh(a);
            double* o = pool.data(out.buf);
            switch (node.kind) {
            case OpKind::square: k.square(a.data, o, n); break;
            case OpKind::inv: k.inv(a.data, o, n); break;
            case OpKind::sqrt: k.sqrt(a.data, o, n); break;
            case OpKind::cos: map_unary(a.data, o, n, [](double v) { return std::cos(v); }); break;
            case OpKind::sin: map_unary(a.data, o, n, [](double v) { return std::sin(v); }); break;
            case OpKind::tan: map_unary(a.data, o, n, [](double v) { return std::tan(v); }); break;
            case OpKind::exp: map_unary(a.data, o, n, [](double v) { return std::exp(v); }); break;
            default: map_unary(a.data, o, n, [](double v) { return std::log(v); }); break;
            }
        }
        if (!k.all_bounded(out.data, n, kOverflowLimit)) return EvalOutcome::failure(classify(out.data, n));
        stack.push_back(out);
    }

    const Operand& result = stack.back();
    return {std::vector<double>(result.data, result.data + n), std::nullopt};
}

// -- simplification -----------------------------------------------------------------

namespace {

bool is_const(const std::vector<Node>& t, double v)
{
    return t.size() == 1 && t[0].kind == OpKind::constant && t[0].value == v;
}

bool is_any_const(const std::vector<Node>& t) { return t.size() == 1 && t[0].kind == OpKind::constant; }

bool fold_ok(double v) { return std::isfinite(v) && std::fabs(v) <= kOverflowLimit; }

std::optional<double> fold_unary(OpKind k, double a)
{
    double v = 0.0;
    switch (k) {
    case OpKind::cos: v = std::cos(a); break;
    case OpKind::sin: v = std::sin(a); break;
    case OpKind::tan: v = std::tan(a); break;
    case OpKind::exp: v = std::exp(a); break;
    case OpKind::log:
        if (!(a > 0.0)) return std::nullopt;
        v = std::log(a);
        break;
    case OpKind::sqrt:
        if (a < 0.0) return std::nullopt;
        v = std::sqrt(a);
        break;
    case OpKind::inv:
        if (a == 0.0) return std::nullopt;
        v = 1.0 / a;
        break;
    case OpKind::square: v = a * a; break;
    default: return std::nullopt;
    }
    return fold_ok(v) ? std::optional<double>(v) : std::nullopt;
}

std::optional<double> fold_binary(OpKind k, double a, double b)
{
    double v = 0.0;
    switch (k) {
    case OpKind::add: v = a + b; break;
    case OpKind::sub: v = a - b; break;
    case OpKind::mul: v = a * b; break;
    case OpKind::div:
        if (b == 0.0) return std::nullopt;
        v = a / b;
        break;
    default: return std::nullopt;
    }
    return fold_ok(v) ? std::optional<double>(v) : std::nullopt;
}

std::vector<Node> tail(std::vector<Node> t)
{
    t.erase(t.begin());
    return t;
}

std::vector<Node> simplify_at(const Expression& e, std::size_t pos)
{
    const Node& n = e.nodes()[pos];
    if (is_leaf(n.kind)) return {n};

    if (is_unary(n.kind)) {
        std::vector<Node> c = simplify_at(e, pos + 1);
        if (is_any_const(c)) {
            if (auto v = fold_unary(n.kind, c[0].value)) return {Node::constant(*v)};
        }
        if (n.kind == OpKind::inv && c[0].kind == OpKind::inv) return tail(std::move(c));
        if (n.kind == OpKind::square && c[0].kind == OpKind::sqrt) return tail(std::move(c));
        c.insert(c.begin(), n);
        return c;
    }

    std::vector<Node> l = simplify_at(e, pos + 1);
    std::vector<Node> r = simplify_at(e, e.subtree_end(pos + 1));
    if (is_any_const(l) && is_any_const(r)) {
        if (auto v = fold_binary(n.kind, l[0].value, r[0].value)) return {Node::constant(*v)};
    }
    switch (n.kind) {
    case OpKind::add:
        if (is_const(r, 0.0)) return l;
        if (is_const(l, 0.0)) return r;
        break;
    case OpKind::sub:
        if (is_const(r, 0.0)) return l;
        break;
    case OpKind::mul:
        if (is_const(r, 1.0)) return l;
        if (is_const(l, 1.0)) return r;
        if (is_const(l, 0.0) || is_const(r, 0.0)) return {Node::constant(0.0)};
        break;
    case OpKind::div:
        if (is_const(r, 1.0)) return l;
        if (is_const(l, 0.0)) return {Node::constant(0.0)};
        break;
    default: break;
    }
    std::vector<Node> out;
    out.reserve(1 + l.size() + r.size());
    out.push_back(n);
    out.insert(out.end(), l.begin(), l.end());
    out.insert(out.end(), r.begin(), r.end());
    return out;
}

} // namespace

Expression simplify(const Expression& expr)
{
    if (expr.empty()) return expr;
    return Expression::from_prefix(simplify_at(expr, 0));
}

const Node& node_at(const Expression& expr, std::size_t index)
{
    if (index < 1 || index > expr.size())
        throw IndexError("node index " + std::to_string(index) + " outside [1, " +
                         std::to_string(expr.size()) + "]");
    return expr.nodes()[index - 1];
}

// -- constraints ----------------------------------------------------------------------

std::string_view to_string(Violation v) noexcept
{
    switch (v) {
    case Violation::none: return "ok";
    case Violation::too_large: return "too_large";
    case Violation::nesting: return "nesting";
    case Violation::bad_variable: return "bad_variable";
    }
    return "?";
}

Violation check_constraints(const Expression& expr, const ConstraintConfig& cfg)
{
    if (expr.size() > cfg.max_operators) return Violation::too_large;
    // open[i] = remaining child slots of the i-th open ancestor; unary_depth counts
    // how many of those ancestors are unary.
    std::vector<std::pair<int, bool>> open;
    int unary_depth = 0;
    for (const Node& n : expr.nodes()) {
        if (n.kind == OpKind::variable && n.var >= kMaxVariables) return Violation::bad_variable;
        if (is_unary(n.kind) && unary_depth > 0) return Violation::nesting;
        if (!open.empty()) --open.back().first;
        if (arity(n.kind) > 0) {
            open.emplace_back(arity(n.kind), is_unary(n.kind));
            if (is_unary(n.kind)) ++unary_depth;
        }
        while (!open.empty() && open.back().first == 0) {
            if (open.back().second) --unary_depth;
            open.pop_back();
        }
    }
    return Violation::none;
}

} // namespace srmcts
