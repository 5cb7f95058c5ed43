#include "srmcts/tokenizer.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/float_tokens.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

namespace srmcts {

namespace {

void append_float(std::vector<std::string>& out, double v)
{
    auto t = encode_float(v);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
}

std::vector<std::size_t> context_rows(std::size_t n, std::size_t cap, Rng& rng)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n <= cap) return idx;
    // partial Fisher-Yates, then restore row order
    for (std::size_t i = 0; i < cap; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

std::vector<std::string> tokenize_state(const Dataset& ds, const Expression& expr, Rng& rng,
                                        std::size_t max_points)
{
    std::vector<std::string> out = to_prefix(expr, ConstantFormat::triplet);
    out.emplace_back(kSepToken);
    const int d = ds.dims();
    for (std::size_t i : context_rows(ds.rows(), max_points, rng)) {
        out.emplace_back(kPointToken);
        for (int j = 0; j < d; ++j) append_float(out, ds.X(i, static_cast<std::size_t>(j)));
        append_float(out, ds.y[i]);
    }
    return out;
}

DecodedState detokenize_state(std::span<const std::string> tokens)
{
    const auto sep = std::find(tokens.begin(), tokens.end(), kSepToken);
    if (sep == tokens.end()) throw ParseError(tokens.size(), "missing <sep>");
    const auto split = static_cast<std::size_t>(sep - tokens.begin());

    DecodedState out;
    if (split > 0) out.expr = parse_prefix(tokens.subspan(0, split));

    std::vector<std::vector<double>> rows;
    std::size_t i = split + 1;
    while (i < tokens.size()) {
        if (tokens[i] != kPointToken) throw ParseError(i, "expected <pt>");
        ++i;
        std::vector<double> row;
        while (i < tokens.size() && tokens[i] != kPointToken) {
            const auto v = decode_float(tokens.subspan(i));
            if (!v) throw ParseError(i, "malformed constant triplet");
            row.push_back(*v);
            i += 3;
        }
        if (row.size() < 2) throw ParseError(i, "point needs at least one input and a target");
        if (!rows.empty() && row.size() != rows.front().size() + 1) throw ParseError(i, "ragged point");
        out.y.push_back(row.back());
        row.pop_back();
        rows.push_back(std::move(row));
    }
    out.X = Matrix::from_rows(rows);
    return out;
}

std::vector<std::string> tokenize_action(const Mutation& m)
{
    std::vector<std::string> out{std::to_string(m.anchor), kActionSep, std::string(mutation_op_name(m.op))};
    if (m.arg) {
        out.emplace_back(kActionSep);
        auto b = to_prefix(*m.arg, ConstantFormat::triplet);
        out.insert(out.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
    }
    return out;
}

Mutation parse_action(std::span<const std::string> tokens)
{
    if (tokens.size() < 3) throw ParseError(tokens.size(), "truncated");
    Mutation m;
    const std::string& a = tokens[0];
    auto [p, ec] = std::from_chars(a.data(), a.data() + a.size(), m.anchor);
    if (ec != std::errc{} || p != a.data() + a.size()) throw ParseError(0, "bad anchor");
    if (tokens[1] != kActionSep) throw ParseError(1, "expected |");
    const auto op = mutation_op_from_name(tokens[2]);
    if (!op) throw ParseError(2, "unknown token");
    m.op = *op;
    if (tokens.size() > 3) {
        if (tokens[3] != kActionSep) throw ParseError(3, "expected |");
        m.arg = parse_prefix(tokens.subspan(4));
    }
    return m;
}

std::vector<std::string> vocabulary()
{
    std::vector<std::string> v{kSepToken, kPointToken, kActionSep, "+", "-"};
    for (int k = 0; k < kNumOpKinds; ++k) {
        const auto kind = static_cast<OpKind>(k);
        if (!is_leaf(kind)) v.emplace_back(op_name(kind));
    }
    for (int j = 0; j < kMaxVariables; ++j) v.push_back("x" + std::to_string(j));
    for (int k = 0; k < kNumMutationOps; ++k) v.emplace_back(mutation_op_name(static_cast<MutationOp>(k)));
    for (int e = -100; e <= 100; ++e) v.push_back("E" + std::to_string(e));
    // Mantissas and anchor indices share the integer tokens.
    for (int m = 0; m <= 9999; ++m) v.push_back(std::to_string(m));
    return v;
}

void write_vocabulary(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& t : vocabulary()) out << t << '\n';
}

} // namespace srmcts
