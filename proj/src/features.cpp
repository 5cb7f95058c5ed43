#include "srmcts/features.hpp"

#include "srmcts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace srmcts {

namespace {

double clip(double v, double lo, double hi)
{
    if (!std::isfinite(v)) return 0.0;
    return std::clamp(v, lo, hi);
}

double mean_of(std::span<const double> a)
{
    return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

double stddev_of(std::span<const double> a, double mean)
{
    double s = 0.0;
    for (double v : a) s += (v - mean) * (v - mean);
    return std::sqrt(s / static_cast<double>(a.size()));
}

} // namespace

double correlation(std::span<const double> a, std::span<const double> b)
{
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 1e-24 * static_cast<double>(a.size()) || sbb <= 1e-24 * static_cast<double>(a.size())) return 0.0;
    const double c = sab / std::sqrt(saa * sbb);
    return std::isfinite(c) ? c : 0.0;
}

Features featurize(const Dataset& ds, const Expression& expr, Rng& rng)
{
    Features f;
    f.expr = expr;
    f.d = ds.dims();
    auto& s = f.state;
    const std::size_t n = expr.size();

    // rows used for fit statistics
    std::vector<std::size_t> rows(ds.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (rows.size() > kFeatureRows) {
        for (std::size_t i = 0; i < kFeatureRows; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
            std::swap(rows[i], rows[pick(rng)]);
        }
        rows.resize(kFeatureRows);
    }
    const Matrix X = ds.X.select_rows(rows);
    std::vector<double> y(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) y[k] = ds.y[rows[k]];

    s[feat::bias] = 1.0;
    s[feat::size] = static_cast<double>(n) / 60.0;
    s[feat::depth] = n == 0 ? 0.0 : expr.depth() / 10.0;
    s[feat::empty] = n == 0 ? 1.0 : 0.0;
    std::array<int, 12> op_count{};
    int constants = 0;
    for (const auto& node : expr.nodes()) {
        if (node.kind == OpKind::variable) s[feat::var_present + node.var] = 1.0;
        else if (node.kind == OpKind::constant) ++constants;
        else ++op_count[static_cast<std::size_t>(node.kind)];
    }
    for (std::size_t k = 0; k < 12; ++k) s[feat::op_counts + k] = std::min(op_count[k], 4) / 4.0;
    s[feat::constants] = std::min(constants, 4) / 4.0;
    for (int j = 0; j < f.d; ++j) s[feat::var_available + static_cast<std::size_t>(j)] = 1.0;
    s[feat::dims] = f.d / 10.0;

    const double my = mean_of(y);
    const double sy = stddev_of(y, my);
    const double scale = sy > 0.0 ? sy : 1.0;
    std::array<double, kMaxVariables> target_corr{};
    for (int j = 0; j < f.d; ++j)
        target_corr[static_cast<std::size_t>(j)] = correlation(X.col(static_cast<std::size_t>(j)), y);
    for (std::size_t j = 0; j < kMaxVariables; ++j) s[feat::target_corr + j] = std::fabs(target_corr[j]);
    s[feat::target_mean] = clip(my / (std::fabs(my) + scale), -1.0, 1.0);
    s[feat::target_scale] = clip(std::log1p(sy) / 5.0, 0.0, 2.0);

    std::array<double, kMaxVariables> resid_corr{};
    if (n > 0) {
        const auto out = evaluate(expr, X);
        if (out.valid()) {
            f.valid = true;
            std::vector<double> r(y.size());
            for (std::size_t k = 0; k < y.size(); ++k) r[k] = y[k] - out.values[k];
            const double mr = mean_of(r);
            f.r2 = clip(r_squared(y, std::span<const double>(out.values)), -1.0, 1.0);
            s[feat::valid] = 1.0;
            s[feat::r2] = f.r2;
            s[feat::resid_mean] = clip(mr / scale, -3.0, 3.0);
            s[feat::resid_std] = clip(stddev_of(r, mr) / scale, 0.0, 3.0);
            for (int j = 0; j < f.d; ++j)
                resid_corr[static_cast<std::size_t>(j)] = correlation(X.col(static_cast<std::size_t>(j)), r);
            for (std::size_t j = 0; j < kMaxVariables; ++j) s[feat::resid_corr + j] = resid_corr[j];
        }
    }

    // node descriptors
    f.nodes.resize(n);
    std::vector<int> depth(n, 0);
    std::vector<char> unary_above(n, 0), parent_binary(n, 0);
    const auto nodes = expr.nodes();
    for (std::size_t p = 0; p < n; ++p) {
        const OpKind k = nodes[p].kind;
        if (is_leaf(k)) continue;
        std::size_t c = p + 1;
        for (int a = 0; a < arity(k); ++a) {
            depth[c] = depth[p] + 1;
            unary_above[c] = unary_above[p] || is_unary(k);
            parent_binary[c] = is_binary(k);
            c = expr.subtree_end(c);
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        auto& v = f.nodes[p];
        v.fill(0.0);
        const std::size_t end = expr.subtree_end(p);
        v[feat::n_bias] = 1.0;
        v[feat::n_kind + static_cast<std::size_t>(nodes[p].kind)] = 1.0;
        v[feat::n_depth] = depth[p] / 10.0;
        v[feat::n_subtree] = static_cast<double>(end - p) / static_cast<double>(n);
        v[feat::n_root] = p == 0 ? 1.0 : 0.0;
        v[feat::n_unary_above] = unary_above[p];
        bool within = false;
        for (std::size_t q = p; q < end && !within; ++q) within = is_unary(nodes[q].kind);
        v[feat::n_unary_within] = within;
        v[feat::n_position] = static_cast<double>(p) / static_cast<double>(n);
        v[feat::n_parent_binary] = parent_binary[p];
        if (nodes[p].kind == OpKind::variable && nodes[p].var < f.d) {
            v[feat::n_var_target_corr] = std::fabs(target_corr[nodes[p].var]);
            v[feat::n_var_resid_corr] = std::fabs(resid_corr[nodes[p].var]);
        }
    }
    return f;
}

} // namespace srmcts
