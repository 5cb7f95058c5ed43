#include "srmcts/constopt.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace srmcts {

std::string_view to_string(ConstOptStrategy s) noexcept
{
    switch (s) {
    case ConstOptStrategy::never: return "never";
    case ConstOptStrategy::best_only: return "best_only";
    case ConstOptStrategy::all: return "all";
    case ConstOptStrategy::alternate: return "alternate";
    }
    return "?";
}

ConstOptStrategy const_opt_strategy_from_string(std::string_view name)
{
    for (auto s : {ConstOptStrategy::never, ConstOptStrategy::best_only, ConstOptStrategy::all, ConstOptStrategy::alternate})
        if (to_string(s) == name) return s;
    throw std::invalid_argument("unknown constant-optimization strategy '" + std::string(name) + "'");
}

Expression ConstantTemplate::substitute(std::span<const double> values) const
{
    if (values.size() != positions.size()) throw std::invalid_argument("constant count mismatch");
    std::vector<Node> nodes(expr.nodes().begin(), expr.nodes().end());
    for (std::size_t i = 0; i < positions.size(); ++i) nodes[positions[i]].value = values[i];
    return Expression::from_prefix(std::move(nodes));
}

std::pair<ConstantTemplate, std::vector<double>> extract_constants(const Expression& expr)
{
    ConstantTemplate t{expr, {}};
    std::vector<double> values;
    const auto nodes = expr.nodes();
    for (std::size_t p = 0; p < nodes.size(); ++p)
        if (nodes[p].kind == OpKind::constant) {
            t.positions.push_back(p);
            values.push_back(nodes[p].value);
        }
    return {std::move(t), std::move(values)};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Maximal constant-free subtrees do not change during a fit. They are evaluated
// once into extra columns and appear in the reduced expression as variables.
struct Reduced {
    Expression expr;
    std::vector<std::size_t> positions;
    Matrix X;
};

std::optional<Reduced> reduce(const ConstantTemplate& t, const Matrix& X)
{
    const auto nodes = t.expr.nodes();
    std::vector<bool> has_const(nodes.size(), false);
    for (std::size_t p = nodes.size(); p-- > 0;) {
        if (nodes[p].kind == OpKind::constant) {
            has_const[p] = true;
            continue;
        }
        const std::size_t end = t.expr.subtree_end(p);
        for (std::size_t q = p + 1; q < end && !has_const[p]; ++q) has_const[p] = has_const[q];
    }
    // columns of the reduced problem: input variables kept as leaves, then cached subtrees
    std::vector<std::vector<double>> cols;
    std::vector<int> var_slot(X.cols(), -1);
    std::vector<Node> out;
    std::vector<std::size_t> positions;
    bool cached_any = false;
    for (std::size_t p = 0; p < nodes.size();) {
        const std::size_t end = t.expr.subtree_end(p);
        if (nodes[p].kind == OpKind::variable) {
            int& slot = var_slot[nodes[p].var];
            if (slot < 0) {
                slot = static_cast<int>(cols.size());
                cols.emplace_back(X.col(nodes[p].var).begin(), X.col(nodes[p].var).end());
            }
            out.push_back(Node::variable(slot));
            ++p;
        } else if (has_const[p] || end - p == 1) {
            if (nodes[p].kind == OpKind::constant) positions.push_back(out.size());
            out.push_back(nodes[p]);
            ++p;
        } else {
            auto v = evaluate(Expression::from_prefix({nodes.begin() + static_cast<std::ptrdiff_t>(p),
                                                       nodes.begin() + static_cast<std::ptrdiff_t>(end)}),
                              X);
            if (!v.valid()) return std::nullopt;
            out.push_back(Node::variable(static_cast<int>(cols.size())));
            cols.push_back(std::move(v.values));
            cached_any = true;
            p = end;
        }
        if (cols.size() > static_cast<std::size_t>(kMaxVariables)) return std::nullopt;
    }
    if (!cached_any) return std::nullopt;
    Reduced r{Expression::from_prefix(std::move(out)), std::move(positions), Matrix(X.rows(), cols.size())};
    for (std::size_t j = 0; j < cols.size(); ++j) std::copy(cols[j].begin(), cols[j].end(), r.X.col(j).begin());
    return r;
}

class Objective {
public:
    Objective(const ConstantTemplate& t, const Dataset& batch) : t_(t), batch_(batch), reduced_(reduce(t, batch.X))
    {
        if (reduced_) t_ = {reduced_->expr, reduced_->positions};
        const double n = static_cast<double>(batch.rows());
        const double mean = std::accumulate(batch.y.begin(), batch.y.end(), 0.0) / n;
        for (double v : batch.y) var_ += (v - mean) * (v - mean) / n;
    }

    double operator()(std::span<const double> c)
    {
        ++calls;
        const auto out = evaluate(t_.substitute(c), reduced_ ? reduced_->X : batch_.X);
        if (!out.valid()) return kInf;
        double s = 0.0;
        for (std::size_t i = 0; i < batch_.y.size(); ++i) {
            const double e = out.values[i] - batch_.y[i];
            s += e * e;
        }
        const double mse = s / static_cast<double>(batch_.y.size());
        return std::isfinite(mse) ? mse : kInf;
    }

    double r2(double mse) const
    {
        if (var_ == 0.0) return mse == 0.0 ? 1.0 : -kInf;
        return 1.0 - mse / var_;
    }

    int calls = 0;

private:
    ConstantTemplate t_;
    const Dataset& batch_;
    std::optional<Reduced> reduced_;
    double var_ = 0.0;
};

// Central differences; a side that leaves the valid domain falls back to a one-sided step.
bool gradient(Objective& f, std::vector<double>& c, double fc, std::vector<double>& g)
{
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double keep = c[i];
        const double h = 1e-5 * (1.0 + std::fabs(keep));
        c[i] = keep + h;
        const double up = f(c);
        c[i] = keep - h;
        const double down = f(c);
        c[i] = keep;
        if (std::isfinite(up) && std::isfinite(down)) g[i] = (up - down) / (2.0 * h);
        else if (std::isfinite(up)) g[i] = (up - fc) / h;
        else if (std::isfinite(down)) g[i] = (fc - down) / h;
        else return false;
    }
    return true;
}

} // namespace

FitResult optimize_constants(const Expression& expr, const Dataset& ds, const ConstOptConfig& cfg, Rng& rng)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    std::vector<std::size_t> rows(ds.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (rows.size() > cfg.batch_size) {
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
            std::swap(rows[i], rows[pick(rng)]);
        }
        rows.resize(cfg.batch_size);
        std::sort(rows.begin(), rows.end());
    }
    const Dataset batch = rows.size() == ds.rows() ? ds : ds.subset(rows);

    auto [tmpl, c] = extract_constants(expr);
    Objective f(tmpl, batch);
    FitResult res;
    double fc = f(c);
    if (!std::isfinite(fc)) throw OptimizationSkipped("initial constants give an Invalid evaluation");
    res.batch_r2_before = f.r2(fc);

    if (c.empty()) {
        res.fitted = expr;
        res.batch_r2_after = res.batch_r2_before;
        res.r2 = rows.size() == ds.rows() ? res.batch_r2_before : r_squared(expr, ds);
        res.objective_evaluations = f.calls;
        return res;
    }

    const std::size_t m = c.size();
    std::vector<double> best = c;
    double best_f = fc;
    double best_r2 = res.batch_r2_before;

    std::vector<double> g(m), g_new(m), d(m), x_new(m), s(m), y(m);
    std::vector<double> H(m * m, 0.0); // inverse Hessian estimate
    auto reset_h = [&] {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) H[i * m + i] = 1.0;
    };
    reset_h();
    bool fresh_h = true;

    int stale = 0;
    if (gradient(f, c, fc, g)) {
        for (int it = 0; it < cfg.max_iterations; ++it) {
            if (cfg.wall_clock &&
                std::chrono::duration<double>(clock::now() - start).count() > cfg.timeout_seconds) {
                res.timed_out = true;
                break;
            }
            res.iterations = it + 1;

            double gd = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                d[i] = 0.0;
                for (std::size_t j = 0; j < m; ++j) d[i] -= H[i * m + j] * g[j];
                gd += g[i] * d[i];
            }
            if (!(gd < 0.0)) {
                reset_h();
                fresh_h = true;
                gd = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    d[i] = -g[i];
                    gd -= g[i] * g[i];
                }
                if (!(gd < 0.0)) break; // stationary
            }

            // Backtracking line search with the Armijo condition.
            double alpha = 1.0, f_new = kInf;
            if (fresh_h) { // unscaled steepest descent: keep the first trial step within unit length
                double dmax = 0.0;
                for (std::size_t i = 0; i < m; ++i) dmax = std::max(dmax, std::fabs(d[i]));
                if (dmax > 1.0) alpha = 1.0 / dmax;
            }
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t i = 0; i < m; ++i) x_new[i] = c[i] + alpha * d[i];
                f_new = f(x_new);
                if (std::isfinite(f_new) && f_new <= fc + 1e-4 * alpha * gd) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                if (fresh_h) break;
                reset_h(); // retry along steepest descent
                fresh_h = true;
                continue;
            }
            if (!gradient(f, x_new, f_new, g_new)) break;

            double sy = 0.0, yy = 0.0, ss = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                s[i] = x_new[i] - c[i];
                y[i] = g_new[i] - g[i];
                sy += s[i] * y[i];
                yy += y[i] * y[i];
                ss += s[i] * s[i];
            }
            if (sy > 1e-10 * std::sqrt(ss * yy)) { // curvature condition
                if (fresh_h) { // scale the initial guess to the observed curvature
                    for (std::size_t i = 0; i < m; ++i) H[i * m + i] = sy / yy;
                    fresh_h = false;
                }
                // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
                const double r = 1.0 / sy;
                std::vector<double> Hy(m, 0.0);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) Hy[i] += H[i * m + j] * y[j];
                double yHy = 0.0;
                for (std::size_t i = 0; i < m; ++i) yHy += y[i] * Hy[i];
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        H[i * m + j] += (1.0 + yHy * r) * r * s[i] * s[j] - r * (Hy[i] * s[j] + s[i] * Hy[j]);
            }

            c = x_new;
            fc = f_new;
            g = g_new;
            if (fc < best_f) {
                best_f = fc;
                best = c;
            }
            const double r2_now = f.r2(best_f);
            if (r2_now > best_r2 + cfg.improvement_tol) {
                best_r2 = r2_now;
                stale = 0;
            } else if (++stale >= cfg.patience) {
                break;
            }
        }
    }

    res.fitted = tmpl.substitute(best);
    res.batch_r2_after = f.r2(best_f);
    res.r2 = rows.size() == ds.rows() ? res.batch_r2_after : r_squared(res.fitted, ds);
    res.objective_evaluations = f.calls;
    return res;
}

} // namespace srmcts
