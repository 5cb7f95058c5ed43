#pragma once

// Independent reference implementations the acceptance criteria compare against.
// None of these call into the code under test beyond data types.

#include "srmcts/mutation.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using namespace srmcts;

// Two-pass R² in long double.
inline double r_squared(const std::vector<double>& y, const std::vector<double>& yhat)
{
    long double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<long double>(y.size());
    long double sse = 0, sst = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const long double e = static_cast<long double>(y[i]) - yhat[i];
        const long double c = static_cast<long double>(y[i]) - mean;
        sse += e * e;
        sst += c * c;
    }
    if (sst == 0) return sse == 0 ? 1.0 : -INFINITY;
    return static_cast<double>(1.0L - sse / sst);
}

struct ChildStats {
    unsigned long long n = 0;
    double v_sum = 0.0;
    double prior = 0.0;
};

// Argmax of V + c * sqrt(sum N) / (1 + N) * prior; V = 0 when unvisited;
// ties to the higher prior, then the lower index.
inline std::size_t puct_argmax(const std::vector<ChildStats>& kids, double c)
{
    unsigned long long total = 0;
    for (const auto& k : kids) total += k.n;
    std::size_t best = 0;
    double best_score = 0;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        const double v = kids[i].n ? kids[i].v_sum / static_cast<double>(kids[i].n) : 0.0;
        const double e = std::sqrt(static_cast<double>(total)) / (1.0 + static_cast<double>(kids[i].n));
        const double score = v + c * e * kids[i].prior;
        if (i == 0 || score > best_score || (score == best_score && kids[i].prior > kids[best].prior)) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

// Repeatedly peel the points no remaining point dominates.
inline std::vector<int> pareto_ranks(const std::vector<std::pair<double, double>>& p)
{
    std::vector<int> rank(p.size(), -1);
    std::size_t assigned = 0;
    for (int front = 0; assigned < p.size(); ++front) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (rank[i] >= 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < p.size() && !dominated; ++j) {
                if (j == i || rank[j] >= 0) continue;
                dominated = p[j].first <= p[i].first && p[j].second <= p[i].second &&
                            (p[j].first < p[i].first || p[j].second < p[i].second);
            }
            if (!dominated) members.push_back(i);
        }
        for (auto i : members) rank[i] = front;
        assigned += members.size();
    }
    return rank;
}

// Least squares via normal equations and Gaussian elimination with pivoting.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& A, const std::vector<double>& y)
{
    const std::size_t m = A.front().size();
    std::vector<std::vector<long double>> M(m, std::vector<long double>(m + 1, 0));
    for (std::size_t r = 0; r < A.size(); ++r)
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) M[i][j] += static_cast<long double>(A[r][i]) * A[r][j];
            M[i][m] += static_cast<long double>(A[r][i]) * y[r];
        }
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::fabs(static_cast<double>(M[r][c])) > std::fabs(static_cast<double>(M[piv][c]))) piv = r;
        std::swap(M[c], M[piv]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == c) continue;
            const long double f = M[r][c] / M[c][c];
            for (std::size_t k = c; k <= m; ++k) M[r][k] -= f * M[c][k];
        }
    }
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = static_cast<double>(M[i][m] / M[i][i]);
    return x;
}

// Mutations whose argument (if any) is a single variable. A finite slice of
// the grammar, enough to certify reachability from below.
inline std::vector<Mutation> leaf_mutations(const Expression& e, int d)
{
    std::vector<Mutation> out;
    auto leaves = [&] {
        std::vector<Expression> v;
        for (int j = 0; j < d; ++j) v.push_back(Expression::from_prefix({Node::variable(j)}));
        return v;
    }();
    if (e.empty()) {
        for (auto& l : leaves) out.push_back({0, MutationOp::root_replace, l});
        return out;
    }
    for (std::size_t a = 1; a <= e.size(); ++a)
        for (int o = 0; o < kNumMutationOps; ++o) {
            const auto op = static_cast<MutationOp>(o);
            if (op == MutationOp::root_replace) continue;
            if (!requires_arg(op))
                out.push_back({a, op, std::nullopt});
            else
                for (auto& l : leaves) out.push_back({a, op, l});
        }
    return out;
}

// Fewest leaf mutations from the empty expression to `target`, searched
// breadth-first up to `depth` steps; nullopt when not reachable that way.
inline std::optional<int> min_leaf_steps(const Expression& target, int d, int depth, const ConstraintConfig& cfg = {})
{
    std::vector<Expression> frontier{Expression{}};
    std::set<std::vector<std::string>> seen;
    for (int step = 1; step <= depth; ++step) {
        std::vector<Expression> next;
        for (const auto& e : frontier)
            for (const auto& m : leaf_mutations(e, d)) {
                Expression child;
                try {
                    child = apply_mutation(e, m, cfg);
                } catch (const std::exception&) {
                    continue;
                }
                if (child == target) return step;
                if (child.size() < target.size() && seen.insert(to_prefix(child)).second) next.push_back(std::move(child));
            }
        frontier = std::move(next);
    }
    return std::nullopt;
}

} // namespace oracle
