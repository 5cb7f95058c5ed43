#include "srmcts/datagen.hpp"

#include "srmcts/errors.hpp"
#include "srmcts/float_tokens.hpp"
#include "srmcts/tokenizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>

namespace srmcts {

GenConfig GenConfig::out_of_domain()
{
    GenConfig cfg;
    cfg.internal_max = 40;
    cfg.source = DatasetSource::synthetic_out_of_domain;
    return cfg;
}

void GenConfig::check() const
{
    if (d_min < 1 || d_max > kMaxVariables || d_min > d_max) throw std::invalid_argument("bad d range");
    if (internal_min < 0 || internal_min > internal_max) throw std::invalid_argument("bad internal-node range");
    if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
    if (mixture.max_components < 1) throw std::invalid_argument("mixture needs a component");
    if (leaf_constant_prob < 0.0 || leaf_constant_prob > 1.0) throw std::invalid_argument("bad leaf_constant_prob");
}

// -- inputs ----------------------------------------------------------------------

std::vector<double> GaussianMixture::mean() const
{
    std::vector<double> m(static_cast<std::size_t>(dims()), 0.0);
    for (std::size_t c = 0; c < weights.size(); ++c)
        for (std::size_t j = 0; j < m.size(); ++j) m[j] += weights[c] * means[c][j];
    return m;
}

std::vector<double> GaussianMixture::variance() const
{
    const auto mu = mean();
    std::vector<double> v(mu.size(), 0.0);
    for (std::size_t c = 0; c < weights.size(); ++c)
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double dm = means[c][j] - mu[j];
            v[j] += weights[c] * (variances[c][j] + dm * dm);
        }
    return v;
}

GaussianMixture sample_mixture(const MixtureConfig& cfg, int d, Rng& rng)
{
    const int k = uniform_int(rng, 1, cfg.max_components);
    GaussianMixture mix;
    std::normal_distribution<double> mean_dist(0.0, cfg.mean_stddev);
    std::uniform_real_distribution<double> var_dist(cfg.variance_lo, cfg.variance_hi);
    std::exponential_distribution<double> gamma1(1.0); // Dirichlet(1) via normalised Exp(1)
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
        mix.weights.push_back(gamma1(rng));
        total += mix.weights.back();
        std::vector<double> m(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) m[static_cast<std::size_t>(j)] = mean_dist(rng);
        for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] = var_dist(rng);
        mix.means.push_back(std::move(m));
        mix.variances.push_back(std::move(v));
    }
    for (auto& w : mix.weights) w /= total;
    return mix;
}

Matrix sample_inputs(const GaussianMixture& mix, std::size_t n, Rng& rng)
{
    const int d = mix.dims();
    if (n < 1 || d < 1 || d > kMaxVariables) throw std::invalid_argument("sample_inputs needs n >= 1 and 1 <= d <= 10");
    Matrix X(n, static_cast<std::size_t>(d));
    std::discrete_distribution<std::size_t> pick(mix.weights.begin(), mix.weights.end());
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = pick(rng);
        for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j)
            X(i, j) = mix.means[c][j] + std::sqrt(mix.variances[c][j]) * z(rng);
    }
    return X;
}

Matrix sample_inputs(const GenConfig& cfg, std::size_t n, int d, Rng& rng)
{
    if (n < 1 || d < 1 || d > kMaxVariables) throw std::invalid_argument("sample_inputs needs n >= 1 and 1 <= d <= 10");
    const auto mix = sample_mixture(cfg.mixture, d, rng);
    return sample_inputs(mix, n, rng);
}

// -- expressions -----------------------------------------------------------------

namespace {

constexpr int kShapeTableSize = 128;

struct ShapeTables {
    std::array<double, kShapeTableSize> binary_only{}; // Catalan numbers
    std::array<double, kShapeTableSize> unrestricted{};

    ShapeTables()
    {
        binary_only[0] = 1.0;
        unrestricted[0] = 1.0;
        for (int n = 1; n < kShapeTableSize; ++n) {
            double c = 0.0, t = binary_only[static_cast<std::size_t>(n - 1)];
            for (int k = 0; k < n; ++k) {
                c += binary_only[static_cast<std::size_t>(k)] * binary_only[static_cast<std::size_t>(n - 1 - k)];
                t += unrestricted[static_cast<std::size_t>(k)] * unrestricted[static_cast<std::size_t>(n - 1 - k)];
            }
            binary_only[static_cast<std::size_t>(n)] = c;
            unrestricted[static_cast<std::size_t>(n)] = t;
        }
    }
};

const ShapeTables& shapes()
{
    static const ShapeTables t;
    return t;
}

class TreeSampler {
public:
    TreeSampler(const GenConfig& cfg, int d, Rng& rng) : cfg_(cfg), d_(d), rng_(rng) {}

    std::vector<Node> sample(int internal)
    {
        out_.clear();
        grow(internal, false);
        return std::move(out_);
    }

private:
    int split(int n, const std::array<double, kShapeTableSize>& table)
    {
        double total = 0.0;
        for (int k = 0; k < n; ++k) total += table[static_cast<std::size_t>(k)] * table[static_cast<std::size_t>(n - 1 - k)];
        double u = uniform01(rng_) * total;
        for (int k = 0; k < n; ++k) {
            u -= table[static_cast<std::size_t>(k)] * table[static_cast<std::size_t>(n - 1 - k)];
            if (u < 0.0) return k;
        }
        return n - 1;
    }

    void grow(int n, bool under_unary)
    {
        const auto& t = shapes();
        if (n == 0) {
            leaf();
            return;
        }
        if (!under_unary) {
            const double p_unary = t.binary_only[static_cast<std::size_t>(n - 1)] / t.unrestricted[static_cast<std::size_t>(n)];
            if (uniform01(rng_) < p_unary) {
                out_.push_back(Node::op(static_cast<OpKind>(static_cast<int>(OpKind::cos) + uniform_int(rng_, 0, 7))));
                grow(n - 1, true);
                return;
            }
        }
        const int k = split(n, under_unary ? t.binary_only : t.unrestricted);
        out_.push_back(Node::op(static_cast<OpKind>(uniform_int(rng_, 0, 3))));
        grow(k, under_unary);
        grow(n - 1 - k, under_unary);
    }

    void leaf()
    {
        if (uniform01(rng_) < cfg_.leaf_constant_prob) {
            std::normal_distribution<double> c(0.0, cfg_.constant_stddev);
            out_.push_back(Node::constant(c(rng_)));
        } else {
            out_.push_back(Node::variable(uniform_int(rng_, 0, d_ - 1)));
        }
    }

    const GenConfig& cfg_;
    int d_;
    Rng& rng_;
    std::vector<Node> out_;
};

} // namespace

double count_shapes(int internal)
{
    if (internal < 0 || internal >= kShapeTableSize) throw std::out_of_range("count_shapes");
    return shapes().unrestricted[static_cast<std::size_t>(internal)];
}

Expression round_constants(const Expression& expr)
{
    std::vector<Node> nodes(expr.nodes().begin(), expr.nodes().end());
    for (auto& n : nodes)
        if (n.kind == OpKind::constant) n.value = round_to_tokens(n.value);
    return Expression::from_prefix(std::move(nodes));
}

SampledExpression sample_expression_detailed(const GenConfig& cfg, int d, Rng& rng, GenStats* stats)
{
    if (d < 1 || d > kMaxVariables) throw std::invalid_argument("sample_expression needs 1 <= d <= 10");
    if (cfg.internal_max >= kShapeTableSize) throw std::invalid_argument("internal_max too large");
    TreeSampler sampler(cfg, d, rng);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        const int n = uniform_int(rng, cfg.internal_min, cfg.internal_max);
        SampledExpression s;
        s.internal_nodes = n;
        s.raw = Expression::from_prefix(sampler.sample(n));
        // Constants are kept at token precision so traces survive tokenization exactly.
        s.simplified = simplify(round_constants(simplify(s.raw)));
        if (!s.simplified.empty() && check_constraints(s.simplified, cfg.constraints) == Violation::none)
            return s;
        if (stats) ++stats->rejected_expressions;
    }
    throw DegenerateSample("no admissible expression after " + std::to_string(cfg.max_attempts) + " attempts");
}

Expression sample_expression(const GenConfig& cfg, int d, Rng& rng)
{
    return sample_expression_detailed(cfg, d, rng).simplified;
}

Dataset make_example(const GenConfig& cfg, Rng& rng, std::string id, GenStats* stats)
{
    cfg.check();
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        const int d = uniform_int(rng, cfg.d_min, cfg.d_max);
        Matrix X = sample_inputs(cfg, cfg.n_points, d, rng);
        Expression f = sample_expression_detailed(cfg, d, rng, stats).simplified;
        EvalOutcome out = evaluate(f, X);
        const bool constant = out.valid() &&
            std::all_of(out.values.begin(), out.values.end(), [&](double v) { return v == out.values.front(); });
        if (!out.valid() || constant) {
            if (stats) ++stats->rejected_examples;
            continue;
        }
        Dataset ds;
        ds.id = std::move(id);
        ds.X = std::move(X);
        ds.y = std::move(out.values);
        ds.source = cfg.source;
        ds.ground_truth = std::move(f);
        return ds;
    }
    throw DegenerateSample("no valid example after " + std::to_string(cfg.max_attempts) + " attempts");
}

// -- corpus ----------------------------------------------------------------------

CorpusRecord make_corpus_record(const GenConfig& cfg, std::size_t goal, std::uint64_t seed, std::size_t index,
                                GenStats* stats)
{
    Rng rng = make_rng(seed, index);
    CorpusRecord rec;
    rec.dataset = make_example(cfg, rng, "syn-" + std::to_string(seed) + "-" + std::to_string(index), stats);
    rec.trace = dismantle(*rec.dataset.ground_truth, goal, rng);
    return rec;
}

CorpusSummary build_corpus(const GenConfig& cfg, std::size_t count, std::size_t goal, std::uint64_t seed,
                           std::ostream& sink)
{
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    CorpusSummary summary;
    GenStats stats;
    for (std::size_t i = 0; i < count; ++i) {
        const auto rec = make_corpus_record(cfg, goal, seed, i, &stats);
        sink << corpus_record_to_json(rec) << '\n';
        if (!sink) throw std::runtime_error("corpus write failed");
        ++summary.records;
        ++summary.trace_length_histogram[rec.trace.steps.size()];
        summary.total_steps += rec.trace.steps.size();
    }
    summary.rejected_expressions = stats.rejected_expressions;
    summary.rejected_examples = stats.rejected_examples;
    return summary;
}

namespace {

nlohmann::json step_json(const std::string& id, std::size_t index, const TraceStep& step)
{
    return {
        {"dataset_id", id},
        {"step_index", index},
        {"state_prefix_tokens", to_prefix(step.state, ConstantFormat::triplet)},
        {"action_tokens", tokenize_action(step.mutation)},
    };
}

} // namespace

std::string corpus_record_to_json(const CorpusRecord& rec)
{
    const Dataset& ds = rec.dataset;
    nlohmann::json X = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < ds.X.cols(); ++j) row.push_back(ds.X(i, j));
        X.push_back(std::move(row));
    }
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t k = 0; k < rec.trace.steps.size(); ++k) steps.push_back(step_json(ds.id, k, rec.trace.steps[k]));
    nlohmann::json j{
        {"dataset_id", ds.id},
        {"source", to_string(ds.source)},
        {"d", ds.dims()},
        {"ground_truth", ds.ground_truth ? to_prefix(*ds.ground_truth, ConstantFormat::triplet) : std::vector<std::string>{}},
        {"X", std::move(X)},
        {"y", ds.y},
        {"steps", std::move(steps)},
    };
    return j.dump();
}

CorpusRecord corpus_record_from_json(const std::string& line)
{
    const auto j = nlohmann::json::parse(line);
    CorpusRecord rec;
    Dataset& ds = rec.dataset;
    ds.id = j.at("dataset_id").get<std::string>();
    const auto src = j.at("source").get<std::string>();
    for (auto s : {DatasetSource::synthetic_in_domain, DatasetSource::synthetic_out_of_domain, DatasetSource::external})
        if (to_string(s) == src) ds.source = s;
    ds.X = Matrix::from_rows(j.at("X").get<std::vector<std::vector<double>>>());
    ds.y = j.at("y").get<std::vector<double>>();
    const auto gt = j.at("ground_truth").get<std::vector<std::string>>();
    if (!gt.empty()) ds.ground_truth = parse_prefix(gt);
    validate(ds);
    if (ds.dims() != j.at("d").get<int>()) throw std::runtime_error("corpus record: d does not match X");

    for (const auto& s : j.at("steps")) {
        TraceStep step;
        const auto state = s.at("state_prefix_tokens").get<std::vector<std::string>>();
        if (!state.empty()) step.state = parse_prefix(state);
        step.mutation = parse_action(s.at("action_tokens").get<std::vector<std::string>>());
        rec.trace.steps.push_back(std::move(step));
    }
    rec.trace.target = ds.ground_truth.value_or(Expression{});
    return rec;
}

std::vector<CorpusRecord> read_corpus(std::istream& in)
{
    std::vector<CorpusRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(corpus_record_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_trace_records(const CorpusRecord& rec, std::ostream& out)
{
    for (std::size_t k = 0; k < rec.trace.steps.size(); ++k)
        out << step_json(rec.dataset.id, k, rec.trace.steps[k]).dump() << '\n';
}

} // namespace srmcts
