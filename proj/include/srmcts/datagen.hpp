#pragma once

// Synthetic (dataset, ground-truth expression) pairs and the imitation corpus
// built from their dismantling traces.

#include "srmcts/dataset.hpp"
#include "srmcts/mutation.hpp"
#include "srmcts/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace srmcts {

struct MixtureConfig {
    int max_components = 3;
    double mean_stddev = 2.0;
    double variance_lo = 0.5;
    double variance_hi = 2.0;
};

struct GenConfig {
    int d_min = 1;
    int d_max = 10;
    std::size_t n_points = 200;
    int internal_min = 5;
    int internal_max = 25;
    double leaf_constant_prob = 0.2;
    double constant_stddev = 1.0;
    MixtureConfig mixture;
    ConstraintConfig constraints;
    DatasetSource source = DatasetSource::synthetic_in_domain;
    int max_attempts = 100;

    static GenConfig in_domain() { return {}; }
    static GenConfig out_of_domain();

    /// Throws std::invalid_argument on empty ranges or n_points < 2.
    void check() const;
};

/// Diagonal Gaussian mixture; rows are (k x d) for means and variances.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> variances;

    int dims() const noexcept { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    std::vector<double> mean() const;
    std::vector<double> variance() const; // per-dimension variance of the mixture
};

GaussianMixture sample_mixture(const MixtureConfig& cfg, int d, Rng& rng);
Matrix sample_inputs(const GaussianMixture& mix, std::size_t n, Rng& rng);
/// Draws a fresh mixture and then n rows from it. Throws std::invalid_argument
/// unless n >= 1 and 1 <= d <= 10.
Matrix sample_inputs(const GenConfig& cfg, std::size_t n, int d, Rng& rng);

/// Number of unary-binary tree shapes with `internal` operator nodes where no
/// unary node sits below another unary node.
double count_shapes(int internal);

struct GenStats {
    std::size_t rejected_expressions = 0;
    std::size_t rejected_examples = 0;
};

struct SampledExpression {
    Expression raw;        // before simplification
    Expression simplified; // what gets used as f*
    int internal_nodes = 0;
};

/// Throws DegenerateSample after cfg.max_attempts failed draws.
SampledExpression sample_expression_detailed(const GenConfig& cfg, int d, Rng& rng, GenStats* stats = nullptr);
Expression sample_expression(const GenConfig& cfg, int d, Rng& rng);

/// Throws DegenerateSample after cfg.max_attempts rejected examples.
Dataset make_example(const GenConfig& cfg, Rng& rng, std::string id = {}, GenStats* stats = nullptr);

struct CorpusRecord {
    Dataset dataset; // carries ground_truth
    MutationTrace trace;
};

/// Record `index` of a corpus is generated from its own stream of `seed`.
CorpusRecord make_corpus_record(const GenConfig& cfg, std::size_t goal, std::uint64_t seed, std::size_t index,
                                GenStats* stats = nullptr);

struct CorpusSummary {
    std::size_t records = 0;
    std::map<std::size_t, std::size_t> trace_length_histogram;
    std::size_t rejected_expressions = 0;
    std::size_t rejected_examples = 0;
    std::size_t total_steps = 0;
};

/// Writes `count` JSONL records. I/O failures throw std::runtime_error.
CorpusSummary build_corpus(const GenConfig& cfg, std::size_t count, std::size_t goal, std::uint64_t seed,
                           std::ostream& sink);

std::string corpus_record_to_json(const CorpusRecord& rec);
/// Throws std::runtime_error / ParseError on malformed lines.
CorpusRecord corpus_record_from_json(const std::string& line);
std::vector<CorpusRecord> read_corpus(std::istream& in);

/// Flat trace records {dataset_id, step_index, state_prefix_tokens, action_tokens}.
void write_trace_records(const CorpusRecord& rec, std::ostream& out);

/// Replaces every constant by its four-significant-digit token value.
Expression round_constants(const Expression& expr);

} // namespace srmcts
