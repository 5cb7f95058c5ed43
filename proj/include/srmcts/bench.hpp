#pragma once

// Benchmark suites: per (dataset, seed) split, campaign and metrics, seed-mean
// then cross-dataset aggregation, and the CSV/JSONL report files.

#include "srmcts/expert_iteration.hpp"
#include "srmcts/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace srmcts {

enum class Aggregate { median, mean };
std::string_view to_string(Aggregate a) noexcept;
Aggregate aggregate_from_string(std::string_view name);

/// Median or mean; NaN for an empty input.
double aggregate(std::vector<double> values, Aggregate how);

struct BenchConfig {
    CampaignConfig campaign; // roster is replaced by each dataset's training split
    std::vector<std::uint64_t> seeds{0, 1, 2};
    Aggregate aggregate = Aggregate::median;
    double solve_threshold = 0.99;
    std::size_t jobs = 1; // concurrent (dataset, seed) jobs
};

struct BenchRow {
    std::string dataset;
    std::uint64_t seed = 0;
    double r2_train = 0.0;
    double r2_test = 0.0;
    std::size_t size = 0;
    bool solved = false;
    std::size_t evaluations = 0;
    double wall_time = 0.0;
    std::optional<Expression> expression; // simplified best
    std::vector<TrialRecord> trials;
};

struct DatasetAggregate {
    std::string dataset;
    double r2_train = 0.0; // seed means
    double r2_test = 0.0;
    double size = 0.0;
    double solve_rate = 0.0;
    double evaluations = 0.0;
};

struct SuiteAggregate {
    double r2_train = 0.0;
    double r2_test = 0.0;
    double size = 0.0;
    double solve_rate = 0.0;
    double evaluations = 0.0;
};

struct SkippedDataset {
    std::string dataset;
    std::string reason;
};

struct BenchReport {
    std::vector<BenchRow> rows; // suite order, then seed order
    std::vector<DatasetAggregate> per_dataset;
    SuiteAggregate suite;
    std::vector<SkippedDataset> skipped;
};

/// Metrics of one (dataset, seed) job. The campaign only ever sees the training split.
BenchRow run_one(const Dataset& ds, std::uint64_t seed, const BenchConfig& cfg, const ModelSnapshot& initial,
                 const std::vector<MutationEntry>& corpus = {});

/// Seed means per dataset, then `how` across datasets. Infinite R² values are
/// clamped to [-1, 1] before averaging so one invalid run cannot swamp the mean.
std::vector<DatasetAggregate> per_dataset_means(const std::vector<BenchRow>& rows);
SuiteAggregate aggregate_suite(const std::vector<DatasetAggregate>& per_dataset, Aggregate how);

/// Runs every *.csv in `suite` (sorted by file name) and writes summary.csv,
/// timings.csv, aggregate.csv, curves.jsonl, pareto.csv, expressions.csv and
/// skipped.csv into `out`. Unreadable datasets are skipped and reported.
/// In single-threaded runs the summary's wall_time column is 0 so reruns are
/// byte-identical; timings.csv carries the measured times.
BenchReport run_benchmark(const std::filesystem::path& suite, const BenchConfig& cfg, const ModelSnapshot& initial,
                          const std::filesystem::path& out, const std::vector<MutationEntry>& corpus = {},
                          std::ostream* log = nullptr);

/// summary.csv layout.
void write_summary_csv(const std::vector<BenchRow>& rows, bool with_wall_time, std::ostream& out);

struct LabeledMetrics {
    std::string label;
    double accuracy = 0.0;
    double size = 0.0;
};

/// Reads a CSV with columns label, accuracy, size (any order, extra columns ignored).
std::vector<LabeledMetrics> read_metrics_csv(std::istream& in);
/// label,accuracy,size,rank with rank from pareto_ranks on (-accuracy, size).
void write_pareto_csv(const std::vector<LabeledMetrics>& points, std::ostream& out);

/// Shortest round-trip representation used in every CSV.
std::string format_real(double v);

} // namespace srmcts
