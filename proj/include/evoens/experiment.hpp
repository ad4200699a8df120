#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evoens/data.hpp"
#include "evoens/evolution.hpp"
#include "evoens/grammar.hpp"
#include "evoens/metric.hpp"

namespace evoens {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Builtin grammars: "ensemble" and "ensemble_interp".
std::string_view builtin_grammar_text(std::string_view name);
bool is_builtin_grammar(std::string_view name);

// Depth cap applied to the interpretable grammar unless set explicitly.
inline constexpr std::size_t kInterpretableMaxTreeDepth = 8;

struct ExperimentConfig {
    std::string dataset = "mc30";     // bundled name or CSV path
    std::string grammar = "ensemble"; // builtin name or BNF path
    Metric metric = Metric::Spearman;
    std::size_t runs = 30;
    std::uint64_t base_seed = 1;
    EvolutionConfig evolution;         // rng_seed is replaced per run
    bool max_tree_depth_explicit = false;
    std::filesystem::path output_dir = "out";
    double split_fraction = kDefaultTrainFraction;
    std::uint64_t split_seed = 1;
    std::size_t threads = 1;

    void validate() const;
};

// Applies one key=value setting. Keys follow the run-parameter names
// (POPULATION_SIZE, GENERATIONS, CROSSOVER_PROBABILITY, ...); operator keys
// such as SELECTION accept only the value this engine implements.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// Flat key=value text; '#' starts a comment line.
void apply_config_text(ExperimentConfig& config, std::string_view text);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

// Resolved inputs of an experiment.
struct ExperimentInputs {
    Dataset dataset;
    Grammar grammar;
    std::string grammar_label; // builtin name or path
    std::string variant;       // "GE", "GE-i" or "custom"
    EvolutionConfig evolution;
    DatasetSplit split;
};

ExperimentInputs resolve_inputs(const ExperimentConfig& config);

// Bundled name or path to a CSV file.
Dataset resolve_dataset(std::string_view spec);

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Linear interpolation between order statistics at position q * (n - 1).
double quantile(std::span<const double> sorted, double q);
FiveNumberSummary five_number_summary(std::vector<double> values);

struct BatchSummary {
    std::string dataset;
    Metric metric = Metric::Spearman;
    std::string variant;
    std::vector<std::uint64_t> seeds;
    std::vector<double> validation_fitness; // an invalid validation score counts as 0
    std::vector<double> training_fitness;
    std::vector<std::size_t> node_counts;
    FiveNumberSummary summary;
    std::size_t best_run = 0; // index of the highest validation fitness
    std::string best_formula;
    std::optional<ReferenceScore> reference;
    std::vector<RunRecord> records;
};

// Directory that receives a batch: <output_dir>/<dataset>_<metric>.
std::filesystem::path batch_directory(const ExperimentConfig& config, std::string_view dataset_name);

// Runs seeds base_seed .. base_seed + runs - 1 and writes, per run,
// run_<seed>/{avg_fitness,avg_genome_length,avg_tree_nodes,best_fitness}.txt,
// formula.txt and record.json, plus summary.json and summary.txt for the batch.
// The batch directory is removed if anything fails. `log` may be null.
BatchSummary run_experiment(const ExperimentConfig& config, std::ostream* log);

// Runs the batch without touching the filesystem.
BatchSummary run_batch(const ExperimentConfig& config, const ExperimentInputs& inputs);

std::string format_summary(const BatchSummary& summary);

// Formula file: '#' header lines recording provenance, then the expression.
std::string formula_file_text(const RunRecord& record, std::string_view dataset_name);
void export_formula(const RunRecord& record, std::string_view dataset_name, const std::filesystem::path& path);
std::string read_formula_file(const std::filesystem::path& path);

struct BaselineRow {
    std::string label;
    std::optional<double> full;       // rho over every row
    std::optional<double> validation; // rho over the validation split
    std::optional<ReferenceScore> reference;
};

struct BaselineReport {
    std::string dataset;
    Metric metric = Metric::Pearson;
    std::vector<BaselineRow> rows;
};

// Per-feature correlations, linear regression trained on the training split,
// and the mean of the cosine, Manhattan and Euclidean columns (x0..x2).
BaselineReport report_baselines(const Dataset& dataset, Metric metric, const DatasetSplit& split);
std::string format_baselines(const BaselineReport& report);

} // namespace evoens
