#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evoens/matrix.hpp"
#include "evoens/metric.hpp"

namespace evoens {

enum class DataErrorKind {
    FileNotFound,
    MissingResponseColumn,
    NonNumericCell,
    RaggedRow,
    EmptyDataset,
    SplitTooSmall,
    UnknownDataset,
    TruthOutOfRange,
};

class DataError : public std::runtime_error {
public:
    DataError(DataErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , kind_(kind)
    {
    }

    DataErrorKind kind() const noexcept { return kind_; }

private:
    DataErrorKind kind_;
};

struct Dataset {
    std::string name;
    std::vector<std::string> case_ids;
    std::vector<double> truth;
    FeatureMatrix features;
    std::vector<std::string> feature_names;

    std::size_t rows() const noexcept { return truth.size(); }
    Dataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetSplit {
    std::vector<std::size_t> training;   // ascending row indices
    std::vector<std::size_t> validation; // ascending row indices

    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

inline constexpr double kDefaultTrainFraction = 0.7;

// CSV with a header row. The `response` column is the truth, an optional `id`
// column holds case ids, and every other column is a feature in file order.
Dataset parse_csv(std::string_view text, std::string name);
Dataset load_csv(const std::filesystem::path& path);

// Canonical CSV text: id,response,<feature names>, values with 3 decimals.
std::string to_csv(const Dataset& dataset);

// FNV-1a 64 over to_csv(dataset).
std::uint64_t checksum(const Dataset& dataset);

// Number of truth values outside [0, 1].
std::size_t truth_out_of_range(const Dataset& dataset);

// Seeded Fisher-Yates shuffle, then the first ceil(fraction * rows) rows train.
DatasetSplit split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

// Benchmarks transcribed from published tables: "mc30" and "geresid50".
Dataset bundled(std::string_view name);
std::vector<std::string> bundled_names();
std::uint64_t bundled_checksum(std::string_view name);

// Canonical feature column names of the bundled sets, in x0..x4 order.
inline constexpr std::string_view kBertFeatureNames[] = {"Bert-Cos", "Bert-Man", "Bert-Euc", "Bert-Inn", "Bert-Ang"};

struct ReferenceScore {
    std::string_view method;
    double value;
    bool reproducible = true; // false for values that depend on an unknown split
};

// Published medians per dataset ("mc30", "geresid50", "ws353") and metric.
std::span<const ReferenceScore> reference_scores(std::string_view dataset, Metric metric);
std::optional<ReferenceScore> reference_score(std::string_view dataset, Metric metric, std::string_view method);

} // namespace evoens
