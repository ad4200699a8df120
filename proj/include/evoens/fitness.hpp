#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "evoens/matrix.hpp"
#include "evoens/metric.hpp"
#include "evoens/phenotype.hpp"

namespace evoens {

enum class FitnessErrorKind { LengthMismatch, TooFewSamples, SingularDesign, EmptySubset };

class FitnessError : public std::runtime_error {
public:
    FitnessError(FitnessErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , kind_(kind)
    {
    }

    FitnessErrorKind kind() const noexcept { return kind_; }

private:
    FitnessErrorKind kind_;
};

struct FitnessReport {
    Metric metric = Metric::Pearson;
    double rho = 0.0;                // raw correlation, 0 when degenerate
    std::optional<double> fitness;   // |rho|; empty when degenerate
    bool degenerate = false;         // zero variance or non-finite input
};

// Product-moment correlation. Requires equal lengths >= 3.
FitnessReport pearson(std::span<const double> y, std::span<const double> yhat);

// Pearson correlation of fractional ranks (ties share their average rank).
FitnessReport spearman(std::span<const double> y, std::span<const double> yhat);

FitnessReport correlate(Metric metric, std::span<const double> y, std::span<const double> yhat);

// 1-based ranks; tied values receive the mean of the positions they span.
std::vector<double> fractional_ranks(std::span<const double> values);

// |rho(truth, expr(features))|; degenerate when the prediction is non-finite
// or has zero variance.
FitnessReport ensemble_fitness(const Expression& expr, const FeatureMatrix& features,
    std::span<const double> truth, Metric metric);

struct RegressionModel {
    std::vector<double> coefficients; // one per feature column
    double intercept = 0.0;

    std::vector<double> predict(const FeatureMatrix& features) const;
};

// Ordinary least squares with an intercept. Throws SingularDesign when the
// design matrix is rank deficient at a relative tolerance of 1e-10.
RegressionModel fit_linear_regression(const FeatureMatrix& features, std::span<const double> truth);

// Row-wise mean of the selected columns.
std::vector<double> mean_ensemble(const FeatureMatrix& features, std::span<const std::size_t> subset);

} // namespace evoens
