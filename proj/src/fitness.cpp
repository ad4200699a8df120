#include "evoens/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/core.h>

namespace evoens {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat)
{
    if (y.size() != yhat.size()) {
        throw FitnessError(FitnessErrorKind::LengthMismatch,
            fmt::format("correlation of vectors with lengths {} and {}", y.size(), yhat.size()));
    }
    if (y.size() < 3) {
        throw FitnessError(FitnessErrorKind::TooFewSamples,
            fmt::format("correlation needs at least 3 samples, got {}", y.size()));
    }
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Spread below this fraction of the magnitude is rounding noise around a constant.
bool negligible_spread(std::span<const double> v, double sum_sq_dev)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) {
        return true;
    }
    const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
    return std::sqrt(sum_sq_dev / static_cast<double>(v.size())) <= 1e-12 * scale;
}

FitnessReport product_moment(Metric metric, std::span<const double> y, std::span<const double> yhat)
{
    FitnessReport report;
    report.metric = metric;
    if (!all_finite(y) || !all_finite(yhat)) {
        report.degenerate = true;
        return report;
    }
    const double my = mean(y);
    const double mh = mean(yhat);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double a = y[i] - my;
        const double b = yhat[i] - mh;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if (negligible_spread(y, sxx) || negligible_spread(yhat, syy)) {
        report.degenerate = true;
        return report;
    }
    report.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    report.fitness = std::abs(report.rho);
    return report;
}

} // namespace

std::vector<double> fractional_ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // positions i..j-1 hold equal values; 1-based average rank
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j;
    }
    return ranks;
}

FitnessReport pearson(std::span<const double> y, std::span<const double> yhat)
{
    check_lengths(y, yhat);
    return product_moment(Metric::Pearson, y, yhat);
}

FitnessReport spearman(std::span<const double> y, std::span<const double> yhat)
{
    check_lengths(y, yhat);
    if (!all_finite(y) || !all_finite(yhat)) {
        return FitnessReport{Metric::Spearman, 0.0, std::nullopt, true};
    }
    const auto ry = fractional_ranks(y);
    const auto rh = fractional_ranks(yhat);
    return product_moment(Metric::Spearman, ry, rh);
}

FitnessReport correlate(Metric metric, std::span<const double> y, std::span<const double> yhat)
{
    return metric == Metric::Pearson ? pearson(y, yhat) : spearman(y, yhat);
}

FitnessReport ensemble_fitness(const Expression& expr, const FeatureMatrix& features,
    std::span<const double> truth, Metric metric)
{
    const auto prediction = evaluate(expr, features);
    if (!prediction.finite) {
        check_lengths(truth, prediction.values);
        return FitnessReport{metric, 0.0, std::nullopt, true};
    }
    return correlate(metric, truth, prediction.values);
}

std::vector<double> RegressionModel::predict(const FeatureMatrix& features) const
{
    std::vector<double> out(features.rows(), intercept);
    for (std::size_t c = 0; c < coefficients.size(); ++c) {
        const auto col = features.column(c);
        for (std::size_t r = 0; r < out.size(); ++r) {
            out[r] += coefficients[c] * col[r];
        }
    }
    return out;
}

RegressionModel fit_linear_regression(const FeatureMatrix& features, std::span<const double> truth)
{
    const auto n = features.rows();
    const auto p = features.cols() + 1;
    if (truth.size() != n) {
        throw FitnessError(FitnessErrorKind::LengthMismatch, "truth length differs from feature rows");
    }
    if (n < p) {
        throw FitnessError(FitnessErrorKind::SingularDesign,
            fmt::format("{} rows cannot determine {} coefficients", n, p));
    }

    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    for (std::size_t c = 0; c + 1 < p; ++c) {
        const auto col = features.column(c);
        for (std::size_t r = 0; r < n; ++r) {
            design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c + 1)) = col[r];
        }
    }
    const Eigen::Map<const Eigen::VectorXd> b(truth.data(), static_cast<Eigen::Index>(n));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
        throw FitnessError(FitnessErrorKind::SingularDesign,
            fmt::format("design matrix has rank {} < {} (duplicate or constant feature columns)", qr.rank(), p));
    }
    const Eigen::VectorXd solution = qr.solve(b);

    RegressionModel model;
    model.intercept = solution(0);
    for (std::size_t c = 1; c < p; ++c) {
        model.coefficients.push_back(solution(static_cast<Eigen::Index>(c)));
    }
    return model;
}

std::vector<double> mean_ensemble(const FeatureMatrix& features, std::span<const std::size_t> subset)
{
    if (subset.empty()) {
        throw FitnessError(FitnessErrorKind::EmptySubset, "mean ensemble over an empty column subset");
    }
    std::vector<double> out(features.rows(), 0.0);
    for (const auto c : subset) {
        const auto col = features.column(c);
        for (std::size_t r = 0; r < out.size(); ++r) {
            out[r] += col[r];
        }
    }
    for (auto& v : out) {
        v /= static_cast<double>(subset.size());
    }
    return out;
}

} // namespace evoens
