#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace evoens {

// Dense rows x cols matrix of feature scores, stored column by column so a
// feature column is one contiguous span.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows)
        , cols_(cols)
        , values_(rows * cols, 0.0)
    {
    }

    static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows)
    {
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        FeatureMatrix m(rows.size(), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            assert(rows[r].size() == cols);
            for (std::size_t c = 0; c < cols; ++c) {
                m(r, c) = rows[r][c];
            }
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return values_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[c * rows_ + r]; }

    std::span<const double> column(std::size_t c) const
    {
        return std::span<const double>(values_).subspan(c * rows_, rows_);
    }

    std::vector<double> row(std::size_t r) const
    {
        std::vector<double> out(cols_);
        for (std::size_t c = 0; c < cols_; ++c) {
            out[c] = (*this)(r, c);
        }
        return out;
    }

    FeatureMatrix select_rows(std::span<const std::size_t> indices) const
    {
        FeatureMatrix m(indices.size(), cols_);
        for (std::size_t c = 0; c < cols_; ++c) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                m(i, c) = (*this)(indices[i], c);
            }
        }
        return m;
    }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

} // namespace evoens
