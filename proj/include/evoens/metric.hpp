#pragma once

#include <optional>
#include <string_view>

namespace evoens {

enum class Metric { Pearson, Spearman };

constexpr std::string_view metric_name(Metric m) noexcept { return m == Metric::Pearson ? "pcc" : "srcc"; }

constexpr std::optional<Metric> parse_metric(std::string_view s) noexcept
{
    if (s == "pcc" || s == "PCC" || s == "pearson") {
        return Metric::Pearson;
    }
    if (s == "srcc" || s == "SRCC" || s == "spearman") {
        return Metric::Spearman;
    }
    return std::nullopt;
}

} // namespace evoens
