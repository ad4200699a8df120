#include "evoens/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "evoens/random.hpp"
#include "bundled_text.hpp"

namespace evoens {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    for (;;) {
        const auto comma = line.find(',');
        out.push_back(trim(line.substr(0, comma)));
        if (comma == std::string_view::npos) {
            return out;
        }
        line.remove_prefix(comma + 1);
    }
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> parse_number(std::string_view s)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.features = features.select_rows(indices);
    for (const auto i : indices) {
        out.case_ids.push_back(case_ids.at(i));
        out.truth.push_back(truth.at(i));
    }
    return out;
}

Dataset parse_csv(std::string_view text, std::string name)
{
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const auto line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty()) {
            lines.emplace_back(line_no, line);
        }
    }
    if (lines.empty()) {
        throw DataError(DataErrorKind::EmptyDataset, fmt::format("{}: no header row", name));
    }

    const auto header = split_fields(lines.front().second);
    std::optional<std::size_t> response_col;
    std::optional<std::size_t> id_col;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto key = lower(header[c]);
        if (key == "response" && !response_col) {
            response_col = c;
        } else if (key == "id" && !id_col) {
            id_col = c;
        } else {
            feature_cols.push_back(c);
        }
    }
    if (!response_col) {
        throw DataError(DataErrorKind::MissingResponseColumn, fmt::format("{}: header has no 'response' column", name));
    }

    Dataset d;
    d.name = std::move(name);
    for (const auto c : feature_cols) {
        d.feature_names.emplace_back(header[c]);
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto [file_line, line] = lines[r];
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError(DataErrorKind::RaggedRow,
                fmt::format("{}: line {} has {} fields, header has {}", d.name, file_line, fields.size(), header.size()));
        }
        auto number = [&](std::size_t c) {
            const auto v = parse_number(fields[c]);
            if (!v) {
                throw DataError(DataErrorKind::NonNumericCell,
                    fmt::format("{}: line {}, column '{}': '{}' is not a finite number", d.name, file_line, header[c], fields[c]));
            }
            return *v;
        };
        d.truth.push_back(number(*response_col));
        std::vector<double> row;
        for (const auto c : feature_cols) {
            row.push_back(number(c));
        }
        rows.push_back(std::move(row));
        d.case_ids.push_back(id_col ? std::string(fields[*id_col]) : fmt::format("row{}", r));
    }
    if (rows.empty()) {
        throw DataError(DataErrorKind::EmptyDataset, fmt::format("{}: no data rows", d.name));
    }
    d.features = FeatureMatrix::from_rows(rows);
    if (feature_cols.empty()) {
        d.features = FeatureMatrix(rows.size(), 0);
    }
    return d;
}

Dataset load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataErrorKind::FileNotFound, fmt::format("cannot open '{}'", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path.stem().string());
}

std::string to_csv(const Dataset& d)
{
    std::string out = "id,response";
    for (const auto& n : d.feature_names) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (std::size_t r = 0; r < d.rows(); ++r) {
        out += fmt::format("{},{:.3f}", d.case_ids[r], d.truth[r]);
        for (std::size_t c = 0; c < d.features.cols(); ++c) {
            out += fmt::format(",{:.3f}", d.features(r, c));
        }
        out += '\n';
    }
    return out;
}

std::uint64_t checksum(const Dataset& dataset)
{
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : to_csv(dataset)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t truth_out_of_range(const Dataset& dataset)
{
    return static_cast<std::size_t>(
        std::count_if(dataset.truth.begin(), dataset.truth.end(), [](double v) { return v < 0.0 || v > 1.0; }));
}

DatasetSplit split(const Dataset& dataset, double train_fraction, std::uint64_t seed)
{
    const auto n = dataset.rows();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError(DataErrorKind::SplitTooSmall, fmt::format("train fraction {} is outside (0, 1)", train_fraction));
    }
    if (n < 3) {
        throw DataError(DataErrorKind::SplitTooSmall, fmt::format("{} rows are too few to split", n));
    }
    // The epsilon keeps products such as 0.7 * 30 from rounding up past an integer.
    const auto train_count = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    if (train_count == 0 || train_count >= n) {
        throw DataError(DataErrorKind::SplitTooSmall,
            fmt::format("fraction {} of {} rows leaves one side empty", train_fraction, n));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
    }

    DatasetSplit s;
    s.training.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    std::sort(s.training.begin(), s.training.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
}

namespace {

struct BundledEntry {
    std::string_view name;
    const std::string_view* text;
    std::uint64_t checksum;
};

// Frozen FNV-1a digests of the canonical CSV form of each transcription.
constexpr BundledEntry kBundled[] = {
    {"mc30", &bundled_text::mc30, 0x0693d91d3451aeacull},
    {"geresid50", &bundled_text::geresid50, 0x39ce6715118131a5ull},
};

const BundledEntry& find_bundled(std::string_view name)
{
    for (const auto& e : kBundled) {
        if (e.name == name) {
            return e;
        }
    }
    throw DataError(DataErrorKind::UnknownDataset,
        fmt::format("no bundled dataset named '{}' (available: mc30, geresid50)", name));
}

} // namespace

Dataset bundled(std::string_view name)
{
    const auto& entry = find_bundled(name);
    auto d = parse_csv(*entry.text, std::string(entry.name));
    if (truth_out_of_range(d) > 0) {
        throw DataError(DataErrorKind::TruthOutOfRange, fmt::format("bundled dataset {} has truth outside [0, 1]", name));
    }
    return d;
}

std::vector<std::string> bundled_names()
{
    std::vector<std::string> out;
    for (const auto& e : kBundled) {
        out.emplace_back(e.name);
    }
    return out;
}

std::uint64_t bundled_checksum(std::string_view name) { return find_bundled(name).checksum; }

namespace {

constexpr ReferenceScore kMc30Pcc[] = {
    {"Google distance", 0.470}, {"Huang et al.", 0.659}, {"J & C", 0.669}, {"Resnik", 0.780},
    {"Bert-Cos", 0.740}, {"Bert-Man", 0.744}, {"Bert-Euc", 0.751}, {"Bert-Inn", 0.728}, {"Bert-Ang", 0.746},
    {"LR", 0.757}, {"TGP", 0.757}, {"LGP", 0.845}, {"CGP", 0.777}, {"GE", 0.794}, {"GE-i", 0.752},
};

constexpr ReferenceScore kMc30Srcc[] = {
    {"Aouicha et al.", 0.640}, {"J & C", 0.669}, {"Lin", 0.619}, {"Resnik", 0.757},
    {"Bert-Cos", 0.701}, {"Bert-Man", 0.689}, {"Bert-Euc", 0.718}, {"Bert-Inn", 0.711}, {"Bert-Ang", 0.701},
    {"LR", 0.770}, {"TGP", 0.758}, {"LGP", 0.822}, {"CGP", 0.766}, {"GE", 0.859}, {"GE-i", 0.827},
};

constexpr ReferenceScore kGeresidPcc[] = {
    {"Aouicha et al.", 0.640}, {"Deerwester et al.", 0.594}, {"Han et al.", 0.490}, {"Han et al. v2", 0.630},
    {"Bert-Cos", 0.725}, {"Bert-Man", 0.706}, {"Bert-Euc", 0.711}, {"Bert-Inn", 0.735}, {"Bert-Ang", 0.722},
    {"LR", 0.736}, {"TGP", 0.735}, {"LGP", 0.756}, {"CGP", 0.738}, {"GE", 0.743}, {"GE-i", 0.735},
};

constexpr ReferenceScore kGeresidSrcc[] = {
    {"Gabrilovich", 0.680}, {"J & C", 0.310}, {"Lin", 0.390}, {"Resnik", 0.260},
    {"Bert-Cos", 0.724}, {"Bert-Man", 0.715}, {"Bert-Euc", 0.727}, {"Bert-Inn", 0.740}, {"Bert-Ang", 0.724},
    {"LR", 0.744}, {"TGP", 0.740}, {"LGP", 0.752}, {"CGP", 0.745}, {"GE", 0.779}, {"GE-i", 0.740},
};

// The LR entries sit far below every single measure, which in-sample least
// squares cannot produce; they come from an unrecoverable out-of-sample split.
constexpr ReferenceScore kWs353Pcc[] = {
    {"Rada et al.", 0.340}, {"Leacock et al.", 0.349}, {"Wu and Palmer", 0.361}, {"Resnik", 0.385},
    {"Bert-Cos", 0.810}, {"Bert-Man", 0.752}, {"Bert-Euc", 0.762}, {"Bert-Inn", 0.811}, {"Bert-Ang", 0.777},
    {"LR", 0.262, false}, {"TGP", 0.811}, {"LGP", 0.817}, {"CGP", 0.811}, {"GE", 0.827}, {"GE-i", 0.811},
};

constexpr ReferenceScore kWs353Srcc[] = {
    {"Rada et al.", 0.314}, {"Leacock et al.", 0.314}, {"Wu and Palmer", 0.348}, {"Resnik", 0.347},
    {"Bert-Cos", 0.817}, {"Bert-Man", 0.792}, {"Bert-Euc", 0.817}, {"Bert-Inn", 0.817}, {"Bert-Ang", 0.817},
    {"LR", 0.470, false}, {"TGP", 0.812}, {"LGP", 0.817}, {"CGP", 0.812}, {"GE", 0.817}, {"GE-i", 0.804},
};

} // namespace

std::span<const ReferenceScore> reference_scores(std::string_view dataset, Metric metric)
{
    const bool pcc = metric == Metric::Pearson;
    if (dataset == "mc30") {
        return pcc ? std::span<const ReferenceScore>(kMc30Pcc) : std::span<const ReferenceScore>(kMc30Srcc);
    }
    if (dataset == "geresid50") {
        return pcc ? std::span<const ReferenceScore>(kGeresidPcc) : std::span<const ReferenceScore>(kGeresidSrcc);
    }
    if (dataset == "ws353") {
        return pcc ? std::span<const ReferenceScore>(kWs353Pcc) : std::span<const ReferenceScore>(kWs353Srcc);
    }
    return {};
}

std::optional<ReferenceScore> reference_score(std::string_view dataset, Metric metric, std::string_view method)
{
    for (const auto& r : reference_scores(dataset, metric)) {
        if (r.method == method) {
            return r;
        }
    }
    return std::nullopt;
}

} // namespace evoens
