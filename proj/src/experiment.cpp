#include "evoens/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "evoens/fitness.hpp"
#include "bundled_text.hpp"

namespace evoens {

namespace fs = std::filesystem;

std::string_view builtin_grammar_text(std::string_view name)
{
    if (name == "ensemble") {
        return bundled_text::ensemble_grammar;
    }
    if (name == "ensemble_interp") {
        return bundled_text::ensemble_interp_grammar;
    }
    throw UsageError(fmt::format("no builtin grammar named '{}' (available: ensemble, ensemble_interp)", name));
}

bool is_builtin_grammar(std::string_view name) { return name == "ensemble" || name == "ensemble_interp"; }

void ExperimentConfig::validate() const
{
    if (runs < 1) {
        throw UsageError("RUNS must be at least 1");
    }
    if (threads < 1) {
        throw UsageError("THREADS must be at least 1");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw UsageError(fmt::format("SPLIT must lie in (0, 1), got {}", split_fraction));
    }
    try {
        evolution.validate();
    } catch (const EngineError& e) {
        throw UsageError(e.what());
    }
}

namespace {

std::string upper(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::replace(out.begin(), out.end(), '-', '_');
    return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view value)
{
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
        throw UsageError(fmt::format("{}: '{}' is not a valid value", key, value));
    }
    return out;
}

void require_value(std::string_view key, std::string_view value, std::string_view supported)
{
    if (value != supported) {
        throw UsageError(fmt::format("{}={} is not supported; only {} is implemented", key, value, supported));
    }
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

void apply_setting(ExperimentConfig& config, std::string_view raw_key, std::string_view raw_value)
{
    const auto key = upper(trim(raw_key));
    const auto value = trim(raw_value);
    auto& evo = config.evolution;

    if (key == "POPULATION_SIZE") {
        evo.population_size = parse_value<std::size_t>(key, value);
    } else if (key == "GENERATIONS") {
        evo.generations = parse_value<std::size_t>(key, value);
    } else if (key == "CROSSOVER_PROBABILITY") {
        evo.crossover_probability = parse_value<double>(key, value);
    } else if (key == "MUTATION_PROBABILITY") {
        evo.mutation_probability = parse_value<double>(key, value);
    } else if (key == "TOURNAMENT_SIZE") {
        evo.tournament_size = parse_value<std::size_t>(key, value);
    } else if (key == "ELITE_SIZE") {
        evo.elite_count = parse_value<std::size_t>(key, value);
    } else if (key == "MAX_GENOME_LENGTH") {
        evo.max_genome_length = parse_value<std::size_t>(key, value);
    } else if (key == "MAX_INIT_TREE_DEPTH") {
        evo.max_init_tree_depth = parse_value<std::size_t>(key, value);
    } else if (key == "MAX_TREE_DEPTH") {
        evo.max_tree_depth = parse_value<std::size_t>(key, value);
        config.max_tree_depth_explicit = true;
    } else if (key == "CODON_SIZE") {
        evo.codon_domain = parse_value<Codon>(key, value);
    } else if (key == "CROSSOVER") {
        require_value(key, value, "variable_onepoint");
    } else if (key == "INITIALISATION") {
        require_value(key, value, "PI_grow");
    } else if (key == "INVALID_SELECTION") {
        require_value(key, value, "False");
    } else if (key == "MUTATION") {
        require_value(key, value, "int_flip_per_codon");
    } else if (key == "FITNESS_FUNCTION") {
        require_value(key, value, "max");
    } else if (key == "REPLACEMENT") {
        require_value(key, value, "generational");
    } else if (key == "SELECTION") {
        require_value(key, value, "tournament");
    } else if (key == "DATASET") {
        config.dataset = std::string(value);
    } else if (key == "GRAMMAR") {
        config.grammar = std::string(value);
    } else if (key == "METRIC") {
        const auto m = parse_metric(value);
        if (!m) {
            throw UsageError(fmt::format("METRIC must be pcc or srcc, got '{}'", value));
        }
        config.metric = *m;
    } else if (key == "RUNS") {
        config.runs = parse_value<std::size_t>(key, value);
    } else if (key == "RANDOM_SEED" || key == "SEED") {
        config.base_seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "SPLIT") {
        config.split_fraction = parse_value<double>(key, value);
    } else if (key == "SPLIT_SEED") {
        config.split_seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "OUT" || key == "OUTPUT") {
        config.output_dir = std::string(value);
    } else if (key == "THREADS") {
        config.threads = parse_value<std::size_t>(key, value);
    } else {
        throw UsageError(fmt::format("unknown setting '{}'", raw_key));
    }
}

void apply_config_text(ExperimentConfig& config, std::string_view text)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const auto line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(fmt::format("config line {}: expected key=value", line_no));
        }
        apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    }
}

void apply_config_file(ExperimentConfig& config, const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot open config file '{}'", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(config, buffer.str());
}

Dataset resolve_dataset(std::string_view spec)
{
    const auto names = bundled_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) {
        return bundled(spec);
    }
    if (spec.find('/') == std::string_view::npos && spec.find('.') == std::string_view::npos) {
        return bundled(spec); // raises UnknownDataset
    }
    return load_csv(fs::path(spec));
}

namespace {

Grammar load_grammar(const std::string& spec)
{
    if (is_builtin_grammar(spec)) {
        return Grammar::parse(builtin_grammar_text(spec));
    }
    std::ifstream file{fs::path(spec)};
    if (!file) {
        throw UsageError(fmt::format("cannot open grammar file '{}'", spec));
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return Grammar::parse(buffer.str());
}

} // namespace

ExperimentInputs resolve_inputs(const ExperimentConfig& config)
{
    config.validate();
    ExperimentInputs in{resolve_dataset(config.dataset), load_grammar(config.grammar), config.grammar, "custom",
        config.evolution, {}};
    if (config.grammar == "ensemble") {
        in.variant = "GE";
    } else if (config.grammar == "ensemble_interp") {
        in.variant = "GE-i";
        if (!config.max_tree_depth_explicit) {
            in.evolution.max_tree_depth = kInterpretableMaxTreeDepth;
        }
    }
    in.split = split(in.dataset, config.split_fraction, config.split_seed);
    return in;
}

double quantile(std::span<const double> sorted, double q)
{
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

FiveNumberSummary five_number_summary(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    FiveNumberSummary s;
    if (values.empty()) {
        return s;
    }
    s.min = values.front();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.max = values.back();
    return s;
}

fs::path batch_directory(const ExperimentConfig& config, std::string_view dataset_name)
{
    return config.output_dir / fmt::format("{}_{}", dataset_name, metric_name(config.metric));
}

BatchSummary run_batch(const ExperimentConfig& config, const ExperimentInputs& inputs)
{
    std::vector<RunRecord> records(config.runs);
    std::vector<std::exception_ptr> errors(config.runs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < config.runs; i = next.fetch_add(1)) {
            try {
                auto evo = inputs.evolution;
                evo.rng_seed = config.base_seed + i;
                records[i] = run(inputs.grammar, inputs.dataset, inputs.split, evo, config.metric);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n = std::min(config.threads, config.runs);
        for (std::size_t t = 1; t < n; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    BatchSummary s;
    s.dataset = inputs.dataset.name;
    s.metric = config.metric;
    s.variant = inputs.variant;
    for (const auto& r : records) {
        s.seeds.push_back(r.seed);
        s.validation_fitness.push_back(r.validation_fitness.value_or(0.0));
        s.training_fitness.push_back(r.training_fitness.value_or(0.0));
        s.node_counts.push_back(r.best.node_count);
    }
    s.summary = five_number_summary(s.validation_fitness);
    s.best_run = static_cast<std::size_t>(
        std::max_element(s.validation_fitness.begin(), s.validation_fitness.end()) - s.validation_fitness.begin());
    s.best_formula = records[s.best_run].formula;
    if (inputs.variant != "custom") {
        s.reference = reference_score(s.dataset, config.metric, inputs.variant);
    }
    s.records = std::move(records);
    return s;
}

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    }
}

template <typename Get>
std::string stats_series(const std::vector<GenerationStats>& stats, Get get)
{
    std::string out;
    for (const auto& s : stats) {
        out += fmt::format("{} {:.6f}\n", s.generation, get(s));
    }
    return out;
}

nlohmann::json config_json(const EvolutionConfig& c)
{
    nlohmann::json j;
    j["POPULATION_SIZE"] = c.population_size;
    j["GENERATIONS"] = c.generations;
    j["CROSSOVER"] = "variable_onepoint";
    j["CROSSOVER_PROBABILITY"] = c.crossover_probability;
    j["MUTATION"] = "int_flip_per_codon";
    j["MUTATION_PROBABILITY"] = c.mutation_probability ? nlohmann::json(*c.mutation_probability) : nlohmann::json("1/genome_length");
    j["TOURNAMENT_SIZE"] = c.tournament_size;
    j["ELITE_SIZE"] = c.elite_count;
    j["MAX_GENOME_LENGTH"] = c.max_genome_length;
    j["MAX_INIT_TREE_DEPTH"] = c.max_init_tree_depth;
    j["MAX_TREE_DEPTH"] = c.max_tree_depth;
    j["CODON_SIZE"] = c.codon_domain;
    j["INITIALISATION"] = "PI_grow";
    j["INVALID_SELECTION"] = "False";
    j["REPLACEMENT"] = "generational";
    j["SELECTION"] = "tournament";
    j["FITNESS_FUNCTION"] = "max";
    j["RANDOM_SEED"] = c.rng_seed;
    return j;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json record_json(const RunRecord& r, const ExperimentInputs& inputs)
{
    nlohmann::json j;
    j["dataset"] = inputs.dataset.name;
    j["grammar"] = inputs.grammar_label;
    j["variant"] = inputs.variant;
    j["metric"] = std::string(metric_name(r.metric));
    j["seed"] = r.seed;
    j["config"] = config_json(r.config);
    j["split"] = {{"training", r.split.training}, {"validation", r.split.validation}};
    j["best"] = {
        {"genome", r.best.genome},
        {"formula", r.formula},
        {"node_count", r.best.node_count},
        {"depth", r.best.depth},
    };
    j["training_fitness"] = optional_json(r.training_fitness);
    j["validation_fitness"] = optional_json(r.validation_fitness);
    auto& stats = j["stats"] = nlohmann::json::array();
    for (const auto& s : r.stats) {
        stats.push_back({
            {"generation", s.generation},
            {"average_fitness", s.average_fitness},
            {"average_genome_length", s.average_genome_length},
            {"average_tree_nodes", s.average_tree_nodes},
            {"best_fitness", s.best_fitness},
            {"invalid_count", s.invalid_count},
        });
    }
    return j;
}

nlohmann::json summary_json(const BatchSummary& s, const ExperimentConfig& config)
{
    nlohmann::json j;
    j["dataset"] = s.dataset;
    j["metric"] = std::string(metric_name(s.metric));
    j["variant"] = s.variant;
    j["runs"] = s.seeds.size();
    j["split"] = {{"fraction", config.split_fraction}, {"seed", config.split_seed}};
    j["seeds"] = s.seeds;
    j["validation_fitness"] = s.validation_fitness;
    j["training_fitness"] = s.training_fitness;
    j["node_counts"] = s.node_counts;
    j["five_number_summary"] = {
        {"min", s.summary.min},
        {"q1", s.summary.q1},
        {"median", s.summary.median},
        {"q3", s.summary.q3},
        {"max", s.summary.max},
    };
    j["best_run_seed"] = s.seeds.at(s.best_run);
    j["best_formula"] = s.best_formula;
    if (s.reference) {
        j["reference"] = {
            {"method", std::string(s.reference->method)},
            {"median", s.reference->value},
            {"delta", s.summary.median - s.reference->value},
        };
    }
    return j;
}

} // namespace

std::string format_summary(const BatchSummary& s)
{
    std::string out = fmt::format("{} {} {} over {} runs (validation fitness)\n", s.variant, s.dataset,
        metric_name(s.metric), s.seeds.size());
    out += fmt::format("  min {:.3f}  q1 {:.3f}  median {:.3f}  q3 {:.3f}  max {:.3f}\n", s.summary.min, s.summary.q1,
        s.summary.median, s.summary.q3, s.summary.max);
    if (s.reference) {
        out += fmt::format("  published median {:.3f}  delta {:+.3f}\n", s.reference->value,
            s.summary.median - s.reference->value);
    }
    out += fmt::format("  best run seed {}: {}\n", s.seeds.at(s.best_run), s.best_formula);
    return out;
}

std::string formula_file_text(const RunRecord& record, std::string_view dataset_name)
{
    if (!record.best.phenotype) {
        throw EngineError(EngineErrorKind::NoValidIndividual, "run has no valid best individual to export");
    }
    auto fitness_text = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("invalid"); };
    std::string out;
    out += fmt::format("# dataset: {}\n", dataset_name);
    out += fmt::format("# metric: {}\n", metric_name(record.metric));
    out += fmt::format("# seed: {}\n", record.seed);
    out += fmt::format("# training_fitness: {}\n", fitness_text(record.training_fitness));
    out += fmt::format("# validation_fitness: {}\n", fitness_text(record.validation_fitness));
    out += to_text(*record.best.phenotype);
    out += '\n';
    return out;
}

void export_formula(const RunRecord& record, std::string_view dataset_name, const fs::path& path)
{
    write_file(path, formula_file_text(record, dataset_name));
}

std::string read_formula_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError(fmt::format("cannot open formula file '{}'", path.string()));
    }
    std::string expression;
    for (std::string line; std::getline(in, line);) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        if (!expression.empty()) {
            expression += ' ';
        }
        expression += t;
    }
    return expression;
}

BatchSummary run_experiment(const ExperimentConfig& config, std::ostream* log)
{
    const auto inputs = resolve_inputs(config);
    if (const auto out_of_range = truth_out_of_range(inputs.dataset); out_of_range > 0 && log) {
        *log << fmt::format("warning: {} truth values of {} lie outside [0, 1]\n", out_of_range, inputs.dataset.name);
    }
    const auto dir = batch_directory(config, inputs.dataset.name);
    fs::remove_all(dir);
    try {
        auto summary = run_batch(config, inputs);
        fs::create_directories(dir);
        for (const auto& r : summary.records) {
            const auto run_dir = dir / fmt::format("run_{}", r.seed);
            fs::create_directories(run_dir);
            write_file(run_dir / "avg_fitness.txt", stats_series(r.stats, [](const auto& s) { return s.average_fitness; }));
            write_file(run_dir / "avg_genome_length.txt",
                stats_series(r.stats, [](const auto& s) { return s.average_genome_length; }));
            write_file(run_dir / "avg_tree_nodes.txt",
                stats_series(r.stats, [](const auto& s) { return s.average_tree_nodes; }));
            write_file(run_dir / "best_fitness.txt", stats_series(r.stats, [](const auto& s) { return s.best_fitness; }));
            export_formula(r, inputs.dataset.name, run_dir / "formula.txt");
            write_file(run_dir / "record.json", record_json(r, inputs).dump(2) + "\n");
        }
        write_file(dir / "summary.json", summary_json(summary, config).dump(2) + "\n");
        write_file(dir / "summary.txt", format_summary(summary));
        if (log) {
            *log << format_summary(summary);
        }
        return summary;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
}

BaselineReport report_baselines(const Dataset& dataset, Metric metric, const DatasetSplit& split)
{
    BaselineReport report;
    report.dataset = dataset.name;
    report.metric = metric;
    const auto validation = dataset.subset(split.validation);
    const auto training = dataset.subset(split.training);
    const bool bert_layout = dataset.features.cols() == std::size(kBertFeatureNames);

    for (std::size_t c = 0; c < dataset.features.cols(); ++c) {
        BaselineRow row;
        row.label = bert_layout ? std::string(kBertFeatureNames[c]) : dataset.feature_names.at(c);
        row.full = correlate(metric, dataset.truth, dataset.features.column(c)).rho;
        row.validation = correlate(metric, validation.truth, validation.features.column(c)).rho;
        if (bert_layout) {
            row.reference = reference_score(dataset.name, metric, kBertFeatureNames[c]);
        }
        report.rows.push_back(std::move(row));
    }

    BaselineRow lr;
    lr.label = "LR";
    try {
        const auto model = fit_linear_regression(training.features, training.truth);
        lr.validation = correlate(metric, validation.truth, model.predict(validation.features)).rho;
        const auto in_sample = fit_linear_regression(dataset.features, dataset.truth);
        lr.full = correlate(metric, dataset.truth, in_sample.predict(dataset.features)).rho;
    } catch (const FitnessError&) {
        // Singular design: leave the row empty.
    }
    lr.reference = reference_score(dataset.name, metric, "LR");
    report.rows.push_back(std::move(lr));

    std::vector<std::size_t> subset;
    for (std::size_t c = 0; c < std::min<std::size_t>(3, dataset.features.cols()); ++c) {
        subset.push_back(c);
    }
    if (!subset.empty()) {
        BaselineRow mean;
        mean.label = "Mean(Cos,Man,Euc)";
        mean.full = correlate(metric, dataset.truth, mean_ensemble(dataset.features, subset)).rho;
        mean.validation = correlate(metric, validation.truth, mean_ensemble(validation.features, subset)).rho;
        report.rows.push_back(std::move(mean));
    }
    for (const auto* method : {"GE", "GE-i"}) {
        if (const auto ref = reference_score(dataset.name, metric, method)) {
            report.rows.push_back(BaselineRow{method, std::nullopt, std::nullopt, ref});
        }
    }
    return report;
}

std::string format_baselines(const BaselineReport& report)
{
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:>10.3f}", *v) : fmt::format("{:>10}", "-"); };
    std::string out = fmt::format("{} {}\n", report.dataset, metric_name(report.metric));
    out += fmt::format("{:<20}{:>10}{:>10}{:>10}\n", "method", "full", "valid", "published");
    for (const auto& row : report.rows) {
        out += fmt::format("{:<20}{}{}", row.label, cell(row.full), cell(row.validation));
        if (row.reference) {
            out += cell(row.reference->value);
            if (!row.reference->reproducible) {
                out += "  (split-dependent, not reproducible)";
            }
        } else {
            out += cell(std::nullopt);
        }
        out += '\n';
    }
    return out;
}

} // namespace evoens
