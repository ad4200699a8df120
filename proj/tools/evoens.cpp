#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "evoens/data.hpp"
#include "evoens/experiment.hpp"
#include "evoens/fitness.hpp"
#include "evoens/grammar.hpp"
#include "evoens/phenotype.hpp"

using namespace evoens;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kEngine = 3 };

// Flags shared by the subcommands, mapped onto config keys.
struct Flags {
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help)
    {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }

    void apply(ExperimentConfig& config) const
    {
        for (const auto& [key, value] : values) {
            apply_setting(config, key, value);
        }
    }
};

void add_data_flags(CLI::App* app, Flags& flags)
{
    flags.add(app, "--dataset", "DATASET", "Bundled dataset name (mc30, geresid50) or CSV path");
    flags.add(app, "--metric", "METRIC", "Correlation metric: pcc or srcc");
    flags.add(app, "--split", "SPLIT", "Training fraction of the rows (default 0.7)");
    flags.add(app, "--split-seed", "SPLIT_SEED", "Seed of the train/validation shuffle (default 1)");
}

int run_evolve(const ExperimentConfig& config)
{
    const auto summary = run_experiment(config, &std::cout);
    std::cout << fmt::format("outputs written to {}\n", batch_directory(config, summary.dataset).string());
    return kOk;
}

int run_baselines(const ExperimentConfig& config)
{
    const auto dataset = resolve_dataset(config.dataset);
    const auto s = split(dataset, config.split_fraction, config.split_seed);
    std::cout << format_baselines(report_baselines(dataset, config.metric, s));
    return kOk;
}

int run_eval(const ExperimentConfig& config, const std::string& formula_path)
{
    const auto dataset = resolve_dataset(config.dataset);
    const auto s = split(dataset, config.split_fraction, config.split_seed);
    const auto expr = parse_expression(read_formula_file(formula_path));
    const auto training = dataset.subset(s.training);
    const auto validation = dataset.subset(s.validation);

    auto show = [&](const char* label, const Dataset& d) {
        const auto report = ensemble_fitness(expr, d.features, d.truth, config.metric);
        if (report.fitness) {
            std::cout << fmt::format("{:<12}{} = {}  (rho {})\n", label, metric_name(config.metric), *report.fitness, report.rho);
        } else {
            std::cout << fmt::format("{:<12}{} = invalid (degenerate prediction)\n", label, metric_name(config.metric));
        }
    };
    std::cout << fmt::format("formula: {}\nnodes: {}  depth: {}\n", to_text(expr), expr.node_count(), expr.depth());
    show("full", dataset);
    show("training", training);
    show("validation", validation);
    return kOk;
}

int run_datasets()
{
    for (const auto& name : bundled_names()) {
        const auto d = bundled(name);
        std::cout << fmt::format("{:<12}{:>4} rows  {} features  checksum {:016x}\n", name, d.rows(), d.features.cols(),
            checksum(d));
    }
    std::cout << "ws353 is not bundled; pass a CSV with columns id,response,x0..x4 via --dataset.\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grammatical evolution of similarity-score ensembles"};
    app.require_subcommand(1);

    std::string config_path;
    Flags flags;

    auto* evolve = app.add_subcommand("evolve", "Run a batch of seeded evolutionary runs");
    evolve->add_option("--config", config_path, "Flat key=value config file, overridden by flags");
    add_data_flags(evolve, flags);
    flags.add(evolve, "--grammar", "GRAMMAR", "Builtin grammar (ensemble, ensemble_interp) or BNF path");
    flags.add(evolve, "--runs", "RUNS", "Number of runs (default 30)");
    flags.add(evolve, "--seed", "RANDOM_SEED", "Seed of the first run (default 1)");
    flags.add(evolve, "--generations", "GENERATIONS", "Generations per run (default 200)");
    flags.add(evolve, "--population", "POPULATION_SIZE", "Population size (default 100)");
    flags.add(evolve, "--crossover-prob", "CROSSOVER_PROBABILITY", "Crossover probability (default 0.8)");
    flags.add(evolve, "--mutation-prob", "MUTATION_PROBABILITY", "Per-codon mutation probability (default 1/length)");
    flags.add(evolve, "--max-tree-depth", "MAX_TREE_DEPTH", "Maximum derivation tree depth");
    flags.add(evolve, "--threads", "THREADS", "Runs executed concurrently (default 1)");
    flags.add(evolve, "--out", "OUT", "Output directory (default out)");

    auto* baselines = app.add_subcommand("baselines", "Single-measure, linear regression and mean-ensemble correlations");
    add_data_flags(baselines, flags);

    std::string formula_path;
    auto* eval = app.add_subcommand("eval", "Score a saved formula file against a dataset");
    eval->add_option("formula", formula_path, "Formula file written by evolve")->required();
    add_data_flags(eval, flags);

    auto* datasets = app.add_subcommand("datasets", "List bundled datasets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        ExperimentConfig config;
        if (!config_path.empty()) {
            apply_config_file(config, config_path);
        }
        flags.apply(config);
        config.validate();

        if (evolve->parsed()) {
            return run_evolve(config);
        }
        if (baselines->parsed()) {
            return run_baselines(config);
        }
        if (eval->parsed()) {
            return run_eval(config, formula_path);
        }
        if (datasets->parsed()) {
            return run_datasets();
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "engine error: " << e.what() << '\n';
        return kEngine;
    }
    return kUsage;
}
