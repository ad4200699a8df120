#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include "evoens/experiment.hpp"
#include "evoens/fitness.hpp"

using namespace evoens;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Relative path -> contents for every regular file under root.
std::map<std::string, std::string> snapshot(const fs::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
        }
    }
    return files;
}

struct TempDir {
    fs::path path;
    explicit TempDir(std::string_view name)
        : path(fs::temp_directory_path() / fmt::format("evoens_{}_{}", name, ::getpid()))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small_config(const fs::path& out)
{
    ExperimentConfig c;
    c.runs = 3;
    c.evolution.generations = 6;
    c.evolution.population_size = 20;
    c.output_dir = out;
    return c;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

int cli(const std::string& args)
{
    const auto command = fmt::format("\"{}\" {} >/dev/null 2>&1", EVOENS_CLI, args);
    const int status = std::system(command.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("settings use the run-parameter names")
{
    ExperimentConfig c;
    apply_config_text(c, "# batch\n"
                         "POPULATION_SIZE = 50\n"
                         "GENERATIONS=20\n"
                         "crossover_probability=0.6\n"
                         "MUTATION_PROBABILITY=0.02\n"
                         "TOURNAMENT_SIZE=3\n"
                         "ELITE_SIZE=2\n"
                         "MAX_GENOME_LENGTH=500\n"
                         "MAX_INIT_TREE_DEPTH=6\n"
                         "CODON_SIZE=1024\n"
                         "SELECTION=tournament\n"
                         "REPLACEMENT=generational\n"
                         "DATASET=geresid50\n"
                         "METRIC=pcc\n"
                         "RUNS=4\n"
                         "RANDOM_SEED=9\n"
                         "SPLIT=0.6\n"
                         "SPLIT_SEED=3\n");
    CHECK(c.evolution.population_size == 50);
    CHECK(c.evolution.generations == 20);
    CHECK(c.evolution.crossover_probability == 0.6);
    CHECK(c.evolution.mutation_probability == 0.02);
    CHECK(c.evolution.tournament_size == 3);
    CHECK(c.evolution.elite_count == 2);
    CHECK(c.evolution.max_genome_length == 500);
    CHECK(c.evolution.max_init_tree_depth == 6);
    CHECK(c.evolution.codon_domain == 1024);
    CHECK(c.dataset == "geresid50");
    CHECK(c.metric == Metric::Pearson);
    CHECK(c.runs == 4);
    CHECK(c.base_seed == 9);
    CHECK(c.split_fraction == 0.6);
    CHECK(c.split_seed == 3);
    CHECK_FALSE(c.max_tree_depth_explicit);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("bad settings")
{
    ExperimentConfig c;
    CHECK_THROWS_AS(apply_setting(c, "NOPE", "1"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "SELECTION", "roulette"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "GENERATIONS", "many"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "METRIC", "kendall"), UsageError);
    CHECK_THROWS_AS(apply_config_text(c, "GENERATIONS 5\n"), UsageError);

    ExperimentConfig zero;
    zero.runs = 0;
    CHECK_THROWS_AS(zero.validate(), UsageError);
    ExperimentConfig tiny;
    apply_setting(tiny, "POPULATION_SIZE", "1");
    CHECK_THROWS_AS(tiny.validate(), UsageError);
}

TEST_CASE("interpretable grammar caps the tree depth")
{
    ExperimentConfig c;
    c.grammar = "ensemble_interp";
    auto in = resolve_inputs(c);
    CHECK(in.variant == "GE-i");
    CHECK(in.evolution.max_tree_depth == kInterpretableMaxTreeDepth);

    apply_setting(c, "MAX_TREE_DEPTH", "12");
    in = resolve_inputs(c);
    CHECK(in.evolution.max_tree_depth == 12);

    ExperimentConfig plain;
    CHECK(resolve_inputs(plain).variant == "GE");
    CHECK(resolve_inputs(plain).evolution.max_tree_depth == 18);
    CHECK(resolve_inputs(plain).split.validation.size() == 9);
}

TEST_CASE("interpretable grammar drops the unbounded operators")
{
    const auto text = std::string(builtin_grammar_text("ensemble_interp"));
    CHECK(text.find("np.exp") == std::string::npos);
    CHECK(text.find("psqrt") == std::string::npos);
    CHECK(text.find("plog") == std::string::npos);
    CHECK(text.find("pdiv") != std::string::npos);
    CHECK_THROWS_AS(builtin_grammar_text("other"), UsageError);
}

TEST_CASE("quartiles interpolate linearly")
{
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.75) == doctest::Approx(3.25));
    const auto s = five_number_summary({5, 1, 4, 2, 3});
    CHECK(s.min == 1);
    CHECK(s.q1 == 2);
    CHECK(s.median == 3);
    CHECK(s.q3 == 4);
    CHECK(s.max == 5);
    const auto one = five_number_summary({0.4});
    CHECK(one.q1 == 0.4);
    CHECK(one.median == 0.4);
}

TEST_CASE("output tree layout")
{
    TempDir tmp("layout");
    const auto config = small_config(tmp.path);
    const auto summary = run_experiment(config, nullptr);
    const auto dir = tmp.path / "mc30_srcc";
    CHECK(batch_directory(config, "mc30") == dir);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "summary.txt"));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto run_dir = dir / fmt::format("run_{}", seed);
        for (const auto* name : {"avg_fitness.txt", "avg_genome_length.txt", "avg_tree_nodes.txt", "best_fitness.txt"}) {
            const auto text = read_file(run_dir / name);
            CHECK(line_count(text) == config.evolution.generations + 1);
            CHECK(text.rfind("0 ", 0) == 0);
        }
        const auto record = nlohmann::json::parse(read_file(run_dir / "record.json"));
        CHECK(record["seed"] == seed);
        CHECK(record["stats"].size() == config.evolution.generations + 1);
        CHECK(record["split"]["validation"].size() == 9);
        CHECK(record["config"]["POPULATION_SIZE"] == 20);
        CHECK(fs::exists(run_dir / "formula.txt"));
    }
    CHECK(summary.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(summary.variant == "GE");
    REQUIRE(summary.reference);
    CHECK(summary.reference->value == 0.859);
}

TEST_CASE("summary median matches the per-run records")
{
    TempDir tmp("median");
    auto config = small_config(tmp.path);
    config.runs = 5;
    const auto summary = run_experiment(config, nullptr);
    std::vector<double> values;
    for (const auto& e : fs::directory_iterator(tmp.path / "mc30_srcc")) {
        if (e.is_directory()) {
            const auto record = nlohmann::json::parse(read_file(e.path() / "record.json"));
            values.push_back(record["validation_fitness"].is_null() ? 0.0 : record["validation_fitness"].get<double>());
        }
    }
    REQUIRE(values.size() == 5);
    std::sort(values.begin(), values.end());
    CHECK(summary.summary.median == values[2]);
    const auto stored = nlohmann::json::parse(read_file(tmp.path / "mc30_srcc" / "summary.json"));
    CHECK(stored["five_number_summary"]["median"].get<double>() == values[2]);
    CHECK(summary.summary.q1 <= summary.summary.median);
    CHECK(summary.summary.median <= summary.summary.q3);
}

TEST_CASE("repeated executions write identical trees")
{
    TempDir a("repeat_a");
    TempDir b("repeat_b");
    auto config = small_config(a.path);
    run_experiment(config, nullptr);
    const auto first = snapshot(a.path);
    run_experiment(config, nullptr);
    CHECK(snapshot(a.path) == first);

    config.output_dir = b.path;
    config.threads = 2;
    run_experiment(config, nullptr);
    CHECK(snapshot(b.path) == first);
}

TEST_CASE("one run without generations")
{
    TempDir tmp("zero");
    auto config = small_config(tmp.path);
    config.runs = 1;
    config.evolution.generations = 0;
    const auto summary = run_experiment(config, nullptr);
    REQUIRE(summary.records.size() == 1);
    CHECK(summary.records[0].stats.size() == 1);
    CHECK(summary.summary.min == summary.summary.max);
    CHECK(line_count(read_file(tmp.path / "mc30_srcc" / "run_1" / "best_fitness.txt")) == 1);
}

TEST_CASE("failed batches leave no output")
{
    TempDir tmp("failure");
    write_file(tmp.path / "bad.bnf", "<e> ::= x[:,9]\n");
    auto config = small_config(tmp.path / "out");
    config.grammar = (tmp.path / "bad.bnf").string();
    CHECK_THROWS_AS(run_experiment(config, nullptr), EngineError);
    CHECK_FALSE(fs::exists(tmp.path / "out" / "mc30_srcc"));
}

TEST_CASE("formula files")
{
    RunRecord record;
    record.seed = 4;
    record.metric = Metric::Pearson;
    record.best.phenotype = Expression::feature(2);
    record.training_fitness = 0.75;
    const auto text = formula_file_text(record, "mc30");
    CHECK(text.find("x[:,2]") != std::string::npos);
    CHECK(text.find("# dataset: mc30") != std::string::npos);
    CHECK(text.find("# seed: 4") != std::string::npos);
    CHECK(text.find("# validation_fitness: invalid") != std::string::npos);

    RunRecord empty;
    try {
        formula_file_text(empty, "mc30");
        FAIL("no error");
    } catch (const EngineError& e) {
        CHECK(e.kind() == EngineErrorKind::NoValidIndividual);
    }
}

TEST_CASE("reloaded formulas score the same")
{
    TempDir tmp("reload");
    const auto config = small_config(tmp.path);
    const auto summary = run_experiment(config, nullptr);
    const auto mc30 = bundled("mc30");
    const auto validation = mc30.subset(split(mc30, 0.7, 1).validation);
    for (const auto& r : summary.records) {
        const auto path = tmp.path / "mc30_srcc" / fmt::format("run_{}", r.seed) / "formula.txt";
        const auto expr = parse_expression(read_formula_file(path));
        CHECK(expr == *r.best.phenotype);
        const auto again = ensemble_fitness(expr, validation.features, validation.truth, Metric::Spearman);
        CHECK(again.fitness == r.validation_fitness);
    }
}

TEST_CASE("baselines")
{
    const auto mc30 = bundled("mc30");
    const auto report = report_baselines(mc30, Metric::Pearson, split(mc30, 0.7, 1));
    auto row = [&](const BaselineReport& r, std::string_view label) {
        const auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const auto& x) { return x.label == label; });
        REQUIRE(it != r.rows.end());
        return *it;
    };
    CHECK(std::abs(*row(report, "Bert-Euc").full - 0.751) <= 0.005);
    CHECK(row(report, "Bert-Euc").reference->value == 0.751);
    CHECK(*row(report, "LR").full >= *row(report, "Bert-Euc").full);
    CHECK(row(report, "GE").reference->value == 0.794);

    const auto ge = bundled("geresid50");
    const auto ge_report = report_baselines(ge, Metric::Spearman, split(ge, 0.7, 1));
    CHECK(std::abs(*row(ge_report, "Bert-Inn").full - 0.740) <= 0.005);

    Dataset copy = mc30;
    const auto column = mc30.features.column(1);
    copy.truth.assign(column.begin(), column.end());
    const auto self = report_baselines(copy, Metric::Spearman, split(copy, 0.7, 1));
    CHECK(*row(self, "Bert-Man").full == doctest::Approx(1.0));

    const auto text = format_baselines(report);
    CHECK(text.find("Bert-Euc") != std::string::npos);
    CHECK(text.find("published") != std::string::npos);
}

TEST_CASE("user-supplied ws353 file shows the split-dependent reference")
{
    TempDir tmp("ws353");
    const auto mc30 = bundled("mc30");
    auto csv = to_csv(mc30);
    write_file(tmp.path / "ws353.csv", csv);
    const auto d = resolve_dataset((tmp.path / "ws353.csv").string());
    CHECK(d.name == "ws353");
    const auto text = format_baselines(report_baselines(d, Metric::Pearson, split(d, 0.7, 1)));
    CHECK(text.find("0.262") != std::string::npos);
    CHECK(text.find("not reproducible") != std::string::npos);
}

TEST_CASE("cli exit codes")
{
    TempDir tmp("cli");
    CHECK(cli("datasets") == 0);
    CHECK(cli("") == 1);
    CHECK(cli("evolve --bogus") == 1);
    CHECK(cli("baselines --metric kendall") == 1);
    CHECK(cli("baselines --dataset ws353") == 2);
    CHECK(cli(fmt::format("baselines --dataset \"{}\"", (tmp.path / "absent.csv").string())) == 2);
    CHECK(cli("baselines --dataset geresid50 --metric srcc") == 0);

    write_file(tmp.path / "bad.bnf", "<e> ::= x[:,9]\n");
    CHECK(cli(fmt::format("evolve --grammar \"{}\" --runs 1 --generations 1 --out \"{}\"", (tmp.path / "bad.bnf").string(),
              (tmp.path / "out").string()))
        == 3);

    const auto out = (tmp.path / "good").string();
    CHECK(cli(fmt::format("evolve --runs 2 --generations 3 --population 10 --out \"{}\"", out)) == 0);
    const auto formula = tmp.path / "good" / "mc30_srcc" / "run_1" / "formula.txt";
    CHECK(fs::exists(formula));
    CHECK(cli(fmt::format("eval \"{}\" --dataset mc30", formula.string())) == 0);
    CHECK(cli(fmt::format("eval \"{}\"", (tmp.path / "none.txt").string())) == 1);

    write_file(tmp.path / "run.cfg", "GENERATIONS=2\nPOPULATION_SIZE=10\nRUNS=1\nMETRIC=pcc\n");
    CHECK(cli(fmt::format("evolve --config \"{}\" --out \"{}\"", (tmp.path / "run.cfg").string(), out)) == 0);
    CHECK(fs::exists(tmp.path / "good" / "mc30_pcc" / "run_1" / "record.json"));
}

TEST_CASE("interpretable runs stay small on GeReSiD50")
{
    ExperimentConfig plain;
    plain.dataset = "geresid50";
    ExperimentConfig interp = plain;
    interp.grammar = "ensemble_interp";
    const auto a = run_batch(plain, resolve_inputs(plain));
    const auto b = run_batch(interp, resolve_inputs(interp));
    std::vector<double> nodes(a.node_counts.begin(), a.node_counts.end());
    const auto plain_median = five_number_summary(nodes).median;
    std::vector<double> interp_nodes(b.node_counts.begin(), b.node_counts.end());
    MESSAGE(fmt::format("GE median nodes {}, GE-i median nodes {}", plain_median, five_number_summary(interp_nodes).median));
    CHECK(five_number_summary(interp_nodes).median <= plain_median);
    CHECK(b.records[b.best_run].best.node_count <= plain_median);
}
