#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evoens/data.hpp"
#include "evoens/grammar.hpp"
#include "evoens/metric.hpp"
#include "evoens/phenotype.hpp"
#include "evoens/random.hpp"

namespace evoens {

using Genome = std::vector<Codon>;

enum class EngineErrorKind { InvalidConfig, GrammarNotGrowable, NoValidIndividuals, NoValidIndividual };

class EngineError : public std::runtime_error {
public:
    EngineError(EngineErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , kind_(kind)
    {
    }

    EngineErrorKind kind() const noexcept { return kind_; }

private:
    EngineErrorKind kind_;
};

struct EvolutionConfig {
    std::size_t population_size = 100;
    std::size_t generations = 200;
    double crossover_probability = 0.8;
    // Per-codon replacement probability; empty means 1 / genome length.
    std::optional<double> mutation_probability;
    std::size_t tournament_size = 2;
    std::size_t elite_count = 1;
    std::size_t max_genome_length = 1000;
    std::size_t max_init_tree_depth = 10;
    std::size_t max_tree_depth = 18;
    Codon codon_domain = kDefaultCodonDomain;
    std::uint64_t rng_seed = 0;

    // Throws EngineError(InvalidConfig) on a violated invariant.
    void validate() const;

    friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

struct Individual {
    Genome genome;
    std::optional<Expression> phenotype;
    std::optional<double> fitness; // empty: invalid derivation or degenerate evaluation
    std::size_t node_count = 0;
    std::size_t depth = 0;

    bool valid() const noexcept { return fitness.has_value(); }
};

struct GenerationStats {
    std::size_t generation = 0;
    double average_fitness = 0.0;       // over valid individuals
    double average_genome_length = 0.0; // over valid individuals
    double average_tree_nodes = 0.0;    // over valid individuals
    double best_fitness = 0.0;
    std::size_t invalid_count = 0;

    friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

// Scores a compiled phenotype; empty when the phenotype is not usable.
using FitnessFn = std::function<std::optional<double>(const Expression&)>;

// Strict total order used for selection, elitism and the best-of-run:
// higher fitness, then fewer nodes, then lower population index.
bool ranks_before(const Individual& a, std::size_t a_index, const Individual& b, std::size_t b_index);

// Derives, compiles and scores a genome.
Individual make_individual(const Grammar& grammar, Genome genome, std::size_t max_tree_depth, const FitnessFn& fitness);

// Random top-down growth within max_depth, restricted at each node to
// productions that can still finish inside the budget. Returns the genome
// that reproduces the tree under leftmost derivation.
Genome grow_genome(const Grammar& grammar, std::size_t max_depth, Codon codon_domain, Rng& rng);

std::vector<Individual> initialize(const Grammar& grammar, const EvolutionConfig& config, const FitnessFn& fitness, Rng& rng);

// Index of the tournament winner among the valid individuals.
std::size_t tournament_select(std::span<const Individual> population, std::size_t tournament_size, Rng& rng);

// Variable one-point crossover at fixed points: a[..cut_a] ++ b[cut_b..] and
// b[..cut_b] ++ a[cut_a..], each truncated to max_length.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut_a, std::size_t cut_b, std::size_t max_length);

// With the given probability, crosses at independent uniform points
// cut_a in [1, len_a - 1] and cut_b in [1, len_b - 1]; otherwise copies.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double probability, std::size_t max_length, Rng& rng);

// Replaces each codon, with the given probability, by a uniform draw from [0, codon_domain).
Genome mutate(const Genome& genome, double per_codon_probability, Codon codon_domain, Rng& rng);

GenerationStats compute_stats(std::span<const Individual> population, std::size_t generation);

struct StepResult {
    std::vector<Individual> population;
    GenerationStats stats;
};

// One generational replacement with elitism.
StepResult step(const std::vector<Individual>& population, std::size_t generation, const Grammar& grammar,
    const EvolutionConfig& config, const FitnessFn& fitness, Rng& rng);

struct RunRecord {
    std::uint64_t seed = 0;
    EvolutionConfig config;
    Metric metric = Metric::Spearman;
    DatasetSplit split;
    std::vector<GenerationStats> stats; // generation 0 (initial population) through the last
    Individual best;                    // best ever by training fitness
    std::string formula;                // surface syntax of best.phenotype
    std::optional<double> training_fitness;
    std::optional<double> validation_fitness;
};

// Initializes, then runs config.generations steps with all randomness drawn
// from one generator seeded with config.rng_seed.
RunRecord run(const Grammar& grammar, const Dataset& dataset, const DatasetSplit& split,
    const EvolutionConfig& config, Metric metric);

} // namespace evoens
