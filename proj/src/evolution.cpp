#include "evoens/evolution.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "evoens/fitness.hpp"

namespace evoens {

void EvolutionConfig::validate() const
{
    auto fail = [](const std::string& what) { throw EngineError(EngineErrorKind::InvalidConfig, what); };
    if (population_size < 2) {
        fail(fmt::format("POPULATION_SIZE must be at least 2, got {}", population_size));
    }
    if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
        fail(fmt::format("CROSSOVER_PROBABILITY must lie in [0, 1], got {}", crossover_probability));
    }
    if (mutation_probability && !(*mutation_probability >= 0.0 && *mutation_probability <= 1.0)) {
        fail(fmt::format("MUTATION_PROBABILITY must lie in [0, 1], got {}", *mutation_probability));
    }
    if (tournament_size < 1) {
        fail("TOURNAMENT_SIZE must be at least 1");
    }
    if (elite_count >= population_size) {
        fail(fmt::format("ELITE_SIZE ({}) must be smaller than POPULATION_SIZE ({})", elite_count, population_size));
    }
    if (max_genome_length < 1 || max_tree_depth < 1 || max_init_tree_depth < 1) {
        fail("MAX_GENOME_LENGTH, MAX_TREE_DEPTH and MAX_INIT_TREE_DEPTH must be positive");
    }
    if (codon_domain < 1) {
        fail("CODON_SIZE must be positive");
    }
}

bool ranks_before(const Individual& a, std::size_t a_index, const Individual& b, std::size_t b_index)
{
    if (a.valid() != b.valid()) {
        return a.valid();
    }
    if (a.valid() && *a.fitness != *b.fitness) {
        return *a.fitness > *b.fitness;
    }
    if (a.node_count != b.node_count) {
        return a.node_count < b.node_count;
    }
    return a_index < b_index;
}

Individual make_individual(const Grammar& grammar, Genome genome, std::size_t max_tree_depth, const FitnessFn& fitness)
{
    Individual ind;
    ind.genome = std::move(genome);
    const auto derivation = derive(grammar, ind.genome, max_tree_depth);
    if (const auto* tree = std::get_if<DerivationTree>(&derivation)) {
        auto expr = compile(*tree);
        ind.node_count = expr.node_count();
        ind.depth = expr.depth();
        ind.fitness = fitness(expr);
        ind.phenotype = std::move(expr);
    }
    return ind;
}

namespace {

struct Grower {
    const Grammar& grammar;
    std::size_t max_depth;
    Codon domain;
    Rng& rng;
    Genome genome;
    std::vector<std::uint32_t> candidates;

    void grow(std::uint32_t nonterminal, std::size_t depth)
    {
        const auto rules = grammar.productions(nonterminal);
        candidates.clear();
        for (std::uint32_t p = 0; p < rules.size(); ++p) {
            if (rules[p].min_height != Grammar::kUnbounded && depth + rules[p].min_height - 1 <= max_depth) {
                candidates.push_back(p);
            }
        }
        if (candidates.empty()) {
            throw EngineError(EngineErrorKind::GrammarNotGrowable,
                fmt::format("<{}> cannot be completed within depth {}", grammar.nonterminal_name(nonterminal), max_depth));
        }
        const auto choice = candidates[rng.below(candidates.size())];
        const auto r = static_cast<Codon>(rules.size());
        if (choice >= domain) {
            throw EngineError(EngineErrorKind::InvalidConfig,
                fmt::format("codon domain {} cannot address production {}", domain, choice));
        }
        // Any codon with the right residue selects `choice`.
        genome.push_back(choice + r * static_cast<Codon>(rng.below((domain - 1 - choice) / r + 1)));

        // Copy: `candidates` is reused by the recursive calls.
        const auto symbols = rules[choice].symbols;
        for (const auto& s : symbols) {
            if (!s.terminal) {
                grow(s.id, depth + 1);
            }
        }
    }
};

} // namespace

Genome grow_genome(const Grammar& grammar, std::size_t max_depth, Codon codon_domain, Rng& rng)
{
    Grower g{grammar, max_depth, codon_domain, rng, {}, {}};
    g.grow(grammar.start(), 1);
    return std::move(g.genome);
}

std::vector<Individual> initialize(const Grammar& grammar, const EvolutionConfig& config, const FitnessFn& fitness, Rng& rng)
{
    const auto depth = std::min(config.max_init_tree_depth, config.max_tree_depth);
    constexpr int kAttempts = 1000;
    std::vector<Individual> population;
    population.reserve(config.population_size);
    while (population.size() < config.population_size) {
        Genome genome;
        for (int attempt = 0;; ++attempt) {
            genome = grow_genome(grammar, depth, config.codon_domain, rng);
            if (genome.size() <= config.max_genome_length) {
                break;
            }
            if (attempt + 1 == kAttempts) {
                throw EngineError(EngineErrorKind::GrammarNotGrowable,
                    fmt::format("no tree within depth {} fits MAX_GENOME_LENGTH {}", depth, config.max_genome_length));
            }
        }
        population.push_back(make_individual(grammar, std::move(genome), config.max_tree_depth, fitness));
    }
    return population;
}

std::size_t tournament_select(std::span<const Individual> population, std::size_t tournament_size, Rng& rng)
{
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (population[i].valid()) {
            valid.push_back(i);
        }
    }
    if (valid.empty()) {
        throw EngineError(EngineErrorKind::NoValidIndividuals, "tournament over a population with no valid individual");
    }
    std::size_t winner = valid[rng.below(valid.size())];
    for (std::size_t k = 1; k < tournament_size; ++k) {
        const auto challenger = valid[rng.below(valid.size())];
        if (ranks_before(population[challenger], challenger, population[winner], winner)) {
            winner = challenger;
        }
    }
    return winner;
}

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut_a, std::size_t cut_b, std::size_t max_length)
{
    Genome first(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(cut_a));
    first.insert(first.end(), b.begin() + static_cast<std::ptrdiff_t>(cut_b), b.end());
    Genome second(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(cut_b));
    second.insert(second.end(), a.begin() + static_cast<std::ptrdiff_t>(cut_a), a.end());
    if (first.size() > max_length) {
        first.resize(max_length);
    }
    if (second.size() > max_length) {
        second.resize(max_length);
    }
    return {std::move(first), std::move(second)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double probability, std::size_t max_length, Rng& rng)
{
    if (!rng.bernoulli(probability) || a.size() < 2 || b.size() < 2) {
        return {a, b};
    }
    const auto cut_a = static_cast<std::size_t>(rng.between(1, a.size() - 1));
    const auto cut_b = static_cast<std::size_t>(rng.between(1, b.size() - 1));
    return crossover_at(a, b, cut_a, cut_b, max_length);
}

Genome mutate(const Genome& genome, double per_codon_probability, Codon codon_domain, Rng& rng)
{
    Genome out = genome;
    for (auto& codon : out) {
        if (rng.bernoulli(per_codon_probability)) {
            codon = static_cast<Codon>(rng.below(codon_domain));
        }
    }
    return out;
}

GenerationStats compute_stats(std::span<const Individual> population, std::size_t generation)
{
    GenerationStats s;
    s.generation = generation;
    std::size_t valid = 0;
    for (const auto& ind : population) {
        if (!ind.valid()) {
            ++s.invalid_count;
            continue;
        }
        ++valid;
        s.average_fitness += *ind.fitness;
        s.average_genome_length += static_cast<double>(ind.genome.size());
        s.average_tree_nodes += static_cast<double>(ind.node_count);
        s.best_fitness = std::max(s.best_fitness, *ind.fitness);
    }
    if (valid > 0) {
        const auto n = static_cast<double>(valid);
        s.average_fitness /= n;
        s.average_genome_length /= n;
        s.average_tree_nodes /= n;
    }
    return s;
}

StepResult step(const std::vector<Individual>& population, std::size_t generation, const Grammar& grammar,
    const EvolutionConfig& config, const FitnessFn& fitness, Rng& rng)
{
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (population[i].valid()) {
            order.push_back(i);
        }
    }
    if (order.empty()) {
        throw EngineError(EngineErrorKind::NoValidIndividuals,
            fmt::format("generation {}: no valid individual to select from", generation));
    }
    std::sort(order.begin(), order.end(),
        [&](std::size_t a, std::size_t b) { return ranks_before(population[a], a, population[b], b); });

    StepResult result;
    auto& next = result.population;
    next.reserve(config.population_size);
    for (std::size_t e = 0; e < std::min(config.elite_count, order.size()); ++e) {
        next.push_back(population[order[e]]);
    }

    auto vary = [&](const Genome& g) {
        const double p = config.mutation_probability.value_or(1.0 / static_cast<double>(g.size()));
        return mutate(g, p, config.codon_domain, rng);
    };

    while (next.size() < config.population_size) {
        const auto a = tournament_select(population, config.tournament_size, rng);
        const auto b = tournament_select(population, config.tournament_size, rng);
        auto [first, second] = crossover(population[a].genome, population[b].genome,
            config.crossover_probability, config.max_genome_length, rng);
        first = vary(first);
        second = vary(second);
        next.push_back(make_individual(grammar, std::move(first), config.max_tree_depth, fitness));
        if (next.size() < config.population_size) {
            next.push_back(make_individual(grammar, std::move(second), config.max_tree_depth, fitness));
        }
    }
    result.stats = compute_stats(next, generation);
    return result;
}

namespace {

const Individual* best_of(const std::vector<Individual>& population)
{
    const Individual* best = nullptr;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (population[i].valid() && (!best || ranks_before(population[i], i, *best, best_index))) {
            best = &population[i];
            best_index = i;
        }
    }
    return best;
}

} // namespace

RunRecord run(const Grammar& grammar, const Dataset& dataset, const DatasetSplit& split,
    const EvolutionConfig& config, Metric metric)
{
    config.validate();
    const auto training = dataset.subset(split.training);
    const auto validation = dataset.subset(split.validation);

    const FitnessFn fitness = [&](const Expression& expr) -> std::optional<double> {
        if (const auto k = expr.max_feature(); k && *k >= training.features.cols()) {
            return std::nullopt;
        }
        return ensemble_fitness(expr, training.features, training.truth, metric).fitness;
    };

    RunRecord record;
    record.seed = config.rng_seed;
    record.config = config;
    record.metric = metric;
    record.split = split;

    Rng rng(config.rng_seed);
    auto population = initialize(grammar, config, fitness, rng);
    record.stats.push_back(compute_stats(population, 0));

    std::optional<Individual> best;
    auto consider = [&](const std::vector<Individual>& pop) {
        const auto* candidate = best_of(pop);
        // On a full tie the incumbent stays.
        if (candidate && (!best || ranks_before(*candidate, 0, *best, 1))) {
            best = *candidate;
        }
    };
    consider(population);

    for (std::size_t g = 1; g <= config.generations; ++g) {
        auto result = step(population, g, grammar, config, fitness, rng);
        population = std::move(result.population);
        record.stats.push_back(result.stats);
        consider(population);
    }

    if (!best) {
        throw EngineError(EngineErrorKind::NoValidIndividual, "run produced no valid individual");
    }
    record.best = std::move(*best);
    record.formula = to_text(*record.best.phenotype);
    record.training_fitness = record.best.fitness;
    if (!record.best.phenotype->max_feature() || *record.best.phenotype->max_feature() < validation.features.cols()) {
        record.validation_fitness
            = ensemble_fitness(*record.best.phenotype, validation.features, validation.truth, metric).fitness;
    }
    return record;
}

} // namespace evoens
