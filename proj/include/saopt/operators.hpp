#pragma once

// Real-coded GA operators shared by the single- and multi-objective loops.
// Every operator returns genomes inside the gene bounds; out-of-range values
// are clamped to the violated bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "saopt/rng.hpp"
#include "saopt/types.hpp"

namespace saopt {

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw invalid_argument(std::string(what) + ": length mismatch");
}
inline void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument(std::string(what) + " must lie in [0, 1]");
}
}  // namespace detail

inline Population init_random_population(std::span<const GeneSpec> specs, std::size_t size, Rng& rng) {
    require(!specs.empty(), "init_random_population: no gene specs");
    require(size >= 1, "init_random_population: size must be positive");
    Population pop;
    pop.members.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        Genome g(specs.size());
        for (std::size_t k = 0; k < specs.size(); ++k) g[k] = rng.uniform(specs[k].lower, specs[k].upper);
        pop.members.emplace_back(std::move(g));
    }
    return pop;
}

inline Genome clamp_to_bounds(Genome genome, std::span<const GeneSpec> specs) {
    detail::require_same_length(genome.size(), specs.size(), "clamp_to_bounds");
    for (std::size_t k = 0; k < genome.size(); ++k)
        genome[k] = std::min(specs[k].upper, std::max(specs[k].lower, genome[k]));
    return genome;
}

/// Blend crossover: each child gene is uniform on the parents' hull widened by
/// alpha * range on both sides.
inline Genome blx_alpha_crossover(const Genome& p1, const Genome& p2, double alpha,
                                  std::span<const GeneSpec> specs, Rng& rng) {
    require(alpha >= 0.0, "blx_alpha_crossover: alpha must be non-negative");
    detail::require_same_length(p1.size(), p2.size(), "blx_alpha_crossover");
    detail::require_same_length(p1.size(), specs.size(), "blx_alpha_crossover");
    Genome child(p1.size());
    for (std::size_t k = 0; k < p1.size(); ++k) {
        const double lo = std::min(p1[k], p2[k]);
        const double hi = std::max(p1[k], p2[k]);
        const double spread = (hi - lo) * alpha;
        child[k] = rng.uniform(lo - spread, hi + spread);
    }
    return clamp_to_bounds(std::move(child), specs);
}

inline Genome random_substitution_mutation(Genome genome, std::span<const GeneSpec> specs, double rate,
                                           Rng& rng) {
    detail::require_probability(rate, "mutation rate");
    detail::require_same_length(genome.size(), specs.size(), "random_substitution_mutation");
    for (std::size_t k = 0; k < genome.size(); ++k) {
        // Both draws are always consumed so the stream layout is independent of rate.
        const bool hit = rng.bernoulli(rate);
        const double fresh = rng.uniform(specs[k].lower, specs[k].upper);
        if (hit) genome[k] = fresh;
    }
    return genome;
}

/// Result of intermediate crossover, with the per-gene mask exposed for
/// inspection.
struct CrossoverPair {
    Genome first;
    Genome second;
    std::vector<bool> mask;
};

/// Child1 = P1 + mask * ratio * (P2 - P1), Child2 = P2 - mask * ratio * (P2 - P1),
/// with mask_k = [u_k < crossover_rate] and ratio_k uniform on [0, 1].
inline CrossoverPair intermediate_crossover(const Genome& p1, const Genome& p2, double crossover_rate,
                                            std::span<const GeneSpec> specs, Rng& rng) {
    detail::require_same_length(p1.size(), p2.size(), "intermediate_crossover");
    detail::require_same_length(p1.size(), specs.size(), "intermediate_crossover");
    detail::require_probability(crossover_rate, "crossover rate");
    CrossoverPair out{p1, p2, std::vector<bool>(p1.size(), false)};
    for (std::size_t k = 0; k < p1.size(); ++k) {
        const bool selected = rng.uniform() < crossover_rate;
        const double ratio = rng.uniform();
        out.mask[k] = selected;
        if (!selected) continue;
        const double step = ratio * (p2[k] - p1[k]);
        out.first[k] = p1[k] + step;
        out.second[k] = p2[k] - step;
    }
    out.first = clamp_to_bounds(std::move(out.first), specs);
    out.second = clamp_to_bounds(std::move(out.second), specs);
    return out;
}

struct GaussianMutationParams {
    double rate = 2.0 / 6.0;
    double scale = 0.1;
    double shrink = 0.5;
};

/// Standard deviation used for gene k at the given generation.
inline double gaussian_mutation_sigma(const GeneSpec& spec, const GaussianMutationParams& p,
                                      std::size_t generation, std::size_t max_generations) {
    const double progress =
        max_generations == 0 ? 0.0 : static_cast<double>(generation) / static_cast<double>(max_generations);
    return p.scale * spec.range() * (1.0 - p.shrink * progress);
}

inline Genome gaussian_mutation(Genome genome, std::span<const GeneSpec> specs, const GaussianMutationParams& p,
                                std::size_t generation, std::size_t max_generations, Rng& rng) {
    detail::require_probability(p.rate, "mutation rate");
    require(p.scale > 0.0, "gaussian_mutation: scale must be positive");
    require(p.shrink >= 0.0 && p.shrink <= 1.0, "gaussian_mutation: shrink must lie in [0, 1]");
    require(generation <= max_generations, "gaussian_mutation: generation exceeds max_generations");
    detail::require_same_length(genome.size(), specs.size(), "gaussian_mutation");
    for (std::size_t k = 0; k < genome.size(); ++k) {
        const bool hit = rng.bernoulli(p.rate);
        const double z = rng.normal();
        if (hit) genome[k] += z * gaussian_mutation_sigma(specs[k], p, generation, max_generations);
    }
    return clamp_to_bounds(std::move(genome), specs);
}

// ---------------------------------------------------------------------------
// Selection.
//
// A ranking order is a callable `better(i, j)` over member indices that
// returns true when member i ranks strictly above member j.

/// Order by one objective, respecting its direction; ties go to the lower index.
inline auto objective_order(const Population& pop, std::size_t objective = 0) {
    return [&pop, objective](std::size_t i, std::size_t j) {
        const auto& fi = pop[i].fitness();
        const auto& fj = pop[j].fitness();
        const double a = fi[objective];
        const double b = fj[objective];
        if (a != b) return fi.directions[objective] == Direction::Maximize ? a > b : a < b;
        return i < j;
    };
}

/// Order given by a precomputed best-first permutation.
inline auto position_order(std::span<const std::size_t> best_first) {
    std::vector<std::size_t> position(best_first.size());
    for (std::size_t r = 0; r < best_first.size(); ++r) position[best_first[r]] = r;
    return [position = std::move(position)](std::size_t i, std::size_t j) { return position[i] < position[j]; };
}

template <typename Better>
Population tournament_selection(const Population& pop, std::size_t tournament_size, std::size_t n_select,
                                Better&& better, Rng& rng) {
    require(!pop.empty(), "tournament_selection: empty population");
    require(tournament_size >= 1, "tournament_selection: tournament size must be positive");
    Population out;
    out.generation = pop.generation;
    out.members.reserve(n_select);
    for (std::size_t t = 0; t < n_select; ++t) {
        std::size_t winner = rng.below(pop.size());
        for (std::size_t s = 1; s < tournament_size; ++s) {
            const std::size_t challenger = rng.below(pop.size());
            if (better(challenger, winner)) winner = challenger;
        }
        out.members.push_back(pop[winner]);
    }
    return out;
}

/// Number of members kept for an elite fraction; rounded up so it is never empty.
inline std::size_t elite_count(std::size_t population_size, double fraction) {
    require(fraction > 0.0 && fraction <= 1.0, "elite fraction must lie in (0, 1]");
    const double raw = fraction * static_cast<double>(population_size);
    auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(n, population_size == 0 ? 0 : 1, population_size);
}

/// Member indices sorted best-first.
template <typename Better>
std::vector<std::size_t> ranked_indices(const Population& pop, Better&& better) {
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return better(a, b); });
    return idx;
}

template <typename Better>
Population elite_selection(const Population& pop, double fraction, Better&& better) {
    const std::size_t n = elite_count(pop.size(), fraction);
    require_evaluated(pop);
    const auto order = ranked_indices(pop, better);
    Population elite;
    elite.generation = pop.generation;
    elite.members.reserve(n);
    for (std::size_t r = 0; r < n; ++r) elite.members.push_back(pop[order[r]]);
    return elite;
}

}  // namespace saopt
