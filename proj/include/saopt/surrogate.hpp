#pragma once

// Surrogate policy for the assisted loops: warm start, the 1-sigma
// divergence test and retraining.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "saopt/forest.hpp"
#include "saopt/operators.hpp"
#include "saopt/parallel.hpp"
#include "saopt/rng.hpp"
#include "saopt/types.hpp"

namespace saopt {

/// Ground-truth evaluator: genome plus its own random stream to fitness.
using Evaluator = std::function<FitnessVector(const Genome&, Rng&)>;

/// Best-first ordering of an evaluated population.
using Ranker = std::function<std::vector<std::size_t>(const Population&)>;

struct WarmStart {
    Population population;               // the best `keep` members, best-first
    std::vector<TrainingSet> training;   // one per objective, all warm_size samples
};

/// Member i of the warm sample is generated from rng.derive(kWarmStart) and
/// simulated with rng.derive(kSimulation, i).
inline WarmStart warm_start(std::span<const GeneSpec> specs, std::size_t warm_size, std::size_t keep,
                            const Evaluator& evaluate, const Ranker& rank, Rng rng, std::size_t workers = 1) {
    require(keep >= 1 && keep <= warm_size, "warm_start: keep must lie in [1, warm_size]");
    Rng genomes = rng.derive(stream::kWarmStart);
    Population sample = init_random_population(specs, warm_size, genomes);
    std::vector<FitnessVector> results(warm_size);
    parallel_for(
        warm_size,
        [&](std::size_t i) {
            Rng sim = rng.derive(stream::kSimulation, i);
            results[i] = evaluate(sample[i].genome, sim);
        },
        workers);
    for (std::size_t i = 0; i < warm_size; ++i) sample[i].set_fitness(std::move(results[i]), EvalSource::Simulation);

    WarmStart out;
    const std::size_t m = sample[0].fitness().size();
    out.training.resize(m);
    for (const auto& ind : sample.members)
        for (std::size_t k = 0; k < m; ++k) out.training[k].add(ind.genome, ind.fitness()[k]);

    const auto order = rank(sample);
    out.population.members.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) out.population.members.push_back(sample[order[r]]);
    return out;
}

struct DivergenceReport {
    double mean_abs_deviation = 0.0;
    double sigma_train = 0.0;
    bool diverged = false;
};

/// Mean |prediction - simulation| over the elite, compared with one training
/// standard deviation.
inline DivergenceReport elite_deviation(const RandomForestModel& model, std::span<const Genome> elite,
                                        std::span<const double> sim_values, double sigma_multiple = 1.0) {
    require(!elite.empty(), "divergence_check: empty elite");
    require(elite.size() == sim_values.size(), "divergence_check: elite and simulation values differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < elite.size(); ++i) total += std::abs(model.predict(elite[i]) - sim_values[i]);
    DivergenceReport r;
    r.mean_abs_deviation = total / static_cast<double>(elite.size());
    r.sigma_train = model.sigma_train();
    r.diverged = r.mean_abs_deviation > sigma_multiple * r.sigma_train;
    return r;
}

inline bool divergence_check(const RandomForestModel& model, std::span<const Genome> elite,
                             std::span<const double> sim_values) {
    return elite_deviation(model, elite, sim_values).diverged;
}

/// Appends `new_pairs` to the model's training data and refits from scratch.
inline RandomForestModel retrain(const RandomForestModel& model, const TrainingSet& new_pairs, Rng rng,
                                 std::size_t workers = 1) {
    require(!new_pairs.empty(), "retrain: no new pairs");
    TrainingSet all = model.training_data();
    all.append(new_pairs);
    return fit_forest(all, model.hyperparams(), rng, workers);
}

// ---------------------------------------------------------------------------
// Accuracy summaries.

/// Coefficient of determination. Returns 1 for a perfect fit of constant
/// targets and -inf when a non-perfect fit meets constant targets.
inline double r_squared(std::span<const double> predicted, std::span<const double> actual) {
    require(predicted.size() == actual.size() && !actual.empty(), "r_squared: size mismatch or empty input");
    const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

/// 1 - MAE / sigma_train.
inline double normalized_mae_score(std::span<const double> predicted, std::span<const double> actual,
                                   double sigma_train) {
    require(predicted.size() == actual.size() && !actual.empty(), "normalized_mae_score: size mismatch");
    double mae = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) mae += std::abs(actual[i] - predicted[i]);
    mae /= static_cast<double>(actual.size());
    return sigma_train > 0.0 ? 1.0 - mae / sigma_train : (mae == 0.0 ? 1.0 : 0.0);
}

struct HoldoutScore {
    double r2 = 0.0;
    double normalized_mae = 0.0;
};

inline HoldoutScore holdout_score(const RandomForestModel& model, const TrainingSet& holdout) {
    std::vector<double> pred;
    pred.reserve(holdout.size());
    for (const auto& x : holdout.inputs) pred.push_back(model.predict(x));
    return {r_squared(pred, holdout.targets), normalized_mae_score(pred, holdout.targets, model.sigma_train())};
}

}  // namespace saopt
