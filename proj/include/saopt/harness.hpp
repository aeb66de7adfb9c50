#pragma once

// Experiment loops: surrogate-assisted GA for the plant problems and
// surrogate-assisted NSGA-II for the adsorption proxy, with direct
// (simulation-only) baselines, call accounting and CSV export.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "saopt/config.hpp"
#include "saopt/forest.hpp"
#include "saopt/metrics.hpp"
#include "saopt/nsga.hpp"
#include "saopt/operators.hpp"
#include "saopt/parallel.hpp"
#include "saopt/rng.hpp"
#include "saopt/sims.hpp"
#include "saopt/surrogate.hpp"
#include "saopt/types.hpp"

namespace saopt {

// ---------------------------------------------------------------------------
// Problems.

struct ProblemDef {
    GeneSpecs specs;
    DominanceOrdering ordering;
    std::vector<std::string> objective_names;
    Evaluator evaluate;
    double metric_scale = 1.0;  // objectives are divided by this before HV / GD+ / IGD+
};

inline ProblemDef make_problem(Problem p, const CpsConfig& plant = {}) {
    ProblemDef d;
    switch (p) {
        case Problem::Cps1:
            d.specs = cps1_specs();
            d.ordering = DominanceOrdering::maximize_all(1);
            d.objective_names = {"revenue"};
            d.evaluate = [plant](const Genome& g, Rng& rng) {
                return FitnessVector::maximize(simulate_cps1(g, plant, rng).revenue);
            };
            break;
        case Problem::Cps2:
            d.specs = cps2_specs();
            d.ordering = DominanceOrdering::maximize_all(1);
            d.objective_names = {"revenue"};
            d.evaluate = [plant](const Genome& g, Rng& rng) {
                return FitnessVector::maximize(simulate_cps2(g, plant, rng).revenue);
            };
            break;
        case Problem::PsaProxy:
            d.specs = psa_specs();
            d.ordering = DominanceOrdering::maximize_all(2);
            d.objective_names = {"purity", "recovery"};
            d.metric_scale = 100.0;
            d.evaluate = [](const Genome& g, Rng&) {
                const auto m = evaluate_psa_proxy(g);
                return FitnessVector({purity(m), recovery(m)}, {Direction::Maximize, Direction::Maximize});
            };
            break;
    }
    return d;
}

inline ProblemDef make_problem(const ExperimentConfig& cfg) { return make_problem(cfg.problem, cfg.plant); }

/// Dense sample of the proxy's optimal front in metric (fraction) units.
inline ObjectiveMatrix proxy_reference_front(std::size_t n = 500) { return psa_proxy_front(n); }

// ---------------------------------------------------------------------------
// Records.

struct GenerationRecord {
    std::size_t generation = 0;

    // Single objective, simulator-measured over the elite.
    double best = std::numeric_limits<double>::quiet_NaN();
    double elite_mean = std::numeric_limits<double>::quiet_NaN();
    double population_mean = std::numeric_limits<double>::quiet_NaN();
    double best_so_far = std::numeric_limits<double>::quiet_NaN();

    // Two objectives: first front of the survivors, raw objective units.
    ObjectiveMatrix front;
    double hv = std::numeric_limits<double>::quiet_NaN();
    double gd_plus = std::numeric_limits<double>::quiet_NaN();
    double igd_plus = std::numeric_limits<double>::quiet_NaN();

    std::size_t sim_calls = 0;        // cumulative, warm start included
    std::size_t surrogate_calls = 0;  // cumulative
    bool diverged = false;
    bool retrained = false;
    double deviation = 0.0;    // mean elite |prediction - simulation| over sigma_train, worst objective
    std::size_t promoted = 0;  // offspring simulated on entering the elite
    double wall_time = 0.0;    // seconds since the run started

    std::vector<Individual> elite;
};

struct RunResult {
    Problem problem = Problem::Cps1;
    Mode mode = Mode::Direct;
    Algorithm algorithm = Algorithm::Ga;
    std::size_t repetition = 0;

    std::vector<GenerationRecord> records;
    Population final_front;  // final elite (GA) or simulator-verified first front (NSGA-II)
    std::vector<TrainingSet> warm_training;
    std::vector<double> hv_reference;  // metric units
    std::vector<RandomForestModel> models;

    std::size_t warm_sim_calls = 0;
    std::size_t verification_sim_calls = 0;
    std::size_t retrain_count = 0;
    double wall_time = 0.0;

    [[nodiscard]] std::size_t total_sim_calls() const {
        return (records.empty() ? warm_sim_calls : records.back().sim_calls) + verification_sim_calls;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Evaluates genomes[i] with base.derive(i).
inline std::vector<FitnessVector> simulate_batch(const ProblemDef& prob, const std::vector<Genome>& genomes,
                                                 const Rng& base, std::size_t workers) {
    std::vector<FitnessVector> out(genomes.size());
    parallel_for(
        genomes.size(),
        [&](std::size_t i) {
            Rng r = base.derive(i);
            out[i] = prob.evaluate(genomes[i], r);
        },
        workers);
    return out;
}

inline FitnessVector predict_all(const std::vector<RandomForestModel>& models, const Genome& g,
                                 const DominanceOrdering& ord) {
    std::vector<double> v;
    v.reserve(models.size());
    for (const auto& m : models) v.push_back(m.predict(g));
    return FitnessVector(std::move(v), ord.directions);
}

inline std::vector<RandomForestModel> fit_models(const std::vector<TrainingSet>& data, const ForestHyperparams& hp,
                                                 const Rng& base, std::size_t workers) {
    std::vector<RandomForestModel> out;
    out.reserve(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) out.push_back(fit_forest(data[k], hp, base.derive(k), workers));
    return out;
}

inline ObjectiveMatrix scaled(const ObjectiveMatrix& pts, double scale) {
    ObjectiveMatrix out = pts;
    for (auto& p : out)
        for (double& v : p) v /= scale;
    return out;
}

// HV over the points that weakly dominate ref; the rest add nothing.
inline double clipped_hypervolume(const ObjectiveMatrix& pts, const std::vector<double>& ref,
                                  const DominanceOrdering& ord) {
    ObjectiveMatrix kept;
    for (const auto& p : pts) {
        bool ok = true;
        for (std::size_t k = 0; k < p.size(); ++k)
            ok = ok && (ord.directions[k] == Direction::Maximize ? p[k] >= ref[k] : p[k] <= ref[k]);
        if (ok) kept.push_back(p);
    }
    return hypervolume_2d(kept, ref, ord);
}

inline Population first_front(const Population& pop) {
    Population out;
    out.generation = pop.generation;
    for (std::size_t i : non_dominated_indices(objective_matrix(pop), ordering_of(pop)))
        out.members.push_back(pop[i]);
    return out;
}

inline Rng repetition_stream(const ExperimentConfig& cfg, std::size_t rep) {
    return Rng(cfg.seed).derive(stream::kRepetition, rep);
}

inline void require_algorithm(const ExperimentConfig& cfg, Algorithm a) {
    cfg.validate();
    if (cfg.algorithm != a)
        throw invalid_argument(std::string("configuration names algorithm ") + to_string(cfg.algorithm));
}

// Role tags for per-generation simulation streams.
inline constexpr std::uint64_t kOffspringRole = 0;
inline constexpr std::uint64_t kEliteRole = 1;
inline constexpr std::uint64_t kVerifyRole = 2;

}  // namespace detail

namespace detail {

struct Grounding {
    std::vector<std::size_t> order;  // best-first pool indices after the last pass
    std::size_t simulated = 0;
    std::size_t promoted = 0;        // surrogate-valued entrants simulated after the first pass
};

// Simulates the top n_elite of the pool, then keeps simulating surrogate-valued
// members that rank into the top n_elite until none are left. Pool member i
// uses base.derive(i), at most once per call.
template <typename RankFn>
Grounding ground_elite(Population& pool, std::size_t n_elite, const RankFn& rank, const ProblemDef& prob,
                       const Rng& base, std::size_t workers, const std::vector<std::size_t>& candidates = {}) {
    Grounding out;
    std::vector<char> fresh(pool.size(), 0);
    for (bool first = true;; first = false) {
        out.order = rank(pool);
        std::vector<std::size_t> todo;
        for (std::size_t r = 0; r < n_elite; ++r) {
            const std::size_t i = out.order[r];
            if (!fresh[i] && (first || pool[i].source() != EvalSource::Simulation)) todo.push_back(i);
        }
        if (first)
            for (std::size_t i : candidates)
                if (std::find(todo.begin(), todo.end(), i) == todo.end()) todo.push_back(i);
        if (todo.empty()) break;
        for (std::size_t i : todo) out.promoted += pool[i].source() == EvalSource::Surrogate;
        std::vector<FitnessVector> fx(todo.size());
        parallel_for(
            todo.size(),
            [&](std::size_t t) {
                Rng r = base.derive(todo[t]);
                fx[t] = prob.evaluate(pool[todo[t]].genome, r);
            },
            workers);
        for (std::size_t t = 0; t < todo.size(); ++t) {
            pool[todo[t]].set_fitness(std::move(fx[t]), EvalSource::Simulation);
            fresh[todo[t]] = 1;
        }
        out.simulated += todo.size();
    }
    return out;
}

// Surrogate-valued members that reach the top n_elite when every member,
// simulated or not, is compared on forest predictions.
template <typename RankFn>
std::vector<std::size_t> predicted_entrants(const Population& pool, std::size_t n_elite, const RankFn& rank,
                                            const std::vector<RandomForestModel>& models,
                                            const DominanceOrdering& ord, std::size_t& surrogate_calls) {
    Population q = pool;
    for (auto& ind : q.members)
        if (ind.source() == EvalSource::Simulation) {
            ind.set_fitness(predict_all(models, ind.genome, ord), EvalSource::Surrogate);
            ++surrogate_calls;
        }
    const auto order = rank(q);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < std::min(n_elite, order.size()); ++r)
        if (pool[order[r]].source() == EvalSource::Surrogate) out.push_back(order[r]);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SA-GA.

/// One repetition of the assisted GA (or its direct baseline when
/// cfg.mode == Direct). Each generation: rank, simulate the elite (and any
/// offspring promoted into it), check the elite against the forest and
/// retrain on divergence, then breed offspring with BLX-alpha and random
/// substitution and evaluate them with the forest, or with the simulator in
/// direct mode and in diverged generations.
inline RunResult run_sa_ga(const ExperimentConfig& cfg, std::size_t rep = 0) {
    detail::require_algorithm(cfg, Algorithm::Ga);
    const auto t0 = detail::Clock::now();
    const ProblemDef prob = make_problem(cfg);
    const Rng root = detail::repetition_stream(cfg, rep);
    const bool assisted = cfg.mode == Mode::Surrogate;
    const std::size_t n_elite = cfg.elite_size();
    const std::size_t n_off = cfg.offspring_count();

    RunResult res;
    res.problem = cfg.problem;
    res.mode = cfg.mode;
    res.algorithm = Algorithm::Ga;
    res.repetition = rep;

    auto ranker = [](const Population& p) { return ranked_indices(p, objective_order(p)); };
    WarmStart ws = warm_start(prob.specs, cfg.warm_size, cfg.population_size, prob.evaluate, ranker, root,
                              cfg.threads);
    res.warm_training = ws.training;
    res.warm_sim_calls = cfg.warm_size;

    std::size_t sim_calls = cfg.warm_size;
    std::size_t surrogate_calls = 0;
    if (assisted) res.models = detail::fit_models(ws.training, cfg.forest, root.derive(stream::kForest, 0), cfg.threads);
    TrainingSet pending;

    Population pop = std::move(ws.population);
    double best_so_far = -std::numeric_limits<double>::infinity();

    for (std::size_t g = 0; g < cfg.generations; ++g) {
        const auto entrants = assisted ? detail::predicted_entrants(pop, n_elite, ranker, res.models, prob.ordering,
                                                                    surrogate_calls)
                                       : std::vector<std::size_t>{};
        const auto grounding =
            detail::ground_elite(pop, n_elite, ranker, prob,
                                 root.derive(stream::kSimulation, g + 1, detail::kEliteRole), cfg.threads, entrants);
        sim_calls += grounding.simulated;
        Population elite;
        elite.generation = g;
        for (std::size_t r = 0; r < n_elite; ++r) elite.members.push_back(pop[grounding.order[r]]);

        GenerationRecord rec;
        rec.generation = g;
        rec.promoted = grounding.promoted;
        if (assisted) {
            std::vector<Genome> genomes;
            std::vector<double> values;
            for (const auto& e : elite.members) {
                genomes.push_back(e.genome);
                values.push_back(e.fitness()[0]);
                pending.add(e.genome, e.fitness()[0]);
            }
            const auto dev = elite_deviation(res.models[0], genomes, values, cfg.divergence_sigma);
            surrogate_calls += n_elite;
            rec.deviation = dev.sigma_train > 0.0 ? dev.mean_abs_deviation / dev.sigma_train
                                                  : std::numeric_limits<double>::infinity();
            rec.diverged = dev.diverged;
            if (rec.diverged) {
                ++res.retrain_count;
                res.models[0] = retrain(res.models[0], pending, root.derive(stream::kForest, res.retrain_count, 0),
                                        cfg.threads);
                pending = {};
                rec.retrained = true;
            }
        }

        Rng ops = root.derive(stream::kOperators, g);
        std::vector<Genome> children;
        children.reserve(n_off);
        for (std::size_t j = 0; j < n_off; ++j) {
            const std::size_t a = ops.below(n_elite);
            std::size_t b = a;
            if (n_elite > 1) {
                b = ops.below(n_elite - 1);
                if (b >= a) ++b;
            }
            Genome child = ops.bernoulli(cfg.ga_crossover_rate)
                               ? blx_alpha_crossover(elite[a].genome, elite[b].genome, cfg.blx_alpha, prob.specs, ops)
                               : elite[a].genome;
            children.push_back(random_substitution_mutation(std::move(child), prob.specs, cfg.ga_mutation_rate, ops));
        }

        Population offspring;
        offspring.members.reserve(n_off);
        for (auto& c : children) offspring.members.emplace_back(c);
        if (!assisted || (rec.diverged && cfg.resimulate_on_divergence)) {
            const auto fx = detail::simulate_batch(
                prob, children, root.derive(stream::kSimulation, g + 1, detail::kOffspringRole), cfg.threads);
            sim_calls += n_off;
            for (std::size_t j = 0; j < n_off; ++j) {
                offspring[j].set_fitness(fx[j], EvalSource::Simulation);
                if (assisted) pending.add(children[j], fx[j][0]);
            }
        } else {
            for (auto& ind : offspring.members)
                ind.set_fitness(detail::predict_all(res.models, ind.genome, prob.ordering), EvalSource::Surrogate);
            surrogate_calls += n_off;
        }

        double elite_sum = 0.0;
        rec.best = -std::numeric_limits<double>::infinity();
        for (const auto& e : elite.members) {
            elite_sum += e.fitness()[0];
            rec.best = std::max(rec.best, e.fitness()[0]);
        }
        rec.elite_mean = elite_sum / static_cast<double>(n_elite);
        double pop_sum = elite_sum;
        for (const auto& o : offspring.members) pop_sum += o.fitness()[0];
        rec.population_mean = pop_sum / static_cast<double>(n_elite + n_off);
        best_so_far = std::max(best_so_far, rec.best);
        rec.best_so_far = best_so_far;
        rec.sim_calls = sim_calls;
        rec.surrogate_calls = surrogate_calls;
        rec.elite = elite.members;
        rec.wall_time = detail::seconds_since(t0);
        res.records.push_back(std::move(rec));

        pop.members = std::move(elite.members);
        for (auto& o : offspring.members) pop.members.push_back(std::move(o));
        pop.generation = g + 1;
    }

    res.final_front.members = res.records.back().elite;
    res.final_front.generation = cfg.generations;
    res.wall_time = detail::seconds_since(t0);
    return res;
}

// ---------------------------------------------------------------------------
// SA-NSGA.

/// One repetition of the assisted NSGA-II (or its direct baseline). Each
/// generation: rank by front and crowding, simulate the top elite fraction
/// (and any promoted offspring), retrain both forests when either one
/// deviates, keep the top population_size, then binary tournaments,
/// intermediate crossover and Gaussian mutation. The final front is
/// simulator-verified.
inline RunResult run_sa_nsga(const ExperimentConfig& cfg, std::size_t rep = 0) {
    detail::require_algorithm(cfg, Algorithm::Nsga2);
    const auto t0 = detail::Clock::now();
    const ProblemDef prob = make_problem(cfg);
    const Rng root = detail::repetition_stream(cfg, rep);
    const bool assisted = cfg.mode == Mode::Surrogate;
    const std::size_t n = cfg.population_size;
    const std::size_t n_elite = cfg.elite_size();
    const std::size_t n_select = cfg.tournament_selections ? cfg.tournament_selections : n;
    const std::size_t n_off = cfg.offspring_count();
    const std::size_t m = prob.ordering.size();

    RunResult res;
    res.problem = cfg.problem;
    res.mode = cfg.mode;
    res.algorithm = Algorithm::Nsga2;
    res.repetition = rep;

    WarmStart ws = warm_start(prob.specs, cfg.warm_size, n, prob.evaluate, nsga_rank_order, root, cfg.threads);
    res.warm_training = ws.training;
    res.warm_sim_calls = cfg.warm_size;
    {
        ObjectiveMatrix warm_pts(cfg.warm_size, std::vector<double>(m));
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < cfg.warm_size; ++i) warm_pts[i][k] = ws.training[k].targets[i];
        res.hv_reference = worst_corner(detail::scaled(warm_pts, prob.metric_scale), prob.ordering);
    }
    const ObjectiveMatrix Z = cfg.problem == Problem::PsaProxy ? proxy_reference_front() : ObjectiveMatrix{};

    std::size_t sim_calls = cfg.warm_size;
    std::size_t surrogate_calls = 0;
    if (assisted) res.models = detail::fit_models(ws.training, cfg.forest, root.derive(stream::kForest, 0), cfg.threads);
    std::vector<TrainingSet> pending(m);

    Population pop = std::move(ws.population);

    for (std::size_t g = 0; g < cfg.generations; ++g) {
        const auto entrants = assisted ? detail::predicted_entrants(pop, n_elite, nsga_rank_order, res.models,
                                                                    prob.ordering, surrogate_calls)
                                       : std::vector<std::size_t>{};
        const auto grounding =
            detail::ground_elite(pop, n_elite, nsga_rank_order, prob,
                                 root.derive(stream::kSimulation, g + 1, detail::kEliteRole), cfg.threads, entrants);
        sim_calls += grounding.simulated;
        Population survivors;
        survivors.generation = g;
        const std::size_t keep = std::min(n, pop.size());
        for (std::size_t r = 0; r < keep; ++r) survivors.members.push_back(pop[grounding.order[r]]);

        GenerationRecord rec;
        rec.generation = g;
        rec.promoted = grounding.promoted;
        if (assisted) {
            std::vector<Genome> genomes;
            for (std::size_t i = 0; i < n_elite; ++i) genomes.push_back(survivors[i].genome);
            rec.deviation = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                std::vector<double> values;
                for (std::size_t i = 0; i < n_elite; ++i) {
                    values.push_back(survivors[i].fitness()[k]);
                    pending[k].add(genomes[i], values.back());
                }
                const auto dev = elite_deviation(res.models[k], genomes, values, cfg.divergence_sigma);
                rec.deviation = std::max(rec.deviation, dev.sigma_train > 0.0
                                                            ? dev.mean_abs_deviation / dev.sigma_train
                                                            : std::numeric_limits<double>::infinity());
                rec.diverged = rec.diverged || dev.diverged;
            }
            surrogate_calls += n_elite;
            if (rec.diverged) {
                ++res.retrain_count;
                for (std::size_t k = 0; k < m; ++k)
                    res.models[k] = retrain(res.models[k], pending[k],
                                            root.derive(stream::kForest, res.retrain_count, k), cfg.threads);
                pending.assign(m, TrainingSet{});
                rec.retrained = true;
            }
        }

        const Population front = detail::first_front(survivors);
        rec.front = objective_matrix(front);
        const auto pts = detail::scaled(rec.front, prob.metric_scale);
        rec.hv = detail::clipped_hypervolume(pts, res.hv_reference, prob.ordering);
        if (!Z.empty()) {
            rec.gd_plus = gd_plus(pts, Z, prob.ordering);
            rec.igd_plus = igd_plus(pts, Z, prob.ordering);
        }

        Rng ops = root.derive(stream::kOperators, g);
        std::vector<std::size_t> identity(keep);
        std::iota(identity.begin(), identity.end(), std::size_t{0});
        const Population mating =
            tournament_selection(survivors, cfg.tournament_size, n_select, position_order(identity), ops);
        std::vector<Genome> children;
        children.reserve(n_off);
        for (std::size_t j = 0; children.size() < n_off; j += 2) {
            const Genome& p1 = mating[j % mating.size()].genome;
            const Genome& p2 = mating[(j + 1) % mating.size()].genome;
            auto pair = intermediate_crossover(p1, p2, cfg.nsga_crossover_rate, prob.specs, ops);
            children.push_back(
                gaussian_mutation(std::move(pair.first), prob.specs, cfg.gaussian, g, cfg.generations, ops));
            if (children.size() < n_off)
                children.push_back(
                    gaussian_mutation(std::move(pair.second), prob.specs, cfg.gaussian, g, cfg.generations, ops));
        }

        Population offspring;
        offspring.members.reserve(n_off);
        for (auto& c : children) offspring.members.emplace_back(c);
        if (!assisted || (rec.diverged && cfg.resimulate_on_divergence)) {
            const auto fx = detail::simulate_batch(
                prob, children, root.derive(stream::kSimulation, g + 1, detail::kOffspringRole), cfg.threads);
            sim_calls += n_off;
            for (std::size_t j = 0; j < n_off; ++j) {
                offspring[j].set_fitness(fx[j], EvalSource::Simulation);
                if (assisted)
                    for (std::size_t k = 0; k < m; ++k) pending[k].add(children[j], fx[j][k]);
            }
        } else {
            for (auto& ind : offspring.members)
                ind.set_fitness(detail::predict_all(res.models, ind.genome, prob.ordering), EvalSource::Surrogate);
            surrogate_calls += n_off;
        }

        rec.sim_calls = sim_calls;
        rec.surrogate_calls = surrogate_calls;
        rec.elite.assign(survivors.members.begin(), survivors.members.begin() + static_cast<std::ptrdiff_t>(n_elite));
        rec.wall_time = detail::seconds_since(t0);
        res.records.push_back(std::move(rec));

        pop.members = std::move(survivors.members);
        for (auto& o : offspring.members) pop.members.push_back(std::move(o));
        pop.generation = g + 1;
    }

    // Final survivors; anything still carrying a surrogate value is simulated
    // before the front is reported.
    const auto order = nsga_rank_order(pop);
    Population last;
    last.generation = cfg.generations;
    for (std::size_t r = 0; r < std::min(n, pop.size()); ++r) last.members.push_back(pop[order[r]]);
    Population candidates = detail::first_front(last);
    std::vector<std::size_t> unverified;
    std::vector<Genome> genomes;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].source() != EvalSource::Simulation) {
            unverified.push_back(i);
            genomes.push_back(candidates[i].genome);
        }
    if (!genomes.empty()) {
        const auto fx = detail::simulate_batch(
            prob, genomes, root.derive(stream::kSimulation, cfg.generations + 1, detail::kVerifyRole), cfg.threads);
        for (std::size_t i = 0; i < unverified.size(); ++i)
            candidates[unverified[i]].set_fitness(fx[i], EvalSource::Simulation);
        res.verification_sim_calls = genomes.size();
        candidates = detail::first_front(candidates);
    }
    res.final_front = std::move(candidates);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

// ---------------------------------------------------------------------------
// Repetitions and baselines.

inline RunResult run_once(const ExperimentConfig& cfg, std::size_t rep) {
    return cfg.algorithm == Algorithm::Ga ? run_sa_ga(cfg, rep) : run_sa_nsga(cfg, rep);
}

inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunResult> out;
    out.reserve(cfg.repetitions);
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) out.push_back(run_once(cfg, rep));
    return out;
}

/// The same loop with every evaluation sent to the simulator.
inline std::vector<RunResult> run_direct_baseline(ExperimentConfig cfg) {
    cfg.mode = Mode::Direct;
    return run_experiment(cfg);
}

/// Final HV of a run in metric units, against the run's own reference.
inline double final_hypervolume(const RunResult& r, const ProblemDef& prob) {
    require(!r.hv_reference.empty(), "final_hypervolume: run has no hypervolume reference");
    return detail::clipped_hypervolume(detail::scaled(objective_matrix(r.final_front), prob.metric_scale),
                                       r.hv_reference, prob.ordering);
}

// ---------------------------------------------------------------------------
// Speedup.

struct SpeedupReport {
    std::size_t direct_sim_calls = 0;
    std::size_t surrogate_sim_calls = 0;
    std::size_t warm_sim_calls = 0;           // per side
    double sim_call_ratio = 0.0;              // warm start counted on both sides
    double sim_call_ratio_excluding_warm = 0.0;
    double wall_time_ratio = 0.0;
    std::vector<double> holdout_r2;            // per objective, averaged over repetitions
    std::vector<double> holdout_normalized_mae;
};

/// n fresh simulator-evaluated samples, one training set per objective.
inline std::vector<TrainingSet> make_holdout(const ExperimentConfig& cfg, std::size_t n) {
    const ProblemDef prob = make_problem(cfg);
    Rng root = Rng(cfg.seed).derive(stream::kHoldout);
    Rng genomes_rng = root.derive(0);
    const Population sample = init_random_population(prob.specs, n, genomes_rng);
    std::vector<Genome> genomes;
    for (const auto& ind : sample.members) genomes.push_back(ind.genome);
    const auto fx = detail::simulate_batch(prob, genomes, root.derive(1), cfg.threads);
    std::vector<TrainingSet> out(prob.ordering.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < out.size(); ++k) out[k].add(genomes[i], fx[i][k]);
    return out;
}

inline double ratio_of(std::size_t direct, std::size_t surrogate) {
    require(direct > 0 && surrogate > 0, "speedup: call counts must be positive");
    return static_cast<double>(direct) / static_cast<double>(surrogate);
}

/// Compares paired direct and assisted repetitions. Holdout scores use each
/// assisted repetition's final forests.
inline SpeedupReport compute_speedup(const std::vector<RunResult>& direct, const std::vector<RunResult>& surrogate,
                                     const std::vector<TrainingSet>& holdout = {}) {
    require(!direct.empty() && !surrogate.empty(), "compute_speedup: no runs");
    for (const auto& r : direct) require(r.mode == Mode::Direct, "compute_speedup: direct side holds an assisted run");
    for (const auto& r : surrogate)
        require(r.mode == Mode::Surrogate, "compute_speedup: assisted side holds a direct run");
    const auto& d0 = direct.front();
    for (const auto* side : {&direct, &surrogate})
        for (const auto& r : *side)
            if (r.problem != d0.problem || r.algorithm != d0.algorithm || r.records.size() != d0.records.size() ||
                r.warm_sim_calls != d0.warm_sim_calls)
                throw invalid_argument("compute_speedup: runs differ in problem, algorithm or generation count");

    SpeedupReport rep;
    double d_time = 0.0;
    double s_time = 0.0;
    for (const auto& r : direct) {
        rep.direct_sim_calls += r.total_sim_calls();
        d_time += r.wall_time;
    }
    for (const auto& r : surrogate) {
        rep.surrogate_sim_calls += r.total_sim_calls();
        s_time += r.wall_time;
    }
    rep.warm_sim_calls = d0.warm_sim_calls;
    rep.sim_call_ratio = ratio_of(rep.direct_sim_calls, rep.surrogate_sim_calls);
    const std::size_t d_warm = d0.warm_sim_calls * direct.size();
    const std::size_t s_warm = d0.warm_sim_calls * surrogate.size();
    if (rep.direct_sim_calls > d_warm && rep.surrogate_sim_calls > s_warm)
        rep.sim_call_ratio_excluding_warm = ratio_of(rep.direct_sim_calls - d_warm, rep.surrogate_sim_calls - s_warm);
    rep.wall_time_ratio = s_time > 0.0 ? d_time / s_time : 0.0;

    if (!holdout.empty()) {
        rep.holdout_r2.assign(holdout.size(), 0.0);
        rep.holdout_normalized_mae.assign(holdout.size(), 0.0);
        for (const auto& r : surrogate) {
            require(r.models.size() == holdout.size(), "compute_speedup: holdout and model objective counts differ");
            for (std::size_t k = 0; k < holdout.size(); ++k) {
                const auto s = holdout_score(r.models[k], holdout[k]);
                rep.holdout_r2[k] += s.r2 / static_cast<double>(surrogate.size());
                rep.holdout_normalized_mae[k] += s.normalized_mae / static_cast<double>(surrogate.size());
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Export.

struct ExportPaths {
    std::filesystem::path generations;
    std::filesystem::path final_front;
    std::filesystem::path fronts;  // empty for single-objective runs
    std::filesystem::path timing;
    std::filesystem::path manifest;
};

namespace detail {

inline std::string csv_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw io_error("cannot write " + p.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw io_error("write failed: " + p.string());
}

}  // namespace detail

/// Writes generations.csv, final_front.csv, timing.csv, manifest.cfg (and
/// fronts.csv for two-objective runs) into `dir`. Everything except
/// timing.csv is a deterministic function of the manifest.
inline ExportPaths export_results(const std::vector<RunResult>& runs, const ExperimentConfig& cfg,
                                  const std::filesystem::path& dir) {
    require(!runs.empty(), "export_results: no runs");
    for (const auto& r : runs) require(!r.records.empty(), "export_results: run without records");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw io_error("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));

    const ProblemDef prob = make_problem(cfg);
    const bool multi = cfg.algorithm == Algorithm::Nsga2;
    ExportPaths paths{dir / "generations.csv", dir / "final_front.csv", multi ? dir / "fronts.csv" : std::filesystem::path{},
                      dir / "timing.csv", dir / "manifest.cfg"};
    using detail::csv_real;

    {
        auto out = detail::open_for_write(paths.generations);
        if (multi)
            out << "experiment_id,generation,hv,gd_plus,igd_plus,sim_calls,surrogate_calls,diverged,retrained\n";
        else
            out << "experiment_id,generation,best,elite_mean,population_mean,best_so_far,sim_calls,surrogate_calls,"
                   "diverged,retrained\n";
        for (const auto& r : runs)
            for (const auto& g : r.records) {
                out << r.repetition << ',' << g.generation << ',';
                if (multi)
                    out << csv_real(g.hv) << ',' << csv_real(g.gd_plus) << ',' << csv_real(g.igd_plus);
                else
                    out << csv_real(g.best) << ',' << csv_real(g.elite_mean) << ',' << csv_real(g.population_mean)
                        << ',' << csv_real(g.best_so_far);
                out << ',' << g.sim_calls << ',' << g.surrogate_calls << ',' << int(g.diverged) << ','
                    << int(g.retrained) << '\n';
            }
        detail::finish(out, paths.generations);
    }
    {
        auto out = detail::open_for_write(paths.final_front);
        out << "experiment_id";
        for (const auto& name : prob.objective_names) out << ',' << name;
        for (const auto& s : prob.specs) out << ',' << s.name;
        out << '\n';
        for (const auto& r : runs)
            for (const auto& ind : r.final_front.members) {
                out << r.repetition;
                for (double v : ind.fitness().values) out << ',' << csv_real(v);
                for (double v : ind.genome) out << ',' << csv_real(v);
                out << '\n';
            }
        detail::finish(out, paths.final_front);
    }
    if (multi) {
        auto out = detail::open_for_write(paths.fronts);
        out << "experiment_id,generation";
        for (const auto& name : prob.objective_names) out << ',' << name;
        out << '\n';
        for (const auto& r : runs)
            for (const auto& g : r.records)
                for (const auto& p : g.front) {
                    out << r.repetition << ',' << g.generation;
                    for (double v : p) out << ',' << csv_real(v);
                    out << '\n';
                }
        detail::finish(out, paths.fronts);
    }
    {
        auto out = detail::open_for_write(paths.timing);
        out << "experiment_id,generation,wall_time_s\n";
        for (const auto& r : runs)
            for (const auto& g : r.records) out << r.repetition << ',' << g.generation << ',' << csv_real(g.wall_time) << '\n';
        detail::finish(out, paths.timing);
    }
    {
        auto out = detail::open_for_write(paths.manifest);
        out << "# run manifest; feed back with --config to repeat this run\n";
        write_config(cfg, out, true);
        detail::finish(out, paths.manifest);
    }
    return paths;
}

}  // namespace saopt
