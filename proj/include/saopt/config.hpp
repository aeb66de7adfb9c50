#pragma once

// Experiment configuration and its key-value file format.
//
// One `key = value` per line; `#` starts a comment; blank lines are ignored.
// Unknown keys are errors. The same format is used for run manifests, so a
// manifest can be fed back with --config to repeat a run. The full key list
// is in docs/config.md.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "saopt/forest.hpp"
#include "saopt/operators.hpp"
#include "saopt/sims.hpp"
#include "saopt/types.hpp"

namespace saopt {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kConfigFormatVersion = 1;

enum class Problem { Cps1, Cps2, PsaProxy };
enum class Mode { Direct, Surrogate };
enum class Algorithm { Ga, Nsga2 };

inline const char* to_string(Problem p) {
    switch (p) {
        case Problem::Cps1: return "cps1";
        case Problem::Cps2: return "cps2";
        case Problem::PsaProxy: return "psa_proxy";
    }
    return "?";
}
inline const char* to_string(Mode m) { return m == Mode::Direct ? "direct" : "surrogate"; }
inline const char* to_string(Algorithm a) { return a == Algorithm::Ga ? "ga" : "nsga2"; }

inline Problem parse_problem(std::string_view s) {
    if (s == "cps1") return Problem::Cps1;
    if (s == "cps2") return Problem::Cps2;
    if (s == "psa_proxy" || s == "psa") return Problem::PsaProxy;
    throw invalid_argument("unknown problem '" + std::string(s) + "'");
}
inline Mode parse_mode(std::string_view s) {
    if (s == "direct") return Mode::Direct;
    if (s == "surrogate") return Mode::Surrogate;
    throw invalid_argument("unknown mode '" + std::string(s) + "'");
}
inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "ga") return Algorithm::Ga;
    if (s == "nsga2") return Algorithm::Nsga2;
    throw invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

inline std::size_t objective_count(Problem p) { return p == Problem::PsaProxy ? 2 : 1; }

struct ExperimentConfig {
    Problem problem = Problem::Cps1;
    Mode mode = Mode::Surrogate;
    Algorithm algorithm = Algorithm::Ga;
    std::size_t generations = 50;
    std::size_t population_size = 75;
    std::size_t warm_size = 800;
    double elite_fraction = 0.15;
    std::size_t offspring = 0;  // 0: population - elite (GA), population (NSGA-II)
    std::size_t repetitions = 1;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string output_dir = "out";

    // SA-GA operators.
    double blx_alpha = 0.15;
    double ga_crossover_rate = 1.0;
    double ga_mutation_rate = 0.3;

    // SA-NSGA operators.
    std::size_t tournament_size = 2;
    std::size_t tournament_selections = 0;  // 0: population size
    double nsga_crossover_rate = 2.0 / 6.0;
    GaussianMutationParams gaussian;

    // Surrogate.
    ForestHyperparams forest;
    double divergence_sigma = 1.0;
    bool resimulate_on_divergence = true;

    CpsConfig plant;

    /// Baseline settings for a problem: SA-GA (50 generations, 800 -> 75) for
    /// the plants, SA-NSGA (60 generations, 800 -> 60) for the proxy.
    static ExperimentConfig defaults_for(Problem p) {
        ExperimentConfig c;
        c.problem = p;
        if (p == Problem::PsaProxy) {
            c.algorithm = Algorithm::Nsga2;
            c.generations = 60;
            c.population_size = 60;
        }
        return c;
    }

    [[nodiscard]] std::size_t elite_size() const { return elite_count(population_size, elite_fraction); }
    [[nodiscard]] std::size_t offspring_count() const {
        if (offspring) return offspring;
        return algorithm == Algorithm::Ga ? population_size - elite_size() : population_size;
    }

    void validate() const {
        if (algorithm == Algorithm::Ga)
            require(objective_count(problem) == 1, "algorithm ga needs a single-objective problem");
        else
            require(objective_count(problem) == 2, "algorithm nsga2 needs a two-objective problem");
        require(generations >= 1, "generations must be positive");
        require(population_size >= 2, "population must hold at least two members");
        require(warm_size >= population_size, "warm_size must be at least the population size");
        require(repetitions >= 1, "repetitions must be positive");
        require(elite_fraction > 0.0 && elite_fraction <= 1.0, "elite_fraction must lie in (0, 1]");
        require(algorithm == Algorithm::Nsga2 || population_size > elite_size() || offspring > 0,
                "population leaves no room for offspring");
        require(blx_alpha >= 0.0, "ga.blx_alpha must be non-negative");
        require(ga_crossover_rate >= 0.0 && ga_crossover_rate <= 1.0, "ga.crossover_rate must lie in [0, 1]");
        require(ga_mutation_rate >= 0.0 && ga_mutation_rate <= 1.0, "ga.mutation_rate must lie in [0, 1]");
        require(tournament_size >= 1, "nsga.tournament_size must be positive");
        require(nsga_crossover_rate >= 0.0 && nsga_crossover_rate <= 1.0, "nsga.crossover_rate must lie in [0, 1]");
        require(gaussian.rate >= 0.0 && gaussian.rate <= 1.0, "nsga.mutation_rate must lie in [0, 1]");
        require(gaussian.scale > 0.0, "nsga.mutation_scale must be positive");
        require(gaussian.shrink >= 0.0 && gaussian.shrink <= 1.0, "nsga.mutation_shrink must lie in [0, 1]");
        require(divergence_sigma >= 0.0, "surrogate.divergence_sigma must be non-negative");
        forest.validate();
        plant.validate();
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double to_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw invalid_argument("config key '" + key + "': not a number: " + v);
    return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw invalid_argument("config key '" + key + "': not a non-negative integer: " + v);
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw invalid_argument("config key '" + key + "': not a boolean: " + v);
}

// Binds every config key to a getter and setter so reading and writing share
// one table.
struct Field {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline const std::vector<Field>& config_fields() {
    using C = ExperimentConfig;
    auto real = [](std::string key, auto member) {
        return Field{key, [member](const C& c) { return fmt_real(member(const_cast<C&>(c))); },
                     [key, member](C& c, const std::string& v) { member(c) = to_real(key, v); }};
    };
    auto uint = [](std::string key, auto member) {
        return Field{key, [member](const C& c) { return std::to_string(member(const_cast<C&>(c))); },
                     [key, member](C& c, const std::string& v) {
                         member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_uint(key, v));
                     }};
    };
    auto boolean = [](std::string key, auto member) {
        return Field{key, [member](const C& c) { return std::string(member(const_cast<C&>(c)) ? "true" : "false"); },
                     [key, member](C& c, const std::string& v) { member(c) = to_bool(key, v); }};
    };
    static const std::vector<Field> fields = {
        {"problem", [](const C& c) { return std::string(to_string(c.problem)); },
         [](C& c, const std::string& v) { c.problem = parse_problem(v); }},
        {"mode", [](const C& c) { return std::string(to_string(c.mode)); },
         [](C& c, const std::string& v) { c.mode = parse_mode(v); }},
        {"algorithm", [](const C& c) { return std::string(to_string(c.algorithm)); },
         [](C& c, const std::string& v) { c.algorithm = parse_algorithm(v); }},
        uint("generations", [](C& c) -> auto& { return c.generations; }),
        uint("population", [](C& c) -> auto& { return c.population_size; }),
        uint("warm_size", [](C& c) -> auto& { return c.warm_size; }),
        real("elite_fraction", [](C& c) -> auto& { return c.elite_fraction; }),
        uint("offspring", [](C& c) -> auto& { return c.offspring; }),
        uint("repetitions", [](C& c) -> auto& { return c.repetitions; }),
        uint("seed", [](C& c) -> auto& { return c.seed; }),
        uint("threads", [](C& c) -> auto& { return c.threads; }),
        {"output_dir", [](const C& c) { return c.output_dir; },
         [](C& c, const std::string& v) { c.output_dir = v; }},
        real("ga.blx_alpha", [](C& c) -> auto& { return c.blx_alpha; }),
        real("ga.crossover_rate", [](C& c) -> auto& { return c.ga_crossover_rate; }),
        real("ga.mutation_rate", [](C& c) -> auto& { return c.ga_mutation_rate; }),
        uint("nsga.tournament_size", [](C& c) -> auto& { return c.tournament_size; }),
        uint("nsga.tournament_selections", [](C& c) -> auto& { return c.tournament_selections; }),
        real("nsga.crossover_rate", [](C& c) -> auto& { return c.nsga_crossover_rate; }),
        real("nsga.mutation_rate", [](C& c) -> auto& { return c.gaussian.rate; }),
        real("nsga.mutation_scale", [](C& c) -> auto& { return c.gaussian.scale; }),
        real("nsga.mutation_shrink", [](C& c) -> auto& { return c.gaussian.shrink; }),
        uint("forest.n_trees", [](C& c) -> auto& { return c.forest.n_trees; }),
        uint("forest.min_samples_split", [](C& c) -> auto& { return c.forest.min_samples_split; }),
        uint("forest.min_samples_leaf", [](C& c) -> auto& { return c.forest.min_samples_leaf; }),
        uint("forest.max_features", [](C& c) -> auto& { return c.forest.max_features; }),
        boolean("forest.bootstrap", [](C& c) -> auto& { return c.forest.bootstrap; }),
        real("surrogate.divergence_sigma", [](C& c) -> auto& { return c.divergence_sigma; }),
        boolean("surrogate.resimulate_on_divergence", [](C& c) -> auto& { return c.resimulate_on_divergence; }),
        uint("plant.horizon_hours", [](C& c) -> auto& { return c.plant.horizon_hours; }),
        real("plant.feed_rate", [](C& c) -> auto& { return c.plant.feed_rate; }),
        real("plant.process_capacity", [](C& c) -> auto& { return c.plant.process_capacity; }),
        real("plant.pump_failure_prob", [](C& c) -> auto& { return c.plant.pump_failure_prob; }),
        real("plant.process_failure_prob", [](C& c) -> auto& { return c.plant.process_failure_prob; }),
        uint("plant.repair_hours_with_spare", [](C& c) -> auto& { return c.plant.repair_hours_with_spare; }),
        uint("plant.repair_hours_without_spare", [](C& c) -> auto& { return c.plant.repair_hours_without_spare; }),
        uint("plant.process_repair_hours", [](C& c) -> auto& { return c.plant.process_repair_hours; }),
        uint("plant.spare_lead_time_hours", [](C& c) -> auto& { return c.plant.spare_lead_time_hours; }),
        real("plant.alpha_max", [](C& c) -> auto& { return c.plant.alpha_max; }),
        real("plant.alpha_min", [](C& c) -> auto& { return c.plant.alpha_min; }),
        real("plant.alpha_relative_std", [](C& c) -> auto& { return c.plant.alpha_relative_std; }),
        uint("plant.recycle_interval_hours", [](C& c) -> auto& { return c.plant.recycle_interval_hours; }),
        real("plant.maintenance_hours_max", [](C& c) -> auto& { return c.plant.maintenance_hours_max; }),
        boolean("plant.maintenance_pauses_production",
                [](C& c) -> auto& { return c.plant.maintenance_pauses_production; }),
        real("cost.final_product", [](C& c) -> auto& { return c.plant.costs.final_product_rev; }),
        real("cost.flare1", [](C& c) -> auto& { return c.plant.costs.flare[0]; }),
        real("cost.flare2", [](C& c) -> auto& { return c.plant.costs.flare[1]; }),
        real("cost.flare3", [](C& c) -> auto& { return c.plant.costs.flare[2]; }),
        real("cost.flare4", [](C& c) -> auto& { return c.plant.costs.flare[3]; }),
        real("cost.tank_fixed", [](C& c) -> auto& { return c.plant.costs.tank_fixed; }),
        real("cost.tank_per_m3", [](C& c) -> auto& { return c.plant.costs.tank_per_m3; }),
        real("cost.pump_fixed", [](C& c) -> auto& { return c.plant.costs.pump_fixed; }),
        real("cost.pump_per_m3", [](C& c) -> auto& { return c.plant.costs.pump_per_m3; }),
        real("cost.maintenance_per_hr", [](C& c) -> auto& { return c.plant.costs.maintenance_per_hr; }),
    };
    return fields;
}

}  // namespace detail

/// Parsed `key = value` pairs in file order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
    KeyValues out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw invalid_argument(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        out.emplace_back(detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
    }
    return out;
}

/// Applies pairs on top of `base`. If the pairs name a problem, the problem's
/// defaults are applied first so later keys override them.
inline ExperimentConfig apply_key_values(ExperimentConfig base, const KeyValues& kv) {
    for (const auto& [k, v] : kv)
        if (k == "problem") base = ExperimentConfig::defaults_for(parse_problem(v));
    for (const auto& [k, v] : kv) {
        if (k == "format_version") {
            if (detail::to_uint(k, v) != static_cast<std::uint64_t>(kConfigFormatVersion))
                throw invalid_argument("unsupported config format_version " + v);
            continue;
        }
        if (k == "code_version") continue;
        bool known = false;
        for (const auto& f : detail::config_fields()) {
            if (f.key == k) {
                f.set(base, v);
                known = true;
                break;
            }
        }
        if (!known) throw invalid_argument("unknown config key '" + k + "'");
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    return apply_key_values(std::move(base), parse_key_values(in, path));
}

/// Writes every key; the result reproduces `cfg` exactly when read back.
inline void write_config(const ExperimentConfig& cfg, std::ostream& out, bool with_code_version = false) {
    out << "format_version = " << kConfigFormatVersion << '\n';
    if (with_code_version) out << "code_version = " << kCodeVersion << '\n';
    for (const auto& f : detail::config_fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

}  // namespace saopt
