#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace saopt {

// Error categories. All derive from the matching std exception so callers
// can catch broadly.
struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct contract_violation : std::logic_error {
    using std::logic_error::logic_error;
};
struct undefined_quantity : std::domain_error {
    using std::domain_error::domain_error;
};
struct unsupported_dimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw invalid_argument(what);
}

/// Bounds for one decision variable.
struct GeneSpec {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;

    GeneSpec() = default;
    GeneSpec(std::string n, double lo, double hi) : name(std::move(n)), lower(lo), upper(hi) {
        require(std::isfinite(lo) && std::isfinite(hi), "gene '" + name + "': bounds must be finite");
        require(lo < hi, "gene '" + name + "': lower bound must be below upper bound");
    }

    [[nodiscard]] double range() const noexcept { return upper - lower; }
    [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
};

using GeneSpecs = std::vector<GeneSpec>;
using Genome = std::vector<double>;

enum class Direction { Maximize, Minimize };

/// Objective values with their optimization direction.
struct FitnessVector {
    std::vector<double> values;
    std::vector<Direction> directions;

    FitnessVector() = default;
    FitnessVector(std::vector<double> v, std::vector<Direction> d)
        : values(std::move(v)), directions(std::move(d)) {
        require(!values.empty(), "fitness vector needs at least one objective");
        require(values.size() == directions.size(), "fitness values and directions differ in length");
    }

    static FitnessVector maximize(double v) { return {{v}, {Direction::Maximize}}; }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

enum class EvalSource { Unevaluated, Simulation, Surrogate };

inline const char* to_string(EvalSource s) {
    switch (s) {
        case EvalSource::Simulation: return "simulation";
        case EvalSource::Surrogate: return "surrogate";
        case EvalSource::Unevaluated: break;
    }
    return "unevaluated";
}

class Individual {
public:
    Individual() = default;
    explicit Individual(Genome g) : genome(std::move(g)) {}

    Genome genome;

    [[nodiscard]] bool evaluated() const noexcept { return fitness_.has_value(); }
    [[nodiscard]] EvalSource source() const noexcept { return source_; }

    [[nodiscard]] const FitnessVector& fitness() const {
        if (!fitness_) throw contract_violation("individual has not been evaluated");
        return *fitness_;
    }

    void set_fitness(FitnessVector f, EvalSource src) {
        if (src == EvalSource::Unevaluated)
            throw contract_violation("fitness must come from simulation or surrogate");
        fitness_ = std::move(f);
        source_ = src;
    }

    void clear_fitness() noexcept {
        fitness_.reset();
        source_ = EvalSource::Unevaluated;
    }

private:
    std::optional<FitnessVector> fitness_;
    EvalSource source_ = EvalSource::Unevaluated;
};

struct Population {
    std::vector<Individual> members;
    std::size_t generation = 0;

    [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
    [[nodiscard]] bool empty() const noexcept { return members.empty(); }
    Individual& operator[](std::size_t i) { return members[i]; }
    const Individual& operator[](std::size_t i) const { return members[i]; }
};

inline void require_evaluated(const Population& pop) {
    for (const auto& m : pop.members)
        if (!m.evaluated()) throw contract_violation("population contains an unevaluated member");
}

}  // namespace saopt
