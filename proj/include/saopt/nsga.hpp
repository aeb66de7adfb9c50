#pragma once

// Pareto dominance, fast non-dominated sorting, crowding distance and the
// combined NSGA-II ranking order. Objective values are never negated:
// comparisons consult each objective's direction.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "saopt/types.hpp"

namespace saopt {

struct DominanceOrdering {
    std::vector<Direction> directions;

    DominanceOrdering() = default;
    explicit DominanceOrdering(std::vector<Direction> d) : directions(std::move(d)) {
        require(!directions.empty(), "dominance ordering needs at least one objective");
    }
    static DominanceOrdering maximize_all(std::size_t m) {
        return DominanceOrdering(std::vector<Direction>(m, Direction::Maximize));
    }
    [[nodiscard]] std::size_t size() const noexcept { return directions.size(); }
};

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b, const DominanceOrdering& ord) {
    if (a.size() != b.size() || a.size() != ord.size())
        throw invalid_argument("dominates: objective count mismatch");
    bool strictly_better = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const bool maximize = ord.directions[k] == Direction::Maximize;
        const double x = maximize ? a[k] : -a[k];
        const double y = maximize ? b[k] : -b[k];
        if (x < y) return false;
        if (x > y) strictly_better = true;
    }
    return strictly_better;
}

inline bool dominates(const FitnessVector& a, const FitnessVector& b, const DominanceOrdering& ord) {
    return dominates(std::span<const double>(a.values), std::span<const double>(b.values), ord);
}

using ObjectiveMatrix = std::vector<std::vector<double>>;

struct FrontPartition {
    std::vector<std::vector<std::size_t>> fronts;  // fronts[0] is the non-dominated set
    std::vector<std::size_t> rank;                 // 1-based front number per member
};

/// Deb's fast non-dominated sort: domination sets S_p and counts n_p, then
/// peel fronts by decrementing counts.
inline FrontPartition fast_non_dominated_sort(const ObjectiveMatrix& objs, const DominanceOrdering& ord) {
    require(!objs.empty(), "fast_non_dominated_sort: empty input");
    const std::size_t n = objs.size();
    std::vector<std::vector<std::size_t>> dominated_by_p(n);
    std::vector<std::size_t> domination_count(n, 0);
    FrontPartition out;
    out.rank.assign(n, 0);

    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(objs[p], objs[q], ord))
                dominated_by_p[p].push_back(q);
            else if (dominates(objs[q], objs[p], ord))
                ++domination_count[p];
        }
        if (domination_count[p] == 0) {
            out.rank[p] = 1;
            current.push_back(p);
        }
    }

    std::size_t front_number = 1;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : current) {
            for (std::size_t q : dominated_by_p[p]) {
                if (--domination_count[q] == 0) {
                    out.rank[q] = front_number + 1;
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        out.fronts.push_back(std::move(current));
        current = std::move(next);
        ++front_number;
    }
    return out;
}

inline constexpr double kInfiniteCrowding = std::numeric_limits<double>::infinity();

/// Crowding distance of each member of one front (same order as input).
inline std::vector<double> crowding_distance(const ObjectiveMatrix& front, const DominanceOrdering& ord) {
    require(!front.empty(), "crowding_distance: empty front");
    const std::size_t n = front.size();
    const std::size_t m = ord.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), kInfiniteCrowding);
        return distance;
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < m; ++k) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
        const double lo = front[idx.front()][k];
        const double hi = front[idx.back()][k];
        distance[idx.front()] = kInfiniteCrowding;
        distance[idx.back()] = kInfiniteCrowding;
        const double span = hi - lo;
        if (span <= 0.0) continue;
        for (std::size_t r = 1; r + 1 < n; ++r) {
            double& d = distance[idx[r]];
            if (d == kInfiniteCrowding) continue;
            d += (front[idx[r + 1]][k] - front[idx[r - 1]][k]) / span;
        }
    }
    return distance;
}

struct NsgaRanking {
    FrontPartition partition;
    std::vector<double> crowding;     // per member
    std::vector<std::size_t> order;   // best-first member indices
};

/// Rank points by (front ascending, crowding descending, index ascending).
inline NsgaRanking nsga_rank(const ObjectiveMatrix& objs, const DominanceOrdering& ord) {
    NsgaRanking r;
    r.partition = fast_non_dominated_sort(objs, ord);
    r.crowding.assign(objs.size(), 0.0);
    for (const auto& f : r.partition.fronts) {
        ObjectiveMatrix pts;
        pts.reserve(f.size());
        for (std::size_t i : f) pts.push_back(objs[i]);
        const auto cd = crowding_distance(pts, ord);
        for (std::size_t j = 0; j < f.size(); ++j) r.crowding[f[j]] = cd[j];
    }
    r.order.resize(objs.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
        if (r.partition.rank[a] != r.partition.rank[b]) return r.partition.rank[a] < r.partition.rank[b];
        if (r.crowding[a] != r.crowding[b]) return r.crowding[a] > r.crowding[b];
        return a < b;
    });
    return r;
}

inline ObjectiveMatrix objective_matrix(const Population& pop) {
    require_evaluated(pop);
    ObjectiveMatrix out;
    out.reserve(pop.size());
    for (const auto& m : pop.members) out.push_back(m.fitness().values);
    return out;
}

inline DominanceOrdering ordering_of(const Population& pop) {
    require(!pop.empty(), "ordering_of: empty population");
    return DominanceOrdering(pop[0].fitness().directions);
}

/// Best-first member indices of an evaluated population.
inline std::vector<std::size_t> nsga_rank_order(const Population& pop) {
    require(!pop.empty(), "nsga_rank_order: empty population");
    require_evaluated(pop);
    return nsga_rank(objective_matrix(pop), ordering_of(pop)).order;
}

/// Indices of the non-dominated members.
inline std::vector<std::size_t> non_dominated_indices(const ObjectiveMatrix& objs, const DominanceOrdering& ord) {
    return fast_non_dominated_sort(objs, ord).fronts.front();
}

}  // namespace saopt
