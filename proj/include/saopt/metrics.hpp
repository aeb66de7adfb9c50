#pragma once

// Quality indicators for two-objective fronts: exact hypervolume, GD+ and
// IGD+, and the generations-to-success summary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saopt/nsga.hpp"
#include "saopt/types.hpp"

namespace saopt {

struct FrontSet {
    ObjectiveMatrix points;
    std::string label;
};

namespace detail {
inline void require_dims(const ObjectiveMatrix& pts, std::size_t m, const char* who) {
    for (const auto& p : pts) {
        if (p.size() != m) throw invalid_argument(std::string(who) + ": inconsistent objective dimension");
        for (double v : p)
            if (!std::isfinite(v)) throw invalid_argument(std::string(who) + ": non-finite objective value");
    }
}

// Value flipped so that larger is better.
inline double oriented(double v, Direction d) { return d == Direction::Maximize ? v : -v; }

// Dominance-aware distance: only the amount by which `from` falls short of
// `to` counts.
inline double shortfall_distance(std::span<const double> from, std::span<const double> to,
                                 const DominanceOrdering& ord) {
    double ss = 0.0;
    for (std::size_t k = 0; k < from.size(); ++k) {
        const double gap = std::max(oriented(to[k], ord.directions[k]) - oriented(from[k], ord.directions[k]), 0.0);
        ss += gap * gap;
    }
    return std::sqrt(ss);
}
}  // namespace detail

/// Exact area dominated by `front` and bounded by `ref` (two objectives).
inline double hypervolume_2d(const ObjectiveMatrix& front, std::span<const double> ref,
                             const DominanceOrdering& ord = DominanceOrdering::maximize_all(2)) {
    if (ref.size() != 2 || ord.size() != 2) throw unsupported_dimension("hypervolume_2d: only two objectives");
    detail::require_dims(front, 2, "hypervolume_2d");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(front.size());
    const double rx = detail::oriented(ref[0], ord.directions[0]);
    const double ry = detail::oriented(ref[1], ord.directions[1]);
    for (const auto& p : front) {
        const double x = detail::oriented(p[0], ord.directions[0]);
        const double y = detail::oriented(p[1], ord.directions[1]);
        if (x < rx || y < ry) throw invalid_argument("hypervolume_2d: point does not weakly dominate the reference");
        pts.emplace_back(x, y);
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second > b.second;
    });
    double area = 0.0;
    double covered_y = ry;
    for (const auto& [x, y] : pts) {
        if (y > covered_y) {
            area += (x - rx) * (y - covered_y);
            covered_y = y;
        }
    }
    return area;
}

/// (1/|X|) * sqrt(sum_i d_i^2), d_i the shortfall distance from x_i to its
/// nearest reference point.
inline double gd_plus(const ObjectiveMatrix& X, const ObjectiveMatrix& Z,
                      const DominanceOrdering& ord = DominanceOrdering::maximize_all(2)) {
    require(!Z.empty(), "gd_plus: empty reference set");
    require(!X.empty(), "gd_plus: empty solution set");
    detail::require_dims(X, ord.size(), "gd_plus");
    detail::require_dims(Z, ord.size(), "gd_plus");
    double sum_sq = 0.0;
    for (const auto& x : X) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& z : Z) best = std::min(best, detail::shortfall_distance(x, z, ord));
        sum_sq += best * best;
    }
    return std::sqrt(sum_sq) / static_cast<double>(X.size());
}

/// (1/|Z|) * sqrt(sum_i d_i^2), d_i the shortfall distance from the nearest
/// solution to z_i.
inline double igd_plus(const ObjectiveMatrix& X, const ObjectiveMatrix& Z,
                       const DominanceOrdering& ord = DominanceOrdering::maximize_all(2)) {
    require(!X.empty(), "igd_plus: empty solution set");
    require(!Z.empty(), "igd_plus: empty reference set");
    detail::require_dims(X, ord.size(), "igd_plus");
    detail::require_dims(Z, ord.size(), "igd_plus");
    double sum_sq = 0.0;
    for (const auto& z : Z) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : X) best = std::min(best, detail::shortfall_distance(x, z, ord));
        sum_sq += best * best;
    }
    return std::sqrt(sum_sq) / static_cast<double>(Z.size());
}

/// First generation whose hypervolume reaches success_fraction * target_hv.
inline std::optional<std::size_t> aes(std::span<const double> hv_series, double target_hv, double success_fraction) {
    require(!hv_series.empty(), "aes: empty series");
    require(success_fraction > 0.0 && success_fraction <= 1.0, "aes: success fraction must lie in (0, 1]");
    const double threshold = success_fraction * target_hv;
    for (std::size_t g = 0; g < hv_series.size(); ++g)
        if (hv_series[g] >= threshold) return g;
    return std::nullopt;
}

/// Orientation-wise worst corner of a point set.
inline std::vector<double> worst_corner(const ObjectiveMatrix& pts, const DominanceOrdering& ord) {
    require(!pts.empty(), "worst_corner: empty point set");
    std::vector<double> corner = pts.front();
    for (const auto& p : pts)
        for (std::size_t k = 0; k < corner.size(); ++k)
            corner[k] = ord.directions[k] == Direction::Maximize ? std::min(corner[k], p[k]) : std::max(corner[k], p[k]);
    return corner;
}

}  // namespace saopt
