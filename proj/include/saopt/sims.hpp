#pragma once

// Evaluation targets: two stochastic plant simulators (parallel trains with a
// shared spares pool; a single train with a recycle loop) scored by revenue,
// and a deterministic two-objective purity/recovery proxy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "saopt/rng.hpp"
#include "saopt/types.hpp"

namespace saopt {

struct CostTable {
    double final_product_rev = 6042.0;                         // per m3
    std::array<double, 4> flare = {2848.0, 3907.0, 2848.0, 3907.0};  // per m3, flares 1..4
    double tank_fixed = 9.94e7;
    double tank_per_m3 = 1.52e6;
    double pump_fixed = 4.44e6;
    double pump_per_m3 = 2.96e5;
    double maintenance_per_hr = 474036.0;
};

/// Plant parameters not fixed by the decision variables. Defaults are the
/// documented baseline parameterization; see config/plant_defaults.cfg.
struct CpsConfig {
    std::size_t horizon_hours = 8760;
    double feed_rate = 50.0;                 // m3/h per feed stream, two streams per train
    double process_capacity = 130.0;         // m3/h per process unit
    double pump_failure_prob = 0.001;        // per pump per hour
    double process_failure_prob = 0.0005;    // per process unit per hour
    std::size_t repair_hours_with_spare = 4;
    std::size_t repair_hours_without_spare = 24;
    std::size_t process_repair_hours = 12;
    std::size_t spare_lead_time_hours = 72;
    // Recycle loop (CPS-2).
    double alpha_max = 0.5;                  // mean recycle fraction with no maintenance
    double alpha_min = 0.05;                 // mean recycle fraction at max maintenance
    double alpha_relative_std = 0.1;         // std = relative_std * mean
    std::size_t recycle_interval_hours = 24; // one alpha draw per interval
    double maintenance_hours_max = 1314.0;
    bool maintenance_pauses_production = false;
    CostTable costs;

    void validate() const {
        require(horizon_hours > 0, "plant config: horizon must be positive");
        require(feed_rate > 0.0 && process_capacity > 0.0, "plant config: rates and capacities must be positive");
        require(pump_failure_prob >= 0.0 && pump_failure_prob <= 1.0, "plant config: pump failure probability");
        require(process_failure_prob >= 0.0 && process_failure_prob <= 1.0,
                "plant config: process failure probability");
        require(recycle_interval_hours > 0, "plant config: recycle interval must be positive");
        require(alpha_min >= 0.0 && alpha_max <= 1.0 && alpha_min <= alpha_max, "plant config: alpha range");
        require(alpha_relative_std >= 0.0, "plant config: alpha relative std");
        require(maintenance_hours_max > 0.0, "plant config: maintenance_hours_max must be positive");
    }
};

struct SimOutcome {
    double final_product_m3 = 0.0;
    std::vector<double> flare_m3;          // flares 1..n in plant order
    std::vector<double> tank_capacities;   // m3, one per tank
    std::vector<double> pump_capacities;   // m3/h, one per pump ever procured
    double maintenance_hours = 0.0;
    double revenue = 0.0;

    // Diagnostics.
    double total_feed_m3 = 0.0;
    double tank_holdup_m3 = 0.0;
    double recycle_holdup_m3 = 0.0;
    double mean_alpha = 0.0;
    std::size_t pump_failures = 0;
    std::size_t process_failures = 0;
    std::size_t spares_purchased = 0;

    [[nodiscard]] std::size_t n_tanks() const noexcept { return tank_capacities.size(); }
    [[nodiscard]] std::size_t n_pumps() const noexcept { return pump_capacities.size(); }
    [[nodiscard]] double total_flared_m3() const { return std::accumulate(flare_m3.begin(), flare_m3.end(), 0.0); }
};

/// Product revenue minus flaring, equipment and maintenance costs.
inline double revenue(const SimOutcome& o, const CostTable& c) {
    double r = c.final_product_rev * o.final_product_m3;
    for (std::size_t i = 0; i < o.flare_m3.size() && i < c.flare.size(); ++i) r -= c.flare[i] * o.flare_m3[i];
    for (double cap : o.tank_capacities) r -= c.tank_fixed + c.tank_per_m3 * cap;
    for (double cap : o.pump_capacities) r -= c.pump_fixed + c.pump_per_m3 * cap;
    r -= c.maintenance_per_hr * o.maintenance_hours;
    return r;
}

// ---------------------------------------------------------------------------
// Decision variables.

inline GeneSpecs cps1_specs() {
    return {{"tank1_m3", 500, 1000}, {"tank2_m3", 500, 1000}, {"tank3_m3", 500, 1000},
            {"tank4_m3", 500, 1000}, {"pump1_m3h", 60, 120},  {"pump2_m3h", 60, 120},
            {"min_spares", 0, 20},   {"spares_per_purchase", 1, 20}};
}

inline GeneSpecs cps2_specs() {
    return {{"tank1_m3", 500, 1000}, {"tank2_m3", 500, 1000},         {"pump1_m3h", 60, 120},
            {"min_spares", 0, 20},   {"spares_per_purchase", 1, 20}, {"maintenance_hours", 0, 1314}};
}

inline GeneSpecs psa_specs() {
    return {{"adsorption_pressure_bar", 1, 10}, {"adsorption_time_s", 10, 1000},
            {"light_reflux_ratio", 0.01, 0.99}, {"feed_velocity_ms", 0.1, 2},
            {"heavy_reflux_ratio", 0, 1},       {"purge_pressure_bar", 0.1, 0.5}};
}

inline void require_within(std::span<const double> genome, std::span<const GeneSpec> specs, const char* who) {
    if (genome.size() != specs.size())
        throw invalid_argument(std::string(who) + ": expected " + std::to_string(specs.size()) + " genes");
    for (std::size_t k = 0; k < specs.size(); ++k)
        if (!specs[k].contains(genome[k]))
            throw invalid_argument(std::string(who) + ": gene '" + specs[k].name + "' out of bounds");
}

namespace detail {

/// A unit that is either running or down for a number of hours.
struct Unit {
    std::size_t down_hours = 0;
    [[nodiscard]] bool up() const noexcept { return down_hours == 0; }
};

/// Shared pool of spare pumps with reorder-point replenishment.
struct SparesPool {
    long level = 0;
    long reorder_point = 0;
    long order_quantity = 1;
    std::vector<std::pair<std::size_t, long>> pending;  // (arrival hour, quantity)
    std::size_t purchased = 0;

    void receive(std::size_t hour) {
        for (auto it = pending.begin(); it != pending.end();) {
            if (it->first <= hour) {
                level += it->second;
                it = pending.erase(it);
            } else {
                ++it;
            }
        }
    }
    [[nodiscard]] long on_order() const {
        long n = 0;
        for (const auto& p : pending) n += p.second;
        return n;
    }
    void reorder(std::size_t hour, std::size_t lead_time) {
        if (level + on_order() < reorder_point) {
            pending.emplace_back(hour + lead_time, order_quantity);
            purchased += static_cast<std::size_t>(order_quantity);
        }
    }
    bool take() {
        if (level <= 0) return false;
        --level;
        return true;
    }
};

/// Tank 1 -> process A -> tank 2 -> pump -> process B.
struct Train {
    double tank1_capacity = 0.0;
    double tank2_capacity = 0.0;
    double pump_capacity = 0.0;
    double tank1 = 0.0;
    double tank2 = 0.0;
    double flare1 = 0.0;
    double flare2 = 0.0;
    Unit pump;
    Unit process_a;
    Unit process_b;

    // Moves one hour of material; returns the volume leaving process B.
    double step(double inflow, double process_capacity, bool paused) {
        double avail = tank1 + inflow;
        const double out_a = (process_a.up() && !paused) ? std::min(avail, process_capacity) : 0.0;
        double rest = avail - out_a;
        flare1 += std::max(0.0, rest - tank1_capacity);
        tank1 = std::min(rest, tank1_capacity);

        avail = tank2 + out_a;
        const bool running = pump.up() && process_b.up() && !paused;
        const double out_b = running ? std::min({avail, pump_capacity, process_capacity}) : 0.0;
        rest = avail - out_b;
        flare2 += std::max(0.0, rest - tank2_capacity);
        tank2 = std::min(rest, tank2_capacity);
        return out_b;
    }

    static void tick(Unit& u) {
        if (u.down_hours > 0) --u.down_hours;
    }
    void tick_all() {
        tick(pump);
        tick(process_a);
        tick(process_b);
    }
};

inline long count_gene(double x) { return std::lround(x); }

/// Failure draws for one train for one hour. Every unit consumes one draw
/// regardless of state so the stream layout is independent of the design.
inline void draw_failures(Train& t, const CpsConfig& cfg, SparesPool& pool, Rng& rng, SimOutcome& out) {
    const double u_pump = rng.uniform();
    const double u_a = rng.uniform();
    const double u_b = rng.uniform();
    if (t.pump.up() && u_pump < cfg.pump_failure_prob) {
        ++out.pump_failures;
        t.pump.down_hours = pool.take() ? cfg.repair_hours_with_spare : cfg.repair_hours_without_spare;
    }
    if (t.process_a.up() && u_a < cfg.process_failure_prob) {
        ++out.process_failures;
        t.process_a.down_hours = cfg.process_repair_hours;
    }
    if (t.process_b.up() && u_b < cfg.process_failure_prob) {
        ++out.process_failures;
        t.process_b.down_hours = cfg.process_repair_hours;
    }
}

inline bool is_maintenance_hour(std::size_t hour, double maintenance_hours, std::size_t horizon) {
    // Spreads the maintenance hours evenly over the horizon.
    const auto h = static_cast<double>(horizon);
    return std::floor((hour + 1) * maintenance_hours / h) > std::floor(hour * maintenance_hours / h);
}

}  // namespace detail

/// Mean recycle fraction as a function of maintenance hours (linear, decreasing).
inline double recycle_mean(double maintenance_hours, const CpsConfig& cfg) {
    const double frac = std::clamp(maintenance_hours / cfg.maintenance_hours_max, 0.0, 1.0);
    return cfg.alpha_max - (cfg.alpha_max - cfg.alpha_min) * frac;
}

/// One recycle-fraction draw: Normal(mean, relative_std * mean), resampled up
/// to 100 times when outside [0, 1], then clamped.
inline double sample_recycle_fraction(double mean, const CpsConfig& cfg, Rng& rng) {
    const double sd = cfg.alpha_relative_std * mean;
    double a = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
        a = rng.normal(mean, sd);
        if (a >= 0.0 && a <= 1.0) return a;
    }
    return std::clamp(a, 0.0, 1.0);
}

/// Parallel trains sharing one spares pool.
/// Genes: tank1..tank4, pump1, pump2, min spares, spares per purchase.
inline SimOutcome simulate_cps1(std::span<const double> genome, const CpsConfig& cfg, Rng rng) {
    cfg.validate();
    static const GeneSpecs specs = cps1_specs();
    require_within(genome, specs, "simulate_cps1");
    Rng failures = rng.derive(1);

    std::array<detail::Train, 2> trains;
    trains[0].tank1_capacity = genome[0];
    trains[0].tank2_capacity = genome[1];
    trains[1].tank1_capacity = genome[2];
    trains[1].tank2_capacity = genome[3];
    trains[0].pump_capacity = genome[4];
    trains[1].pump_capacity = genome[5];

    detail::SparesPool pool;
    pool.reorder_point = detail::count_gene(genome[6]);
    pool.order_quantity = detail::count_gene(genome[7]);
    pool.level = pool.reorder_point;

    SimOutcome out;
    const double inflow = 2.0 * cfg.feed_rate;
    for (std::size_t hour = 0; hour < cfg.horizon_hours; ++hour) {
        pool.receive(hour);
        for (auto& t : trains) detail::draw_failures(t, cfg, pool, failures, out);
        pool.reorder(hour, cfg.spare_lead_time_hours);
        for (auto& t : trains) {
            out.total_feed_m3 += inflow;
            out.final_product_m3 += t.step(inflow, cfg.process_capacity, false);
            t.tick_all();
        }
    }

    out.flare_m3 = {trains[0].flare1, trains[0].flare2, trains[1].flare1, trains[1].flare2};
    out.tank_capacities = {genome[0], genome[1], genome[2], genome[3]};
    out.pump_capacities = {genome[4], genome[5]};
    // Spares fit either pump, so they are rated at the larger one.
    const double spare_rating = std::max(genome[4], genome[5]);
    out.spares_purchased = static_cast<std::size_t>(pool.reorder_point) + pool.purchased;
    out.pump_capacities.insert(out.pump_capacities.end(), out.spares_purchased, spare_rating);
    out.tank_holdup_m3 = trains[0].tank1 + trains[0].tank2 + trains[1].tank1 + trains[1].tank2;
    out.revenue = revenue(out, cfg.costs);
    return out;
}

inline SimOutcome simulate_cps1(std::span<const double> genome, const CpsConfig& cfg, std::uint64_t seed) {
    return simulate_cps1(genome, cfg, Rng(seed));
}

/// Single train whose product is split: a fraction alpha returns upstream of
/// tank 1 one hour later, the rest is final product.
/// Genes: tank1, tank2, pump1, min spares, spares per purchase, maintenance hours.
inline SimOutcome simulate_cps2(std::span<const double> genome, const CpsConfig& cfg, Rng rng) {
    cfg.validate();
    static const GeneSpecs specs = cps2_specs();
    require_within(genome, specs, "simulate_cps2");
    Rng failures = rng.derive(1);
    Rng alphas = rng.derive(2);

    detail::Train train;
    train.tank1_capacity = genome[0];
    train.tank2_capacity = genome[1];
    train.pump_capacity = genome[2];

    detail::SparesPool pool;
    pool.reorder_point = detail::count_gene(genome[3]);
    pool.order_quantity = detail::count_gene(genome[4]);
    pool.level = pool.reorder_point;

    const double maintenance = genome[5];
    const double mu = recycle_mean(maintenance, cfg);

    SimOutcome out;
    const double feed = 2.0 * cfg.feed_rate;
    double recycle = 0.0;
    double alpha = 0.0;
    double alpha_sum = 0.0;
    std::size_t alpha_draws = 0;
    for (std::size_t hour = 0; hour < cfg.horizon_hours; ++hour) {
        if (hour % cfg.recycle_interval_hours == 0) {
            alpha = sample_recycle_fraction(mu, cfg, alphas);
            alpha_sum += alpha;
            ++alpha_draws;
        }
        pool.receive(hour);
        detail::draw_failures(train, cfg, pool, failures, out);
        pool.reorder(hour, cfg.spare_lead_time_hours);

        const bool paused = cfg.maintenance_pauses_production &&
                            detail::is_maintenance_hour(hour, maintenance, cfg.horizon_hours);
        out.total_feed_m3 += feed;
        const double produced = train.step(feed + recycle, cfg.process_capacity, paused);
        recycle = alpha * produced;
        out.final_product_m3 += produced - recycle;
        train.tick_all();
    }

    out.flare_m3 = {train.flare1, train.flare2};
    out.tank_capacities = {genome[0], genome[1]};
    out.spares_purchased = static_cast<std::size_t>(pool.reorder_point) + pool.purchased;
    out.pump_capacities.assign(1 + out.spares_purchased, genome[2]);
    out.maintenance_hours = maintenance;
    out.tank_holdup_m3 = train.tank1 + train.tank2;
    out.recycle_holdup_m3 = recycle;
    out.mean_alpha = alpha_draws ? alpha_sum / static_cast<double>(alpha_draws) : 0.0;
    out.revenue = revenue(out, cfg.costs);
    return out;
}

inline SimOutcome simulate_cps2(std::span<const double> genome, const CpsConfig& cfg, std::uint64_t seed) {
    return simulate_cps2(genome, cfg, Rng(seed));
}

// ---------------------------------------------------------------------------
// Purity / recovery.

struct MoleAccounting {
    double moles_co2_product = 0.0;
    double total_moles_product = 0.0;
    double moles_co2_fed = 0.0;
};

/// CO2 moles in product over total product moles, in percent.
inline double purity(const MoleAccounting& m) {
    if (!(m.total_moles_product > 0.0)) throw undefined_quantity("purity: total product moles is zero");
    return 100.0 * m.moles_co2_product / m.total_moles_product;
}

/// CO2 moles in product over CO2 moles fed, in percent.
inline double recovery(const MoleAccounting& m) {
    if (!(m.moles_co2_fed > 0.0)) throw undefined_quantity("recovery: fed CO2 moles is zero");
    return 100.0 * m.moles_co2_product / m.moles_co2_fed;
}

/// Bi-objective stand-in for the adsorption column: a ZDT1-shaped trade-off
/// over the six cycle variables, reported as mole balances. The optimal set is
/// u2..u6 = 0 on the normalized variables.
inline MoleAccounting evaluate_psa_proxy(std::span<const double> genome) {
    static const GeneSpecs specs = psa_specs();
    require_within(genome, specs, "evaluate_psa_proxy");
    std::array<double, 6> u{};
    for (std::size_t k = 0; k < 6; ++k) u[k] = (genome[k] - specs[k].lower) / specs[k].range();
    const double f1 = u[0];
    const double g = 1.0 + 9.0 * (u[1] + u[2] + u[3] + u[4] + u[5]) / 5.0;
    const double f2 = g * (1.0 - std::sqrt(f1 / g));
    const double purity_frac = 1.0 - f1;
    const double recovery_frac = 1.0 - f2 / 10.0;
    constexpr double kEps = 1e-12;
    MoleAccounting m;
    m.moles_co2_fed = 100.0;
    m.moles_co2_product = 100.0 * recovery_frac;
    // At the single corner where recovery is exactly zero the product is empty
    // and purity is undefined.
    m.total_moles_product = m.moles_co2_product / std::max(purity_frac, kEps);
    return m;
}

/// Recovery fraction on the proxy's optimal front for a given purity fraction.
inline double psa_proxy_front_recovery(double purity_frac) {
    return 1.0 - (1.0 - std::sqrt(1.0 - purity_frac)) / 10.0;
}

/// n evenly spaced points (purity_frac, recovery_frac) on the proxy front.
inline std::vector<std::vector<double>> psa_proxy_front(std::size_t n) {
    require(n >= 2, "psa_proxy_front: need at least two points");
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(n - 1);
        pts.push_back({p, psa_proxy_front_recovery(p)});
    }
    return pts;
}

}  // namespace saopt
