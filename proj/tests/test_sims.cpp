#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "saopt/operators.hpp"
#include "saopt/sims.hpp"

using namespace saopt;

namespace {

double mass_residual(const SimOutcome& o) {
    const double out = o.final_product_m3 + o.total_flared_m3() + o.tank_holdup_m3 + o.recycle_holdup_m3;
    return std::abs(o.total_feed_m3 - out) / o.total_feed_m3;
}

// Independent restatement of the revenue formula.
double revenue_oracle(const SimOutcome& o) {
    const double flare_price[4] = {2848, 3907, 2848, 3907};
    double r = 6042.0 * o.final_product_m3;
    for (std::size_t i = 0; i < o.flare_m3.size(); ++i) r -= flare_price[i] * o.flare_m3[i];
    for (double t : o.tank_capacities) r -= 9.94e7 + 1.52e6 * t;
    for (double p : o.pump_capacities) r -= 4.44e6 + 2.96e5 * p;
    return r - 474036.0 * o.maintenance_hours;
}

CpsConfig failure_free() {
    CpsConfig c;
    c.pump_failure_prob = 0.0;
    c.process_failure_prob = 0.0;
    return c;
}

}  // namespace

TEST(Revenue, Examples) {
    const CostTable c;
    SimOutcome o;
    EXPECT_EQ(revenue(o, c), 0.0);
    o.final_product_m3 = 1.0;
    EXPECT_EQ(revenue(o, c), 6042.0);
    SimOutcome tank;
    tank.tank_capacities = {500.0};
    EXPECT_DOUBLE_EQ(revenue(tank, c), -8.594e8);
}

TEST(Cps1, BoundsChecked) {
    const CpsConfig cfg;
    EXPECT_THROW(simulate_cps1(Genome{499, 600, 600, 600, 100, 100, 5, 5}, cfg, 1), invalid_argument);
    EXPECT_THROW(simulate_cps1(Genome{600, 600, 600, 600, 100, 100, 5}, cfg, 1), invalid_argument);
    EXPECT_THROW(simulate_cps2(Genome{600, 600, 100, 5, 5, 1315}, cfg, 1), invalid_argument);
}

TEST(Cps1, NoFailuresAmpleCapacityLosesNothing) {
    const auto cfg = failure_free();
    const auto o = simulate_cps1(Genome{1000, 1000, 1000, 1000, 120, 120, 0, 1}, cfg, 5);
    EXPECT_EQ(o.total_flared_m3(), 0.0);
    EXPECT_NEAR(o.final_product_m3, 2 * 2 * cfg.feed_rate * cfg.horizon_hours, 1e-6);
    EXPECT_EQ(o.pump_failures, 0u);
}

TEST(Cps, SameSeedSameOutcome) {
    const CpsConfig cfg;
    const Genome g1{700, 800, 650, 900, 90, 110, 3, 4};
    const auto a = simulate_cps1(g1, cfg, 42), b = simulate_cps1(g1, cfg, 42);
    EXPECT_EQ(a.revenue, b.revenue);
    EXPECT_EQ(a.flare_m3, b.flare_m3);
    EXPECT_EQ(a.pump_capacities, b.pump_capacities);
    const Genome g2{700, 800, 90, 3, 4, 200};
    const auto c = simulate_cps2(g2, cfg, 42), d = simulate_cps2(g2, cfg, 42);
    EXPECT_EQ(c.revenue, d.revenue);
    EXPECT_EQ(c.final_product_m3, d.final_product_m3);
}

TEST(Cps, MassBalanceAndRevenueOnRandomDesigns) {
    CpsConfig cfg;
    cfg.pump_failure_prob = 0.01;  // exercise flaring
    Rng rng(8);
    const auto p1 = init_random_population(cps1_specs(), 100, rng);
    const auto p2 = init_random_population(cps2_specs(), 100, rng);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto a = simulate_cps1(p1[i].genome, cfg, i);
        EXPECT_LE(mass_residual(a), 1e-6);
        EXPECT_DOUBLE_EQ(a.revenue, revenue_oracle(a));
        const auto b = simulate_cps2(p2[i].genome, cfg, i);
        EXPECT_LE(mass_residual(b), 1e-6);
        EXPECT_DOUBLE_EQ(b.revenue, revenue_oracle(b));
        for (double f : b.flare_m3) EXPECT_GE(f, 0.0);
    }
}

TEST(Cps, LargerTanksNeverFlareMore) {
    CpsConfig cfg;
    cfg.pump_failure_prob = 0.01;
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        Genome g = init_random_population(cps1_specs(), 1, rng)[0].genome;
        const std::size_t k = rng.below(4);
        g[k] = 500;
        const double small = simulate_cps1(g, cfg, t).total_flared_m3();
        g[k] = 1000;
        EXPECT_LE(simulate_cps1(g, cfg, t).total_flared_m3(), small + 1e-6);

        Genome h = init_random_population(cps2_specs(), 1, rng)[0].genome;
        const std::size_t j = rng.below(2);
        h[j] = 500;
        const double small2 = simulate_cps2(h, cfg, t).total_flared_m3();
        h[j] = 1000;
        EXPECT_LE(simulate_cps2(h, cfg, t).total_flared_m3(), small2 + 1e-6);
    }
}

TEST(Cps2, RecycleMeanDecreasesWithMaintenance) {
    const CpsConfig cfg;
    EXPECT_LT(recycle_mean(1314, cfg), recycle_mean(0, cfg));
    EXPECT_DOUBLE_EQ(recycle_mean(0, cfg), 0.5);
    EXPECT_DOUBLE_EQ(recycle_mean(1314, cfg), 0.05);
    double prev = 1.0;
    for (double h = 0; h <= 1314; h += 100) {
        const auto o = simulate_cps2(Genome{700, 700, 100, 2, 2, h}, cfg, 3);
        EXPECT_LE(o.mean_alpha, prev);
        prev = o.mean_alpha;
    }
}

TEST(Cps2, RecycleSpreadIsTenPercentOfMean) {
    const CpsConfig cfg;
    Rng rng(10);
    const double mu = recycle_mean(0, cfg);
    double s = 0, ss = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double a = sample_recycle_fraction(mu, cfg, rng);
        s += a;
        ss += a * a;
    }
    const double mean = s / n;
    const double sd = std::sqrt((ss - n * mean * mean) / (n - 1));
    EXPECT_NEAR(sd / mean, 0.10, 0.01);
}

TEST(Cps2, MaintenanceRaisesProductWithoutFailures) {
    const auto cfg = failure_free();
    const auto lo = simulate_cps2(Genome{800, 800, 120, 0, 1, 0}, cfg, 4);
    const auto hi = simulate_cps2(Genome{800, 800, 120, 0, 1, 1314}, cfg, 4);
    EXPECT_GT(hi.final_product_m3, lo.final_product_m3);
    EXPECT_EQ(hi.maintenance_hours, 1314);
}

TEST(Psa, PurityRecoveryArithmetic) {
    EXPECT_DOUBLE_EQ(purity({50, 100, 100}), 50.0);
    EXPECT_DOUBLE_EQ(purity({70, 70, 100}), 100.0);
    EXPECT_NEAR(purity({90, 95, 100}), 9000.0 / 95.0, 1e-12);
    EXPECT_DOUBLE_EQ(recovery({100, 120, 100}), 100.0);
    EXPECT_DOUBLE_EQ(recovery({0, 10, 100}), 0.0);
    EXPECT_DOUBLE_EQ(recovery({90, 95, 100}), 90.0);
    EXPECT_THROW(purity({0, 0, 100}), undefined_quantity);
    EXPECT_THROW(recovery({0, 1, 0}), undefined_quantity);
}

TEST(Psa, ProxyAtOrigin) {
    const auto specs = psa_specs();
    Genome g;
    for (const auto& s : specs) g.push_back(s.lower);
    const auto m = evaluate_psa_proxy(g);
    EXPECT_NEAR(purity(m), 100.0, 1e-9);
    EXPECT_NEAR(recovery(m), 90.0, 1e-9);
    const auto again = evaluate_psa_proxy(g);
    EXPECT_EQ(m.moles_co2_product, again.moles_co2_product);
    EXPECT_EQ(m.total_moles_product, again.total_moles_product);
}

TEST(Psa, ZeroTailLiesOnFront) {
    const auto specs = psa_specs();
    for (double u1 = 0.0; u1 <= 1.0; u1 += 0.125) {
        Genome g;
        for (const auto& s : specs) g.push_back(s.lower);
        g[0] = specs[0].lower + u1 * specs[0].range();
        const auto m = evaluate_psa_proxy(g);
        if (u1 == 1.0) continue;
        const double p = purity(m) / 100.0;
        EXPECT_NEAR(recovery(m) / 100.0, psa_proxy_front_recovery(p), 1e-9);
    }
}

TEST(Psa, FormulasRoundTrip) {
    const auto specs = psa_specs();
    Rng rng(11);
    const auto pop = init_random_population(specs, 500, rng);
    for (const auto& ind : pop.members) {
        std::array<double, 6> u{};
        for (std::size_t k = 0; k < 6; ++k) u[k] = (ind.genome[k] - specs[k].lower) / specs[k].range();
        const double g = 1.0 + 9.0 * (u[1] + u[2] + u[3] + u[4] + u[5]) / 5.0;
        const double f2 = g * (1.0 - std::sqrt(u[0] / g));
        const auto m = evaluate_psa_proxy(ind.genome);
        EXPECT_NEAR(purity(m), 100.0 * (1.0 - u[0]), 1e-9);
        EXPECT_NEAR(recovery(m), 100.0 * (1.0 - f2 / 10.0), 1e-9);
        EXPECT_LE(m.moles_co2_product, m.total_moles_product * (1 + 1e-12));
        EXPECT_LE(m.moles_co2_product, m.moles_co2_fed);
    }
}

TEST(Psa, NoSampleDominatesFront) {
    const auto specs = psa_specs();
    const auto front = psa_proxy_front(200);
    Rng rng(12);
    const auto pop = init_random_population(specs, 5000, rng);
    for (const auto& ind : pop.members) {
        const auto m = evaluate_psa_proxy(ind.genome);
        const double p = purity(m) / 100.0, r = recovery(m) / 100.0;
        for (const auto& z : front) {
            const bool dominates = p >= z[0] && r >= z[1] && (p > z[0] + 1e-12 || r > z[1] + 1e-12);
            ASSERT_FALSE(dominates);
        }
    }
}

TEST(Psa, FrontEndpoints) {
    const auto f = psa_proxy_front(11);
    ASSERT_EQ(f.size(), 11u);
    EXPECT_EQ(f.front()[0], 0.0);
    EXPECT_DOUBLE_EQ(f.front()[1], 1.0);
    EXPECT_EQ(f.back()[0], 1.0);
    EXPECT_DOUBLE_EQ(f.back()[1], 0.9);
    EXPECT_THROW(psa_proxy_front(1), invalid_argument);
}
