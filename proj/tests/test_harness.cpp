#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "saopt/harness.hpp"

using namespace saopt;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_ga(Problem p, Mode mode) {
    auto c = ExperimentConfig::defaults_for(p);
    c.mode = mode;
    c.plant.horizon_hours = 400;
    c.warm_size = 120;
    c.population_size = 20;
    c.generations = 6;
    c.forest.n_trees = 15;
    c.seed = 17;
    return c;
}

ExperimentConfig psa(Mode mode, std::size_t generations = 60) {
    auto c = ExperimentConfig::defaults_for(Problem::PsaProxy);
    c.mode = mode;
    c.generations = generations;
    c.forest.n_trees = 20;
    c.seed = 5;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("saopt_test_" + name);
    fs::remove_all(p);
    return p;
}

RunResult fake_run(Mode mode, std::size_t calls) {
    RunResult r;
    r.mode = mode;
    r.warm_sim_calls = 800;
    GenerationRecord g;
    g.sim_calls = calls;
    r.records.push_back(g);
    return r;
}

}  // namespace

TEST(Harness, DirectProxyRunAccounting) {
    const auto cfg = psa(Mode::Direct);
    const auto r = run_sa_nsga(cfg);
    ASSERT_EQ(r.records.size(), 60u);
    EXPECT_EQ(r.warm_sim_calls, 800u);
    for (std::size_t g = 0; g < r.records.size(); ++g) {
        EXPECT_EQ(r.records[g].surrogate_calls, 0u);
        EXPECT_EQ(r.records[g].sim_calls, 800 + (g + 1) * (cfg.elite_size() + cfg.offspring_count()));
        EXPECT_FALSE(r.records[g].diverged);
        EXPECT_TRUE(std::isfinite(r.records[g].hv));
        EXPECT_TRUE(std::isfinite(r.records[g].igd_plus));
    }
    EXPECT_EQ(r.verification_sim_calls, 0u);
    EXPECT_TRUE(r.models.empty());
    EXPECT_EQ(r.hv_reference.size(), 2u);
    for (const auto& ind : r.final_front.members) EXPECT_EQ(ind.source(), EvalSource::Simulation);
}

TEST(Harness, WarmStartSharedAcrossModes) {
    const auto d = run_sa_nsga(psa(Mode::Direct, 2));
    const auto s = run_sa_nsga(psa(Mode::Surrogate, 2));
    ASSERT_EQ(d.warm_training.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(d.warm_training[k].inputs, s.warm_training[k].inputs);
        EXPECT_EQ(d.warm_training[k].targets, s.warm_training[k].targets);
    }
    EXPECT_EQ(d.hv_reference, s.hv_reference);
}

TEST(Harness, AssistedProxyRunInvariants) {
    const auto cfg = psa(Mode::Surrogate, 30);
    const auto r = run_sa_nsga(cfg);
    const auto d = run_sa_nsga(psa(Mode::Direct, 30));
    std::size_t retrained = 0;
    for (std::size_t g = 0; g < r.records.size(); ++g) {
        const auto& rec = r.records[g];
        if (g > 0) {
            EXPECT_GE(rec.sim_calls, r.records[g - 1].sim_calls);
            EXPECT_GE(rec.surrogate_calls, r.records[g - 1].surrogate_calls);
        }
        EXPECT_EQ(rec.diverged, rec.retrained);
        EXPECT_LT(rec.sim_calls, d.records[g].sim_calls);
        retrained += rec.retrained;
        ASSERT_EQ(rec.elite.size(), cfg.elite_size());
        for (const auto& e : rec.elite) EXPECT_EQ(e.source(), EvalSource::Simulation);
    }
    EXPECT_EQ(retrained, r.retrain_count);
    EXPECT_GT(r.records.back().surrogate_calls, 0u);
    EXPECT_LT(r.total_sim_calls(), d.total_sim_calls());
    for (const auto& ind : r.final_front.members) EXPECT_EQ(ind.source(), EvalSource::Simulation);
    EXPECT_EQ(r.models.size(), 2u);
}

TEST(Harness, GaRunsOnBothPlants) {
    for (Problem p : {Problem::Cps1, Problem::Cps2}) {
        const auto cfg = small_ga(p, Mode::Surrogate);
        const auto r = run_sa_ga(cfg);
        ASSERT_EQ(r.records.size(), cfg.generations);
        for (std::size_t g = 0; g < r.records.size(); ++g) {
            const auto& rec = r.records[g];
            EXPECT_EQ(rec.diverged, rec.retrained);
            for (const auto& e : rec.elite) EXPECT_EQ(e.source(), EvalSource::Simulation);
            EXPECT_LE(rec.best, rec.best_so_far);
            EXPECT_GE(rec.best, rec.elite_mean);
            if (g > 0) EXPECT_GE(rec.best_so_far, r.records[g - 1].best_so_far);
        }
        EXPECT_EQ(r.final_front.size(), cfg.elite_size());

        const auto d = run_sa_ga(small_ga(p, Mode::Direct));
        for (std::size_t g = 0; g < d.records.size(); ++g) {
            EXPECT_EQ(d.records[g].sim_calls, cfg.warm_size + (g + 1) * cfg.population_size);
            EXPECT_EQ(d.records[g].surrogate_calls, 0u);
        }
    }
}

TEST(Harness, ThreadCountDoesNotChangeResults) {
    auto one = small_ga(Problem::Cps2, Mode::Surrogate);
    auto two = one;
    two.threads = 2;
    const auto a = run_sa_ga(one), b = run_sa_ga(two);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t g = 0; g < a.records.size(); ++g) {
        EXPECT_EQ(a.records[g].best, b.records[g].best);
        EXPECT_EQ(a.records[g].population_mean, b.records[g].population_mean);
        EXPECT_EQ(a.records[g].sim_calls, b.records[g].sim_calls);
    }
    auto p1 = psa(Mode::Surrogate, 5), p2 = p1;
    p2.threads = 3;
    const auto c = run_sa_nsga(p1), d = run_sa_nsga(p2);
    for (std::size_t g = 0; g < c.records.size(); ++g) EXPECT_EQ(c.records[g].front, d.records[g].front);
}

TEST(Harness, RepetitionsDiffer) {
    auto cfg = psa(Mode::Direct, 3);
    cfg.repetitions = 2;
    const auto runs = run_experiment(cfg);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_NE(runs[0].warm_training[0].targets, runs[1].warm_training[0].targets);
    EXPECT_EQ(runs[1].repetition, 1u);
}

TEST(Harness, WrongAlgorithmThrows) {
    auto cfg = psa(Mode::Direct, 2);
    cfg.algorithm = Algorithm::Ga;
    EXPECT_THROW(run_sa_ga(cfg), invalid_argument);
    EXPECT_THROW(run_experiment(cfg), invalid_argument);
    EXPECT_THROW(run_sa_nsga(small_ga(Problem::Cps1, Mode::Direct)), invalid_argument);
}

TEST(Speedup, RatiosFromCallCounts) {
    const auto rep = compute_speedup({fake_run(Mode::Direct, 10000)}, {fake_run(Mode::Surrogate, 4000)});
    EXPECT_DOUBLE_EQ(rep.sim_call_ratio, 2.5);
    EXPECT_DOUBLE_EQ(rep.sim_call_ratio_excluding_warm, 9200.0 / 3200.0);
    EXPECT_EQ(rep.warm_sim_calls, 800u);
}

TEST(Speedup, MismatchedRunsThrow) {
    auto s = fake_run(Mode::Surrogate, 4000);
    s.problem = Problem::Cps2;
    EXPECT_THROW(compute_speedup({fake_run(Mode::Direct, 10000)}, {s}), invalid_argument);
    EXPECT_THROW(compute_speedup({fake_run(Mode::Surrogate, 10000)}, {fake_run(Mode::Surrogate, 1)}),
                 invalid_argument);
    auto longer = fake_run(Mode::Surrogate, 4000);
    longer.records.push_back(longer.records.back());
    EXPECT_THROW(compute_speedup({fake_run(Mode::Direct, 10000)}, {longer}), invalid_argument);
}

TEST(Speedup, HoldoutScoresAssistedModels) {
    const auto d = run_sa_nsga(psa(Mode::Direct, 4));
    const auto s = run_sa_nsga(psa(Mode::Surrogate, 4));
    const auto rep = compute_speedup({d}, {s}, make_holdout(psa(Mode::Direct), 100));
    ASSERT_EQ(rep.holdout_r2.size(), 2u);
    for (double r2 : rep.holdout_r2) EXPECT_GT(r2, 0.5);
}

TEST(Export, ManifestReproducesOutputs) {
    auto cfg = psa(Mode::Surrogate, 8);
    cfg.repetitions = 2;
    const auto dir_a = scratch("export_a"), dir_b = scratch("export_b");
    const auto a = export_results(run_experiment(cfg), cfg, dir_a);
    const auto again = load_config(a.manifest.string());
    const auto b = export_results(run_experiment(again), again, dir_b);
    EXPECT_EQ(slurp(a.generations), slurp(b.generations));
    EXPECT_EQ(slurp(a.final_front), slurp(b.final_front));
    EXPECT_EQ(slurp(a.fronts), slurp(b.fronts));
    EXPECT_TRUE(fs::exists(a.timing));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST(Export, CsvShapeAndNumbers) {
    const auto cfg = psa(Mode::Surrogate, 5);
    const auto runs = run_experiment(cfg);
    const auto dir = scratch("export_csv");
    const auto paths = export_results(runs, cfg, dir);

    const auto gen = csv_rows(paths.generations);
    ASSERT_EQ(gen.size(), 1 + cfg.generations);
    EXPECT_EQ(gen[0][0], "experiment_id");
    EXPECT_EQ(gen[0][2], "hv");
    for (std::size_t i = 1; i < gen.size(); ++i) {
        ASSERT_EQ(gen[i].size(), gen[0].size());
        for (const auto& cell : gen[i]) {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            EXPECT_EQ(used, cell.size()) << cell;
            EXPECT_TRUE(std::isfinite(v));
        }
    }
    const auto front = csv_rows(paths.final_front);
    EXPECT_EQ(front.size(), 1 + runs[0].final_front.size());
    EXPECT_EQ(front[0].size(), 1 + 2 + 6u);
    std::size_t front_points = 0;
    for (const auto& rec : runs[0].records) front_points += rec.front.size();
    EXPECT_EQ(csv_rows(paths.fronts).size(), 1 + front_points);
    fs::remove_all(dir);
}

TEST(Export, GaHeadersAndNoFrontsFile) {
    const auto cfg = small_ga(Problem::Cps1, Mode::Direct);
    const auto dir = scratch("export_ga");
    const auto paths = export_results(run_experiment(cfg), cfg, dir);
    EXPECT_TRUE(paths.fronts.empty());
    const auto gen = csv_rows(paths.generations);
    EXPECT_EQ(gen[0][2], "best");
    EXPECT_EQ(gen[0][5], "best_so_far");
    EXPECT_EQ(csv_rows(paths.final_front).size(), 1 + cfg.elite_size());
    fs::remove_all(dir);
}

TEST(Export, UnwritableDirectoryIsIoError) {
    const auto base = scratch("export_blocked");
    fs::create_directories(base);
    std::ofstream(base / "file") << "x";
    const auto cfg = psa(Mode::Direct, 1);
    const auto runs = run_experiment(cfg);
    EXPECT_THROW(export_results(runs, cfg, base / "file" / "sub"), io_error);
    fs::remove_all(base);
}
