#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "saopt/config.hpp"

using namespace saopt;

namespace {

std::string dump(const ExperimentConfig& c) {
    std::ostringstream os;
    write_config(c, os);
    return os.str();
}

ExperimentConfig from_text(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream in(text);
    return apply_key_values(std::move(base), parse_key_values(in));
}

}  // namespace

TEST(Config, ProblemDefaults) {
    const auto ga = ExperimentConfig::defaults_for(Problem::Cps1);
    EXPECT_EQ(ga.algorithm, Algorithm::Ga);
    EXPECT_EQ(ga.generations, 50u);
    EXPECT_EQ(ga.population_size, 75u);
    EXPECT_EQ(ga.warm_size, 800u);
    EXPECT_EQ(ga.elite_size(), 12u);
    EXPECT_EQ(ga.offspring_count(), 63u);
    const auto psa = ExperimentConfig::defaults_for(Problem::PsaProxy);
    EXPECT_EQ(psa.algorithm, Algorithm::Nsga2);
    EXPECT_EQ(psa.generations, 60u);
    EXPECT_EQ(psa.population_size, 60u);
    EXPECT_EQ(psa.elite_size(), 9u);
    EXPECT_EQ(psa.offspring_count(), 60u);
    EXPECT_NO_THROW(ga.validate());
    EXPECT_NO_THROW(psa.validate());
    EXPECT_EQ(psa.forest.n_trees, 100u);
}

TEST(Config, RoundTripIsExact) {
    auto c = ExperimentConfig::defaults_for(Problem::Cps2);
    c.seed = 123456789012345ULL;
    c.blx_alpha = 0.1 + 0.2;
    c.divergence_sigma = 1.0 / 3.0;
    c.plant.pump_failure_prob = 7e-4;
    c.plant.maintenance_pauses_production = true;
    c.plant.costs.flare[2] = 1234.5678901234567;
    c.forest.bootstrap = false;
    c.output_dir = "results/run a";
    const auto back = from_text(dump(c));
    EXPECT_EQ(dump(back), dump(c));
    EXPECT_EQ(back.blx_alpha, c.blx_alpha);
    EXPECT_EQ(back.plant.costs.flare[2], c.plant.costs.flare[2]);
    EXPECT_EQ(back.output_dir, "results/run a");
}

TEST(Config, LaterKeysOverrideProblemDefaults) {
    const auto c = from_text("# comment\ngenerations = 7\nproblem = psa_proxy\n\nseed = 9  # trailing\n");
    EXPECT_EQ(c.problem, Problem::PsaProxy);
    EXPECT_EQ(c.algorithm, Algorithm::Nsga2);
    EXPECT_EQ(c.generations, 7u);
    EXPECT_EQ(c.seed, 9u);
}

TEST(Config, Errors) {
    EXPECT_THROW(from_text("bogus = 1\n"), invalid_argument);
    EXPECT_THROW(from_text("format_version = 2\n"), invalid_argument);
    EXPECT_THROW(from_text("generations = -3\n"), invalid_argument);
    EXPECT_THROW(from_text("elite_fraction = abc\n"), invalid_argument);
    EXPECT_THROW(from_text("problem = cps9\n"), invalid_argument);
    EXPECT_THROW(from_text("forest.bootstrap = maybe\n"), invalid_argument);
    try {
        from_text("seed = 1\nno equals sign\n");
        FAIL();
    } catch (const invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
    EXPECT_THROW(load_config("/nonexistent/dir/x.cfg"), io_error);
}

TEST(Config, CodeVersionIsIgnoredOnRead) {
    std::ostringstream os;
    write_config(ExperimentConfig{}, os, true);
    EXPECT_NE(os.str().find("code_version"), std::string::npos);
    EXPECT_EQ(dump(from_text(os.str())), dump(ExperimentConfig{}));
}

TEST(Config, Validation) {
    auto c = ExperimentConfig::defaults_for(Problem::Cps1);
    c.algorithm = Algorithm::Nsga2;
    EXPECT_THROW(c.validate(), invalid_argument);
    c = ExperimentConfig::defaults_for(Problem::PsaProxy);
    c.algorithm = Algorithm::Ga;
    EXPECT_THROW(c.validate(), invalid_argument);
    c = ExperimentConfig::defaults_for(Problem::Cps1);
    c.warm_size = 10;
    EXPECT_THROW(c.validate(), invalid_argument);
    c = ExperimentConfig::defaults_for(Problem::Cps1);
    c.plant.pump_failure_prob = 2.0;
    EXPECT_THROW(c.validate(), invalid_argument);
}

TEST(Config, ShippedPlantDefaultsMatchBuiltIns) {
    const std::filesystem::path file = std::filesystem::path(SAOPT_SOURCE_DIR) / "config" / "plant_defaults.cfg";
    const auto c = load_config(file.string());
    EXPECT_EQ(dump(c), dump(ExperimentConfig{}));
}
