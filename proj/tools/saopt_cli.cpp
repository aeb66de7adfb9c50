// saopt: command-line front end for the assisted GA / NSGA-II experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "saopt/saopt.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::string> problem, mode, algorithm, out;
    std::optional<std::size_t> generations, repetitions, threads;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "key = value config file (e.g. a manifest.cfg)");
    cmd->add_option("--problem", o.problem, "cps1 | cps2 | psa_proxy");
    cmd->add_option("--mode", o.mode, "direct | surrogate");
    cmd->add_option("--algorithm", o.algorithm, "ga | nsga2");
    cmd->add_option("--generations", o.generations, "generations per repetition");
    cmd->add_option("--repetitions", o.repetitions, "independent repetitions");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--threads", o.threads, "worker threads (results do not depend on this)");
    cmd->add_option("--out", o.out, "output directory");
}

// Config file first, then flags; a problem flag resets to that problem's defaults.
saopt::ExperimentConfig build_config(const Options& o) {
    saopt::KeyValues kv;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw saopt::io_error("cannot open config file: " + o.config);
        kv = saopt::parse_key_values(in, o.config);
    }
    if (o.problem) kv.emplace_back("problem", *o.problem);
    if (o.mode) kv.emplace_back("mode", *o.mode);
    if (o.algorithm) kv.emplace_back("algorithm", *o.algorithm);
    if (o.generations) kv.emplace_back("generations", std::to_string(*o.generations));
    if (o.repetitions) kv.emplace_back("repetitions", std::to_string(*o.repetitions));
    if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
    if (o.threads) kv.emplace_back("threads", std::to_string(*o.threads));
    if (o.out) kv.emplace_back("output_dir", *o.out);
    auto cfg = saopt::apply_key_values(saopt::ExperimentConfig{}, kv);
    cfg.validate();
    return cfg;
}

void print_summary(const std::vector<saopt::RunResult>& runs, const saopt::ExperimentConfig& cfg) {
    const auto prob = saopt::make_problem(cfg);
    for (const auto& r : runs) {
        std::printf("rep %zu  mode %s  sim_calls %zu  surrogate_calls %zu  retrains %zu", r.repetition,
                    saopt::to_string(r.mode), r.total_sim_calls(), r.records.back().surrogate_calls, r.retrain_count);
        if (cfg.algorithm == saopt::Algorithm::Ga)
            std::printf("  best %.6g  elite_mean %.6g\n", r.records.back().best, r.records.back().elite_mean);
        else
            std::printf("  front %zu  hv %.6g\n", r.final_front.size(), saopt::final_hypervolume(r, prob));
    }
}

int run_and_export(const saopt::ExperimentConfig& cfg) {
    const auto runs = saopt::run_experiment(cfg);
    const auto paths = saopt::export_results(runs, cfg, cfg.output_dir);
    print_summary(runs, cfg);
    std::printf("wrote %s\n", paths.generations.parent_path().string().c_str());
    return 0;
}

double mean_final_quality(const std::vector<saopt::RunResult>& runs, const saopt::ExperimentConfig& cfg) {
    const auto prob = saopt::make_problem(cfg);
    double s = 0.0;
    for (const auto& r : runs)
        s += cfg.algorithm == saopt::Algorithm::Ga ? r.records.back().elite_mean : saopt::final_hypervolume(r, prob);
    return s / static_cast<double>(runs.size());
}

int report(saopt::ExperimentConfig cfg) {
    cfg.mode = saopt::Mode::Direct;
    const auto direct = saopt::run_experiment(cfg);
    saopt::export_results(direct, cfg, std::filesystem::path(cfg.output_dir) / "direct");
    cfg.mode = saopt::Mode::Surrogate;
    const auto assisted = saopt::run_experiment(cfg);
    saopt::export_results(assisted, cfg, std::filesystem::path(cfg.output_dir) / "surrogate");
    const auto rep = saopt::compute_speedup(direct, assisted, saopt::make_holdout(cfg, 200));

    const double qd = mean_final_quality(direct, cfg);
    const double qs = mean_final_quality(assisted, cfg);
    const char* quality = cfg.algorithm == saopt::Algorithm::Ga ? "final_elite_mean" : "final_hv";
    const auto path = std::filesystem::path(cfg.output_dir) / "report.csv";
    std::ofstream out(path);
    if (!out) throw saopt::io_error("cannot write " + path.string());
    out << "metric,value\n";
    auto row = [&](const std::string& k, double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << k << ',' << buf << '\n';
        std::printf("%-34s %.6g\n", k.c_str(), v);
    };
    row("direct_sim_calls", static_cast<double>(rep.direct_sim_calls));
    row("surrogate_sim_calls", static_cast<double>(rep.surrogate_sim_calls));
    row("warm_sim_calls_per_run", static_cast<double>(rep.warm_sim_calls));
    row("sim_call_ratio", rep.sim_call_ratio);
    row("sim_call_ratio_excluding_warm", rep.sim_call_ratio_excluding_warm);
    row("wall_time_ratio", rep.wall_time_ratio);
    for (std::size_t k = 0; k < rep.holdout_r2.size(); ++k) {
        row("holdout_r2_" + std::to_string(k), rep.holdout_r2[k]);
        row("holdout_normalized_mae_" + std::to_string(k), rep.holdout_normalized_mae[k]);
    }
    row(std::string("direct_") + quality, qd);
    row(std::string("surrogate_") + quality, qs);
    row("quality_ratio", qs / qd);
    if (!out.flush()) throw saopt::io_error("write failed: " + path.string());
    return 0;
}

int front(const saopt::ExperimentConfig& cfg, std::size_t reference_points) {
    if (reference_points) {
        std::printf("purity,recovery\n");
        for (const auto& p : saopt::proxy_reference_front(reference_points))
            std::printf("%.17g,%.17g\n", 100.0 * p[0], 100.0 * p[1]);
        return 0;
    }
    const auto prob = saopt::make_problem(cfg);
    const auto runs = saopt::run_experiment(cfg);
    std::printf("experiment_id");
    for (const auto& n : prob.objective_names) std::printf(",%s", n.c_str());
    for (const auto& s : prob.specs) std::printf(",%s", s.name.c_str());
    std::printf("\n");
    for (const auto& r : runs)
        for (const auto& ind : r.final_front.members) {
            std::printf("%zu", r.repetition);
            for (double v : ind.fitness().values) std::printf(",%.17g", v);
            for (double v : ind.genome) std::printf(",%.17g", v);
            std::printf("\n");
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-assisted GA / NSGA-II experiments"};
    app.set_version_flag("--version", saopt::kCodeVersion);
    app.require_subcommand(1);

    Options run_o, base_o, report_o, front_o;
    std::size_t reference_points = 0;
    auto* run = app.add_subcommand("run", "run an experiment and export CSVs and a manifest");
    add_common(run, run_o);
    auto* baseline = app.add_subcommand("baseline", "run with every evaluation sent to the simulator");
    add_common(baseline, base_o);
    auto* rep = app.add_subcommand("report", "run direct and assisted modes and compare call counts and quality");
    add_common(rep, report_o);
    auto* fr = app.add_subcommand("front", "print the final front (or the proxy reference front) as CSV");
    add_common(fr, front_o);
    fr->add_option("--reference", reference_points, "print this many points of the analytic proxy front instead");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return run_and_export(build_config(run_o));
        if (*baseline) {
            auto cfg = build_config(base_o);
            cfg.mode = saopt::Mode::Direct;
            return run_and_export(cfg);
        }
        if (*rep) return report(build_config(report_o));
        if (*fr) return front(build_config(front_o), reference_points);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "saopt: error: %s\n", e.what());
        return 2;
    }
    return 1;
}
