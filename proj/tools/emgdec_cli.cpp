// Command-line front end for the decoding pipeline. Subcommands mirror
// the experiment stages; every stage reads the same experiment config
// and is idempotent, so reruns overwrite their own outputs atomically.
//
// Exit codes: 0 ok, 2 config error, 3 missing prerequisite, 4 training
// divergence.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "emgdec/experiment.hpp"
#include "emgdec/training.hpp"

int main(int argc, char** argv) {
    CLI::App app{"streaming sEMG to hand-pose decoding pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string scale = "desk";
    std::string out_override;
    int seed_override = -1;
    app.add_option("--config", config_path, "experiment config JSON")->configurable(false);
    app.add_option("--scale", scale, "preset scale")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--out", out_override, "output directory (overrides config)");
    app.add_option("--seed", seed_override, "single seed (overrides the config seed list)");

    auto* gen = app.add_subcommand("gen-data", "generate synthetic sessions and the split manifest");
    auto* train = app.add_subcommand("train", "train the model grid");
    auto* eval = app.add_subcommand("eval", "evaluate checkpoints and static baselines");
    auto* sweep = app.add_subcommand("filter-sweep", "smoothness/accuracy frontier over the beta grid");
    auto* analyze = app.add_subcommand("analyze", "per-timestep curves and residual spectra");
    auto* report = app.add_subcommand("report", "aggregate metrics into the summary table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        emgdec::ExperimentConfig cfg = emgdec::load_experiment_config(config_path, scale);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0) cfg.seeds = {seed_override};
        cfg.validate();

        if (gen->parsed()) emgdec::cmd_gen_data(cfg);
        else if (train->parsed()) emgdec::cmd_train(cfg);
        else if (eval->parsed()) emgdec::cmd_eval(cfg);
        else if (sweep->parsed()) emgdec::cmd_filter_sweep(cfg);
        else if (analyze->parsed()) emgdec::cmd_analyze(cfg);
        else if (report->parsed()) emgdec::cmd_report(cfg);
        return 0;
    } catch (const emgdec::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const emgdec::MissingPrerequisite& e) {
        std::fprintf(stderr, "missing prerequisite: %s\n", e.what());
        return 3;
    } catch (const emgdec::TrainingDivergence& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
