#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cvkerr/experiments.hpp"

using namespace cvkerr;

int main(int argc, char** argv) {
    CLI::App app{"measurement-based Kerr interaction simulator"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list registered experiments");

    auto* run_cmd = app.add_subcommand("run", "run a registered experiment");
    std::string experiment, scheme, mode, input_state, out_dir, config_file;
    int dim = 0, reps = 0, jobs = 0;
    double t = 0.0;
    std::uint64_t seed = 0;
    bool have_seed = false;
    run_cmd->add_option("--experiment,-e", experiment, "experiment name (see `cvkerr list`)");
    run_cmd->add_option("--dim", dim, "Fock truncation dimension (default 60)");
    run_cmd->add_option("--t", t, "interaction amplitude");
    run_cmd->add_option("--scheme", scheme, "first|separated|q2|third (and q2_* variants)");
    run_cmd->add_option("--mode", mode, "direct|postselect|deterministic");
    run_cmd->add_option("--reps", reps, "scheme repetitions");
    run_cmd->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
        have_seed = true;
    });
    run_cmd->add_option("--input", input_state, "coherent:<amp> or fock:<c0,c1,...>");
    run_cmd->add_option("--out", out_dir, "output directory (default cvkerr_out/<experiment>)");
    run_cmd->add_option("--jobs", jobs, "parallel workers for independent cells");
    run_cmd->add_option("--config", config_file, "JSON config file; flags win on conflict");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (list_cmd->parsed()) {
        for (const auto& [name, desc] : list_experiments())
            std::printf("%-16s %s\n", name.c_str(), desc.c_str());
        return 0;
    }

    try {
        ExperimentConfig cfg;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw std::invalid_argument("cannot open config file: " + config_file);
            nlohmann::json j;
            in >> j;
            cfg = experiment_config_from_json(j);
        }
        if (!experiment.empty()) cfg.experiment = experiment;
        if (dim > 0) cfg.dim = dim;
        if (t != 0.0) cfg.t = t;
        if (!scheme.empty()) cfg.scheme = scheme_kind_from_string(scheme);
        if (!mode.empty()) cfg.mode = protocol_mode_from_string(mode);
        if (reps > 0) cfg.repetitions = reps;
        if (have_seed) cfg.seed = seed;
        if (!input_state.empty()) cfg.input_state = input_state;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs > 0) cfg.jobs = jobs;
        if (cfg.experiment.empty())
            throw std::invalid_argument("no experiment given (use --experiment or --config)");

        ExperimentReport rep = run_experiment(cfg);
        std::printf("%s: epsilon = %.6g (log10 = %.4f)%s\n", cfg.experiment.c_str(),
                    rep.epsilon, rep.log10_epsilon,
                    rep.tolerance_ok ? "" : "  [outside reference tolerance]");
        for (const auto& f : rep.files) std::printf("  wrote %s\n", f.string().c_str());
        return rep.tolerance_ok ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
