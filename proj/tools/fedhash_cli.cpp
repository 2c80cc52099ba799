// Command-line front end: run experiments in the three training manners,
// sweep compression ratios, merge communication-efficiency curves, export
// datasets, and run the built-in verification suite.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedhash/experiment.hpp"
#include "fedhash/verify.hpp"

namespace {

std::string label_for(const std::string& config_path) {
    return std::filesystem::path(config_path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hash-compressed federated learning simulator"};
    app.require_subcommand(1);

    // --- run ---
    auto* run = app.add_subcommand("run", "run one training manner (or all three)");
    std::string run_config;
    std::vector<std::string> run_overrides;
    bool run_all = false;
    run->add_option("-c,--config", run_config, "config file (JSON)")->required();
    run->add_option("-s,--set", run_overrides, "override, key=value (repeatable)");
    run->add_flag("--all", run_all, "run single (per client), centralized and federated");

    // --- sweep-gamma ---
    auto* sweep = app.add_subcommand("sweep-gamma", "federated run per compression ratio");
    std::string sweep_config;
    std::vector<std::string> sweep_overrides;
    std::vector<std::string> sweep_gammas = {"1", "1/2", "1/4", "1/8"};
    sweep->add_option("-c,--config", sweep_config, "config file (JSON)")->required();
    sweep->add_option("-s,--set", sweep_overrides, "override, key=value (repeatable)");
    sweep->add_option("-g,--gamma", sweep_gammas, "ratios to sweep (default 1 1/2 1/4 1/8)");

    // --- curve ---
    auto* curve = app.add_subcommand("curve", "merge runs into an accuracy-vs-bytes CSV");
    std::vector<std::string> curve_configs;
    std::vector<std::string> curve_labels;
    std::string curve_output = "curve.csv";
    curve->add_option("-c,--config", curve_configs, "config files, one per run")->required();
    curve->add_option("-l,--label", curve_labels, "labels (default: config file stems)");
    curve->add_option("-o,--output", curve_output, "merged CSV path");

    // --- gen-data ---
    auto* gen = app.add_subcommand("gen-data", "export a generated dataset to a binary file");
    uint64_t gen_n = 5000;
    uint64_t gen_seed = 7;
    float gen_pflip = 0.05f;
    uint32_t gen_shift = 1;
    std::string gen_output = "glyphs.bin";
    gen->add_option("-n,--n", gen_n, "number of examples");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--p-flip", gen_pflip, "pixel flip probability, [0, 0.5)");
    gen->add_option("--shift", gen_shift, "max glyph shift, 0..2");
    gen->add_option("-o,--output", gen_output, "output file");

    // --- verify ---
    auto* verify = app.add_subcommand("verify", "run the built-in property checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return fedhash::cmd_run(fedhash::load_config(run_config, run_overrides), run_all);
        }
        if (sweep->parsed()) {
            std::vector<fedhash::Ratio> gammas;
            for (const auto& g : sweep_gammas) gammas.push_back(fedhash::parse_ratio(g));
            return fedhash::cmd_sweep_gamma(fedhash::load_config(sweep_config, sweep_overrides),
                                            gammas);
        }
        if (curve->parsed()) {
            std::vector<fedhash::RunConfig> configs;
            std::vector<std::string> labels;
            for (size_t i = 0; i < curve_configs.size(); ++i) {
                configs.push_back(fedhash::load_config(curve_configs[i]));
                labels.push_back(i < curve_labels.size() ? curve_labels[i]
                                                         : label_for(curve_configs[i]));
            }
            return fedhash::cmd_curve(configs, labels, curve_output);
        }
        if (gen->parsed()) {
            const fedhash::GlyphDataset data =
                fedhash::generate_glyphs(gen_n, gen_seed, gen_pflip, gen_shift);
            fedhash::write_glyph_file(gen_output, data);
            std::printf("wrote %zu examples to %s\n", data.size(), gen_output.c_str());
            return 0;
        }
        if (verify->parsed()) {
            const int failed = fedhash::run_verify();
            if (failed > 0) std::fprintf(stderr, "%d check(s) failed\n", failed);
            return failed == 0 ? 0 : 1;
        }
    } catch (const fedhash::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
