#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fpr/error.hpp"
#include "fpr/pipeline.hpp"

namespace {

int exit_code_for(fpr::Errc code) {
    switch (code) {
    case fpr::Errc::missing_artifact: return 3;
    case fpr::Errc::invalid_config: return 4;
    case fpr::Errc::version_mismatch: return 5;
    case fpr::Errc::malformed_header:
    case fpr::Errc::truncated_payload:
    case fpr::Errc::size_mismatch:
    case fpr::Errc::missing_column:
    case fpr::Errc::bad_number:
    case fpr::Errc::bad_label:
    case fpr::Errc::bad_value: return 6;
    default: return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"false-positive reduction pipeline for pulmonary nodule candidates"};
    app.require_subcommand(1, 0); // stages may be chained in one invocation

    std::string config_path;
    std::string out_dir, regime;
    int fold = -1, k = -1;
    long long seed = -1;
    app.add_option("--config", config_path, "pipeline config file (key = value sections)");
    app.add_option("--out", out_dir, "artifact directory (overrides data.out)");
    app.add_option("--fold", fold, "cross-validation fold index")->check(CLI::Range(0, 7));
    app.add_option("--regime", regime, "training regime: ae|dae|r|a|s");
    app.add_option("--k", k, "ensemble size / cluster count");
    app.add_option("--seed", seed, "master seed (overrides run.master_seed)");

    for (const auto& name : fpr::command_names()) app.add_subcommand(name, "");

    CLI11_PARSE(app, argc, argv);

    try {
        fpr::PipelineConfig cfg =
            config_path.empty() ? fpr::PipelineConfig{} : fpr::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (fold >= 0) cfg.fold = fold;
        if (!regime.empty()) cfg.regime = fpr::regime_from_name(regime);
        if (k > 0) cfg.k = k;
        if (seed >= 0) cfg.master_seed = uint64_t(seed);
        cfg.validate();

        for (const auto* sub : app.get_subcommands()) fpr::run_command(sub->get_name(), cfg);
        return 0;
    } catch (const fpr::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
