#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsadv/experiment.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
    std::string stage = "all";
};

int run(const CliOptions& opt) {
    try {
        tsadv::ExperimentConfig cfg = tsadv::ExperimentConfig::from_json_file(opt.config_path);
        if (opt.seed_override || !opt.out_override.empty()) {
            // overrides re-enter through the canonical JSON so the config
            // echo and hash reflect what actually ran
            auto j = nlohmann::json::parse(cfg.canonical_json);
            if (opt.seed_override) j["seed"] = *opt.seed_override;
            if (!opt.out_override.empty()) j["output_dir"] = opt.out_override;
            cfg = tsadv::ExperimentConfig::from_json_string(j.dump());
        }
        tsadv::ExperimentRunner runner(std::move(cfg));
        runner.run_stage(opt.stage);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "[%s] error: %s\n", opt.stage.c_str(), e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsadv: train, attack, defend, and report on LSTM time-series forecasters"};
    app.require_subcommand(0, 1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "experiment config JSON")->required(false);
    app.add_option("--seed", opt.seed_override, "override the config seed");
    app.add_option("--out", opt.out_override, "override the config output directory");
    app.add_option("--stage", opt.stage, "stage to run: train|attack|defend|sweep|report|all");

    for (const std::string name : {"train", "attack", "defend", "sweep", "report", "all"}) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " stage");
        sub->add_option("--config", opt.config_path, "experiment config JSON");
        sub->add_option("--seed", opt.seed_override, "override the config seed");
        sub->add_option("--out", opt.out_override, "override the config output directory");
        sub->callback([&opt, name]() { opt.stage = name; });
    }

    CLI11_PARSE(app, argc, argv);

    if (opt.config_path.empty()) {
        std::fprintf(stderr, "[cli] error: --config is required\n");
        return 2;
    }
    return run(opt);
}
