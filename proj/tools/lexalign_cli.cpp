#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lexalign/error.hpp"
#include "lexalign/pipeline.hpp"
#include "lexalign/version.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::int64_t seed = -1;
    int jobs = -1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration file")->required();
    cmd->add_option("--seed", args.seed, "Override the configured random seed");
    cmd->add_option("--jobs", args.jobs, "Worker thread count (0 = hardware default)");
    cmd->add_option("--out", args.out_dir, "Override the configured output directory");
}

lexalign::RunConfig load(const CommonArgs& args) {
    lexalign::RunConfig config = lexalign::load_config(args.config_path);
    if (args.seed >= 0) {
        config.seed = static_cast<std::uint64_t>(args.seed);
        config.has_seed = true;
    }
    if (args.jobs >= 0) config.jobs = args.jobs;
    if (!args.out_dir.empty()) config.output_dir = args.out_dir;
    return config;
}

int run_validate(const CommonArgs& args) {
    const lexalign::RunConfig config = load(args);
    const auto issues = lexalign::validate(config);
    if (issues.empty()) {
        std::cout << "configuration ok: " << config.tasks.size() << " task(s)\n";
        return 0;
    }
    for (const auto& issue : issues) std::cerr << "error: " << issue << "\n";
    return 1;
}

template <typename Fn>
int run_stage(const CommonArgs& args, Fn&& fn) {
    const lexalign::RunConfig config = load(args);
    fn(config);
    return 0;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Supervised embedding pruning and semantic probing pipeline"};
    app.set_version_flag("--version", std::string("lexalign ") + lexalign::kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* validate_cmd = app.add_subcommand("validate", "Check a run configuration");
    CLI::App* run_cmd = app.add_subcommand("run", "Execute the full pipeline");
    CLI::App* prune_cmd = app.add_subcommand("prune", "Prune feature sets per task");
    CLI::App* probe_cmd =
        app.add_subcommand("probe", "Probe retained sets against the annotation norms");
    CLI::App* stats_cmd =
        app.add_subcommand("stats", "Compare group prediction errors per category");
    CLI::App* report_cmd =
        app.add_subcommand("report", "Regenerate cross-task tables from stored artifacts");
    for (CLI::App* cmd : {validate_cmd, run_cmd, prune_cmd, probe_cmd, stats_cmd, report_cmd})
        add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(validate_cmd)) return run_validate(args);
        if (app.got_subcommand(run_cmd))
            return run_stage(args, [](const auto& c) { lexalign::run(c); });
        if (app.got_subcommand(prune_cmd))
            return run_stage(args, [](const auto& c) { lexalign::run_prune_stage(c); });
        if (app.got_subcommand(probe_cmd))
            return run_stage(args, [](const auto& c) { lexalign::run_probe_stage(c); });
        if (app.got_subcommand(stats_cmd))
            return run_stage(args, [](const auto& c) { lexalign::run_stats_stage(c); });
        if (app.got_subcommand(report_cmd))
            return run_stage(args, [](const auto& c) { lexalign::run_report_stage(c); });
    } catch (const lexalign::Error& e) {
        std::cerr << "error [" << lexalign::to_string(e.kind()) << "]: " << e.what() << "\n";
        return e.kind() == lexalign::ErrorKind::validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
