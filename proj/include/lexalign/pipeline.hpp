#ifndef LEXALIGN_PIPELINE_HPP
#define LEXALIGN_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lexalign/pruning.hpp"
#include "lexalign/stats.hpp"

namespace lexalign {

struct JudgmentSource {
    std::string group;
    std::string category;
    std::string path;
};

struct TaskRef {
    std::string group;
    std::string category;
};

/// Task directory name under the output root.
std::string task_label(const TaskRef& task);

/// Declarative run configuration; relative paths are resolved against the
/// config file's directory when loaded.
struct RunConfig {
    std::string config_path;
    std::string embeddings_path;
    std::string annotations_path;
    std::string domain_map_path;
    std::vector<JudgmentSource> judgments;
    std::vector<TaskRef> tasks;

    bool cv = true;
    int random_draws = 100;
    std::uint64_t seed = 0;
    bool has_seed = false;
    CvNormalization cv_normalization = CvNormalization::refit;
    SdConvention sd = SdConvention::population;

    int n_components = 20;
    bool scale_predictors = true;

    double alpha = 0.05;
    bool two_sided = true;
    CorrelationKind profile_correlation = CorrelationKind::pearson;

    std::string output_dir = "out";
    int jobs = 0;
};

RunConfig load_config(const std::string& path);

/// Aggregated list of configuration problems; empty means valid. Never
/// touches the datasets beyond path existence checks.
std::vector<std::string> validate(const RunConfig& config);

/// Full pipeline: prune -> probe -> stats -> report, then the run manifest.
/// A runtime failure leaves partial outputs plus a FAILED manifest and
/// rethrows.
void run(const RunConfig& config);

// Individual stages; each reads upstream artifacts from the output directory.
void run_prune_stage(const RunConfig& config);
void run_probe_stage(const RunConfig& config);
void run_stats_stage(const RunConfig& config);
void run_report_stage(const RunConfig& config);

}

#endif
