#include "lexalign/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lexalign/error.hpp"
#include "lexalign/rng.hpp"
#include "lexalign/setanalysis.hpp"
#include "lexalign/util.hpp"
#include "lexalign/version.hpp"

namespace fs = std::filesystem;

namespace lexalign {

namespace {

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << content;
}

std::ifstream open_stream(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    return in;
}

void apply_jobs(const RunConfig& config) {
#ifdef _OPENMP
    if (config.jobs > 0) omp_set_num_threads(config.jobs);
#else
    (void)config;
#endif
}

fs::path out_root(const RunConfig& config) { return fs::path(config.output_dir); }

fs::path task_dir(const RunConfig& config, const TaskRef& task) {
    return out_root(config) / task_label(task);
}

const JudgmentSource* find_source(const RunConfig& config, const TaskRef& task) {
    for (const auto& src : config.judgments)
        if (src.group == task.group && src.category == task.category) return &src;
    return nullptr;
}

JudgmentDataset load_judgments(const RunConfig& config, const TaskRef& task) {
    const JudgmentSource* src = find_source(config, task);
    if (!src)
        throw Error(ErrorKind::validation,
                    "task " + task_label(task) + " has no judgments source");
    auto in = open_stream(src->path);
    JudgmentDataset ds = parse_judgments(in);
    ds.group_label = task.group;
    ds.category_label = task.category;
    return ds;
}

std::set<std::string> task_word_union(const RunConfig& config) {
    std::set<std::string> words;
    for (const auto& task : config.tasks) {
        const JudgmentDataset ds = load_judgments(config, task);
        words.insert(ds.words.begin(), ds.words.end());
    }
    return words;
}

[[noreturn]] void stage_error(const std::string& stage, const std::string& task,
                              const Error& cause) {
    std::string where = "stage " + stage;
    if (!task.empty()) where += ", task " + task;
    throw Error(cause.kind(), where + ": " + cause.what());
}

nlohmann::json load_task_manifest(const RunConfig& config, const TaskRef& task) {
    const fs::path path = task_dir(config, task) / "task_manifest.json";
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    return j;
}

// ---------------------------------------------------------------------------
// config

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}

std::string task_label(const TaskRef& task) {
    return sanitize(task.group) + "_" + sanitize(task.category);
}

RunConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::validation, "config '" + path + "': " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::validation, e.what());
    }

    RunConfig config;
    config.config_path = path;
    const fs::path base = fs::path(path).parent_path();
    const auto resolve = [&](const std::string& p) {
        if (p.empty()) return p;
        const fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    try {
        config.embeddings_path = resolve(get_or<std::string>(j, "embeddings", ""));
        config.annotations_path = resolve(get_or<std::string>(j, "annotations", ""));
        config.domain_map_path = resolve(get_or<std::string>(j, "domain_map", ""));
        if (j.contains("judgments")) {
            for (const auto& e : j.at("judgments")) {
                JudgmentSource src;
                src.group = e.at("group").get<std::string>();
                src.category = e.at("category").get<std::string>();
                src.path = resolve(e.at("path").get<std::string>());
                config.judgments.push_back(std::move(src));
            }
        }
        if (j.contains("tasks")) {
            for (const auto& e : j.at("tasks"))
                config.tasks.push_back(
                    {e.at("group").get<std::string>(), e.at("category").get<std::string>()});
        } else {
            for (const auto& src : config.judgments)
                config.tasks.push_back({src.group, src.category});
        }
        if (j.contains("pruning")) {
            const auto& p = j.at("pruning");
            config.cv = get_or<bool>(p, "cv", config.cv);
            config.random_draws = get_or<int>(p, "random_draws", config.random_draws);
            if (p.contains("seed")) {
                config.seed = p.at("seed").get<std::uint64_t>();
                config.has_seed = true;
            }
            const std::string norm = get_or<std::string>(p, "cv_normalization", "refit");
            if (norm == "refit") {
                config.cv_normalization = CvNormalization::refit;
            } else if (norm == "reuse_full") {
                config.cv_normalization = CvNormalization::reuse_full;
            } else {
                throw Error(ErrorKind::validation,
                            "pruning.cv_normalization must be 'refit' or 'reuse_full'");
            }
            const std::string sd = get_or<std::string>(p, "sd", "population");
            if (sd == "population") {
                config.sd = SdConvention::population;
            } else if (sd == "sample") {
                config.sd = SdConvention::sample;
            } else {
                throw Error(ErrorKind::validation, "pruning.sd must be 'population' or 'sample'");
            }
        }
        if (j.contains("plsr")) {
            const auto& p = j.at("plsr");
            config.n_components = get_or<int>(p, "n_components", config.n_components);
            config.scale_predictors =
                get_or<bool>(p, "scale_predictors", config.scale_predictors);
        }
        if (j.contains("stats")) {
            const auto& s = j.at("stats");
            config.alpha = get_or<double>(s, "alpha", config.alpha);
            config.two_sided = get_or<bool>(s, "two_sided", config.two_sided);
            const std::string corr = get_or<std::string>(s, "correlation", "pearson");
            if (corr == "pearson") {
                config.profile_correlation = CorrelationKind::pearson;
            } else if (corr == "spearman") {
                config.profile_correlation = CorrelationKind::spearman;
            } else {
                throw Error(ErrorKind::validation,
                            "stats.correlation must be 'pearson' or 'spearman'");
            }
        }
        if (j.contains("output_dir"))
            config.output_dir = resolve(j.at("output_dir").get<std::string>());
        config.jobs = get_or<int>(j, "jobs", 0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::validation, "config '" + path + "': " + e.what());
    }
    return config;
}

std::vector<std::string> validate(const RunConfig& config) {
    std::vector<std::string> issues;

    const auto check_path = [&](const std::string& what, const std::string& p) {
        if (p.empty()) {
            issues.push_back(what + " path is missing from the config");
        } else if (!fs::exists(p)) {
            issues.push_back(what + " file '" + p + "' does not exist");
        }
    };
    check_path("embeddings", config.embeddings_path);
    check_path("annotations", config.annotations_path);
    check_path("domain_map", config.domain_map_path);
    for (const auto& src : config.judgments)
        check_path("judgments [" + src.group + ", " + src.category + "]", src.path);

    if (config.judgments.empty()) issues.push_back("config declares no judgments sources");
    if (config.tasks.empty()) issues.push_back("config declares no tasks");

    std::set<std::pair<std::string, std::string>> declared;
    for (const auto& src : config.judgments) {
        if (!declared.emplace(src.group, src.category).second)
            issues.push_back("judgments source [" + src.group + ", " + src.category +
                             "] declared twice");
    }
    std::set<std::pair<std::string, std::string>> seen_tasks;
    for (const auto& task : config.tasks) {
        if (!declared.count({task.group, task.category}))
            issues.push_back("task [" + task.group + ", " + task.category +
                             "] names no declared judgments source");
        if (!seen_tasks.emplace(task.group, task.category).second)
            issues.push_back("task [" + task.group + ", " + task.category + "] listed twice");
    }

    if (config.cv && !config.has_seed)
        issues.push_back("pruning.seed is required when cross-validation is enabled");
    if (config.random_draws < 1) issues.push_back("pruning.random_draws must be at least 1");
    if (config.n_components < 1) issues.push_back("plsr.n_components must be at least 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        issues.push_back("stats.alpha must lie in (0, 1)");
    if (config.jobs < 0) issues.push_back("jobs must be non-negative");
    if (config.output_dir.empty()) issues.push_back("output_dir is missing from the config");

    return issues;
}

namespace {

void require_valid(const RunConfig& config) {
    const auto issues = validate(config);
    if (!issues.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& issue : issues) msg += "\n  - " + issue;
        throw Error(ErrorKind::validation, msg);
    }
}

}

void run_prune_stage(const RunConfig& config) {
    require_valid(config);
    apply_jobs(config);

    EmbeddingTable emb;
    try {
        const std::set<std::string> filter = task_word_union(config);
        auto emb_in = open_stream(config.embeddings_path);
        emb = parse_embeddings(emb_in, filter);
    } catch (const Error& e) {
        stage_error("prune", "", e);
    }

    for (const auto& task : config.tasks) {
        const std::string label = task_label(task);
        try {
            const JudgmentDataset ds = load_judgments(config, task);
            const EmbeddingTable embc = emb.subset(ds.words);

            const SimilarityMatrix h = group_similarity(ds, {config.sd});
            std::ostringstream hs;
            emit_similarity(h, hs);
            write_file(task_dir(config, task) / "human_similarity.csv", hs.str());

            RetainedFeatureSet retained = prune(embc, h);
            retained.category_label = task.category;
            retained.group_label = task.group;
            std::ostringstream rs;
            emit_retained(retained, rs);
            write_file(task_dir(config, task) / "retained.csv", rs.str());

            nlohmann::json manifest;
            manifest["group"] = task.group;
            manifest["category"] = task.category;
            manifest["dims"] = retained.dims;
            manifest["word_count"] = ds.word_count();
            manifest["retained_size"] = retained.size();
            manifest["achieved_rho"] = retained.achieved_rho;
            manifest["baseline_rho"] = retained.baseline_rho;
            manifest["skipped_prefix_sizes"] = retained.skipped_prefix_sizes;

            if (config.cv) {
                PruneCvOptions opt;
                opt.random_draws = config.random_draws;
                opt.seed = mix_seed(config.seed, fnv1a64(label));
                opt.normalization = config.cv_normalization;
                opt.sd = config.sd;
                const PruneCvReport report = prune_cv(emb, ds, opt);
                std::ostringstream cs;
                emit_prune_cv(report, cs);
                write_file(task_dir(config, task) / "cv_folds.csv", cs.str());
                manifest["cv"] = {{"base_mean", report.base_mean},
                                  {"retained_mean", report.retained_mean},
                                  {"random_mean", report.random_mean},
                                  {"size_mean", report.size_mean},
                                  {"folds", report.folds.size()}};
            }
            write_file(task_dir(config, task) / "task_manifest.json", manifest.dump(2) + "\n");
        } catch (const Error& e) {
            stage_error("prune", label, e);
        }
    }
}

void run_probe_stage(const RunConfig& config) {
    require_valid(config);
    apply_jobs(config);

    AnnotationTable ann;
    EmbeddingTable emb;
    try {
        auto ann_in = open_stream(config.annotations_path);
        auto map_in = open_stream(config.domain_map_path);
        ann = parse_annotations(ann_in, map_in);
        std::set<std::string> filter(ann.words.begin(), ann.words.end());
        auto emb_in = open_stream(config.embeddings_path);
        emb = parse_embeddings(emb_in, filter);
    } catch (const Error& e) {
        stage_error("probe", "", e);
    }

    if (!ann.warnings.empty()) {
        std::string text;
        for (const auto& w : ann.warnings) text += w + "\n";
        write_file(out_root(config) / "cross" / "annotation_warnings.txt", text);
    }

    for (const auto& task : config.tasks) {
        const std::string label = task_label(task);
        try {
            auto ret_in = open_stream(task_dir(config, task) / "retained.csv");
            RetainedFeatureSet retained = parse_retained(ret_in, emb.dims());
            retained.category_label = task.category;
            retained.group_label = task.group;

            const int k_eff =
                std::min({config.n_components, retained.size(), ann.word_count() - 2});
            PlsrOptions opt;
            opt.scale_predictors = config.scale_predictors;

            const PredictionMatrix lsm65 = loocv_stack(emb, retained, ann, k_eff, opt);
            const PredictionMatrix lsm14 = condense_domains(lsm65, ann.domain_map);

            std::ostringstream v65, t65, v14, t14;
            emit_predictions(lsm65, v65);
            emit_ground_truth(lsm65, t65);
            emit_predictions(lsm14, v14);
            emit_ground_truth(lsm14, t14);
            write_file(task_dir(config, task) / "lsm65.csv", v65.str());
            write_file(task_dir(config, task) / "lsm65_truth.csv", t65.str());
            write_file(task_dir(config, task) / "lsm14.csv", v14.str());
            write_file(task_dir(config, task) / "lsm14_truth.csv", t14.str());

            const AccuracyProfile p65 =
                accuracy_profile(lsm65, label, config.profile_correlation);
            const AccuracyProfile p14 =
                accuracy_profile(lsm14, label, config.profile_correlation);
            std::ostringstream pd65, pw65, pd14, pw14;
            emit_profile_dims(p65, pd65);
            emit_profile_words(p65, pw65);
            emit_profile_dims(p14, pd14);
            emit_profile_words(p14, pw14);
            write_file(task_dir(config, task) / "profile_dims_65.csv", pd65.str());
            write_file(task_dir(config, task) / "profile_words_65.csv", pw65.str());
            write_file(task_dir(config, task) / "profile_dims_14.csv", pd14.str());
            write_file(task_dir(config, task) / "profile_words_14.csv", pw14.str());

            nlohmann::json manifest;
            manifest["group"] = task.group;
            manifest["category"] = task.category;
            manifest["retained_size"] = retained.size();
            manifest["n_components"] = k_eff;
            manifest["scale_predictors"] = config.scale_predictors;
            write_file(task_dir(config, task) / "probe_manifest.json", manifest.dump(2) + "\n");
        } catch (const Error& e) {
            stage_error("probe", label, e);
        }
    }
}

namespace {

struct GroupContrast {
    std::string category;
    TaskRef a, b;
    std::string file_name;
    std::string column_label;
};

// category pairs with distinct groups, categories in first-appearance order
std::vector<GroupContrast> group_contrasts(const RunConfig& config) {
    std::vector<std::string> categories;
    for (const auto& task : config.tasks)
        if (std::find(categories.begin(), categories.end(), task.category) == categories.end())
            categories.push_back(task.category);

    std::vector<GroupContrast> out;
    for (const auto& category : categories) {
        std::vector<TaskRef> members;
        for (const auto& task : config.tasks)
            if (task.category == category) members.push_back(task);
        std::vector<GroupContrast> local;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                if (members[a].group == members[b].group) continue;
                GroupContrast gc;
                gc.category = category;
                gc.a = members[a];
                gc.b = members[b];
                gc.file_name = "discrepancy_" + sanitize(category) + "_" +
                               sanitize(members[a].group) + "_vs_" + sanitize(members[b].group) +
                               ".csv";
                local.push_back(gc);
            }
        for (auto& gc : local) {
            gc.column_label = local.size() == 1
                                  ? sanitize(gc.category)
                                  : sanitize(gc.category) + "_" + sanitize(gc.a.group) + "_vs_" +
                                        sanitize(gc.b.group);
            out.push_back(gc);
        }
    }
    return out;
}

}

void run_stats_stage(const RunConfig& config) {
    require_valid(config);
    apply_jobs(config);

    for (const auto& contrast : group_contrasts(config)) {
        try {
            auto va = open_stream(task_dir(config, contrast.a) / "lsm14.csv");
            auto ta = open_stream(task_dir(config, contrast.a) / "lsm14_truth.csv");
            const PredictionMatrix pa = parse_predictions(va, ta);
            auto vb = open_stream(task_dir(config, contrast.b) / "lsm14.csv");
            auto tb = open_stream(task_dir(config, contrast.b) / "lsm14_truth.csv");
            const PredictionMatrix pb = parse_predictions(vb, tb);

            DiscrepancyOptions opt;
            opt.alpha = config.alpha;
            opt.two_sided = config.two_sided;
            opt.group_a = contrast.a.group;
            opt.group_b = contrast.b.group;
            opt.category = contrast.category;
            const DiscrepancyReport report = discrepancy_test(pa, pb, opt);
            std::ostringstream ss;
            emit_discrepancy(report, ss);
            write_file(out_root(config) / "cross" / contrast.file_name, ss.str());
        } catch (const Error& e) {
            stage_error("stats", task_label(contrast.a) + "+" + task_label(contrast.b), e);
        }
    }
}

namespace {

AccuracyProfile load_profile_dims(const fs::path& path, const std::string& label) {
    AccuracyProfile profile;
    profile.label = label;
    auto in = open_stream(path);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"dim", "r"})
        throw Error(ErrorKind::format, "profile header must be 'dim,r' in '" + path.string() + "'");
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 2)
            throw Error(ErrorKind::format, "malformed profile row in '" + path.string() + "'");
        bool ok = false;
        const double r = parse_number(fields[1], ok);
        if (!ok) throw Error(ErrorKind::format, "bad r value in '" + path.string() + "'");
        profile.dims.push_back(fields[0]);
        profile.per_dim_r.push_back(r);
    }
    return profile;
}

}

void run_report_stage(const RunConfig& config) {
    require_valid(config);
    apply_jobs(config);
    const fs::path cross = out_root(config) / "cross";

    try {
        // retained sets and labels in config task order
        std::vector<RetainedFeatureSet> sets;
        std::vector<std::string> labels;
        std::vector<nlohmann::json> manifests;
        int dims = -1;
        for (const auto& task : config.tasks) {
            nlohmann::json m = load_task_manifest(config, task);
            const int d = m.at("dims").get<int>();
            if (dims < 0) dims = d;
            if (d != dims)
                throw Error(ErrorKind::domain,
                            "tasks disagree on embedding dimensionality (" +
                                std::to_string(d) + " vs " + std::to_string(dims) + ")");
            auto in = open_stream(task_dir(config, task) / "retained.csv");
            RetainedFeatureSet set = parse_retained(in, d);
            set.group_label = task.group;
            set.category_label = task.category;
            sets.push_back(std::move(set));
            labels.push_back(task_label(task));
            manifests.push_back(std::move(m));
        }

        {
            const DiceMatrix dm = dice_matrix(sets, labels);
            std::ostringstream ss;
            emit_dice(dm, ss);
            write_file(cross / "dice.csv", ss.str());
        }

        {
            const auto counts = frequency_histogram(sets, dims);
            std::ostringstream ss;
            ss << "appearances,features\n";
            for (std::size_t c = 0; c < counts.size(); ++c)
                ss << c << ',' << counts[c] << '\n';
            write_file(cross / "feature_frequency.csv", ss.str());
        }

        {
            std::ostringstream t2;
            t2 << "group,category,baseline_rho,retained_rho,retained_features\n";
            for (std::size_t i = 0; i < manifests.size(); ++i) {
                const auto& m = manifests[i];
                t2 << m.at("group").get<std::string>() << ','
                   << m.at("category").get<std::string>() << ','
                   << format_g(m.at("baseline_rho").get<double>(), 6) << ','
                   << format_g(m.at("achieved_rho").get<double>(), 6) << ','
                   << m.at("retained_size").get<int>() << '\n';
            }
            write_file(cross / "table2.csv", t2.str());

            if (config.cv) {
                std::ostringstream t1;
                t1 << "group,category,base_mean,retained_mean,random_mean,features_mean\n";
                for (const auto& m : manifests) {
                    const auto& cv = m.at("cv");
                    t1 << m.at("group").get<std::string>() << ','
                       << m.at("category").get<std::string>() << ','
                       << format_g(cv.at("base_mean").get<double>(), 6) << ','
                       << format_g(cv.at("retained_mean").get<double>(), 6) << ','
                       << format_g(cv.at("random_mean").get<double>(), 6) << ','
                       << format_g(cv.at("size_mean").get<double>(), 6) << '\n';
                }
                write_file(cross / "table1.csv", t1.str());
            }
        }

        // word lists for compression and the never-retained lookup
        std::set<std::string> filter = task_word_union(config);
        auto ann_in = open_stream(config.annotations_path);
        auto map_in = open_stream(config.domain_map_path);
        const AnnotationTable ann = parse_annotations(ann_in, map_in);
        filter.insert(ann.words.begin(), ann.words.end());
        auto emb_in = open_stream(config.embeddings_path);
        const EmbeddingTable emb = parse_embeddings(emb_in, filter);

        {
            std::ostringstream ss;
            ss << "label,columns,raw_bytes,compressed_bytes,ratio\n";
            for (std::size_t i = 0; i < sets.size(); ++i) {
                const JudgmentDataset ds = load_judgments(config, config.tasks[i]);
                const EmbeddingTable embc = emb.subset(ds.words);
                std::vector<int> cols = sets[i].indices;
                std::sort(cols.begin(), cols.end());
                const CompressionReport rep = compression_ratio(embc, cols);
                ss << labels[i] << ',' << cols.size() << ',' << rep.raw_bytes << ','
                   << rep.compressed_bytes << ',' << format_g(rep.ratio, 6) << '\n';
            }
            write_file(cross / "compression.csv", ss.str());
        }

        {
            // features never retained by any task, probed by activation sum
            std::vector<char> used(static_cast<std::size_t>(dims), 0);
            for (const auto& set : sets)
                for (int f : set.indices) used[static_cast<std::size_t>(f)] = 1;
            std::vector<int> never;
            for (int f = 0; f < dims; ++f)
                if (!used[static_cast<std::size_t>(f)]) never.push_back(f);
            std::ostringstream ss;
            ss << "rank,word\n";
            if (!never.empty()) {
                const EmbeddingTable emb_ann = emb.subset(ann.words);
                const int k = std::min(20, emb_ann.size());
                const auto words = top_activation_words(emb_ann, never, k);
                for (std::size_t i = 0; i < words.size(); ++i)
                    ss << (i + 1) << ',' << words[i] << '\n';
            }
            write_file(cross / "never_retained_top_words.csv", ss.str());
        }

        {
            // pivot the per-contrast discrepancy records into one table:
            // rows = domains, a t column and a significance flag per category
            const auto contrasts = group_contrasts(config);
            std::vector<std::string> domains;
            std::vector<std::vector<std::string>> columns;  // per contrast: t, sig per domain
            for (const auto& contrast : contrasts) {
                auto in = open_stream(cross / contrast.file_name);
                std::string line;
                std::getline(in, line);  // header written by this pipeline
                std::vector<std::string> doms, ts, sigs;
                while (std::getline(in, line)) {
                    if (trim(line).empty()) continue;
                    const auto fields = split(line, ',');
                    if (fields.size() != 9)
                        throw Error(ErrorKind::format,
                                    "malformed discrepancy row in '" + contrast.file_name + "'");
                    doms.push_back(fields[3]);
                    ts.push_back(fields[4]);
                    sigs.push_back(fields[7]);
                }
                if (domains.empty()) {
                    domains = doms;
                } else if (domains != doms) {
                    throw Error(ErrorKind::domain,
                                "discrepancy tables disagree on domain rows");
                }
                std::vector<std::string> col;
                for (std::size_t i = 0; i < doms.size(); ++i) {
                    col.push_back(ts[i]);
                    col.push_back(sigs[i]);
                }
                columns.push_back(std::move(col));
            }
            if (!contrasts.empty()) {
                std::ostringstream t3;
                t3 << "domain";
                for (const auto& contrast : contrasts)
                    t3 << ',' << contrast.column_label << "_t," << contrast.column_label
                       << "_significant";
                t3 << '\n';
                for (std::size_t r = 0; r < domains.size(); ++r) {
                    t3 << domains[r];
                    for (const auto& col : columns) t3 << ',' << col[2 * r] << ',' << col[2 * r + 1];
                    t3 << '\n';
                }
                write_file(cross / "table3.csv", t3.str());
            }
        }

        {
            // accuracy heatmaps and the clustering of per-dimension profiles
            std::vector<AccuracyProfile> p65, p14;
            for (std::size_t i = 0; i < config.tasks.size(); ++i) {
                p65.push_back(load_profile_dims(
                    task_dir(config, config.tasks[i]) / "profile_dims_65.csv", labels[i]));
                p14.push_back(load_profile_dims(
                    task_dir(config, config.tasks[i]) / "profile_dims_14.csv", labels[i]));
            }
            const auto heatmap = [&](const std::vector<AccuracyProfile>& ps) {
                std::ostringstream ss;
                ss << "label";
                for (const auto& d : ps[0].dims) ss << ',' << d;
                ss << '\n';
                for (const auto& pr : ps) {
                    ss << pr.label;
                    for (double r : pr.per_dim_r) ss << ',' << format_g(r, 6);
                    ss << '\n';
                }
                return ss.str();
            };
            write_file(cross / "profile_heatmap_65.csv", heatmap(p65));
            write_file(cross / "profile_heatmap_14.csv", heatmap(p14));

            // drop dimensions undefined in any profile before clustering
            std::vector<std::string> dropped;
            std::vector<AccuracyProfile> clean = p65;
            for (auto& pr : clean) {
                pr.per_dim_r.clear();
                pr.dims.clear();
            }
            for (std::size_t j = 0; j < p65[0].dims.size(); ++j) {
                bool finite = true;
                for (const auto& pr : p65)
                    if (std::isnan(pr.per_dim_r[j])) finite = false;
                if (!finite) {
                    dropped.push_back(p65[0].dims[j]);
                    continue;
                }
                for (std::size_t i = 0; i < p65.size(); ++i) {
                    clean[i].dims.push_back(p65[i].dims[j]);
                    clean[i].per_dim_r.push_back(p65[i].per_dim_r[j]);
                }
            }
            const Dendrogram tree = cluster_profiles(clean);
            std::string text;
            if (!dropped.empty()) {
                text += "# dropped undefined dims:";
                for (const auto& d : dropped) text += " " + d;
                text += "\n";
            }
            text += tree.to_text() + "\n";
            write_file(cross / "dendrogram.txt", text);
        }
    } catch (const Error& e) {
        stage_error("report", "", e);
    }
}

namespace {

nlohmann::json config_fingerprint(const RunConfig& config) {
    nlohmann::json j;
    j["embeddings"] = config.embeddings_path;
    j["annotations"] = config.annotations_path;
    j["domain_map"] = config.domain_map_path;
    nlohmann::json sources = nlohmann::json::array();
    for (const auto& src : config.judgments)
        sources.push_back({{"group", src.group}, {"category", src.category}, {"path", src.path}});
    j["judgments"] = sources;
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& task : config.tasks)
        tasks.push_back({{"group", task.group}, {"category", task.category}});
    j["tasks"] = tasks;
    j["cv"] = config.cv;
    j["random_draws"] = config.random_draws;
    j["seed"] = config.seed;
    j["cv_normalization"] =
        config.cv_normalization == CvNormalization::refit ? "refit" : "reuse_full";
    j["sd"] = config.sd == SdConvention::population ? "population" : "sample";
    j["n_components"] = config.n_components;
    j["scale_predictors"] = config.scale_predictors;
    j["alpha"] = config.alpha;
    j["two_sided"] = config.two_sided;
    j["correlation"] =
        config.profile_correlation == CorrelationKind::pearson ? "pearson" : "spearman";
    return j;
}

void write_manifest(const RunConfig& config, const std::string& status,
                    const std::string& failed_stage, const std::string& error) {
    nlohmann::json manifest;
    manifest["tool"] = std::string("lexalign ") + kVersion;
    manifest["status"] = status;
    manifest["config_hash"] = fnv1a64_hex(config_fingerprint(config).dump());
    manifest["seed"] = config.seed;
    if (!failed_stage.empty()) manifest["failed_stage"] = failed_stage;
    if (!error.empty()) manifest["error"] = error;

    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& task : config.tasks) tasks.push_back(task_label(task));
    manifest["tasks"] = tasks;

    std::vector<fs::path> files;
    if (fs::exists(out_root(config))) {
        for (const auto& entry : fs::recursive_directory_iterator(out_root(config))) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().filename() == "run_manifest.json") continue;
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : files) {
        const std::string rel = fs::relative(f, out_root(config)).generic_string();
        outputs.push_back({{"path", rel}, {"fnv1a64", fnv1a64_hex(read_file(f))}});
    }
    manifest["outputs"] = outputs;
    write_file(out_root(config) / "run_manifest.json", manifest.dump(2) + "\n");
}

}

void run(const RunConfig& config) {
    require_valid(config);

    std::string stage = "prune";
    try {
        run_prune_stage(config);
        stage = "probe";
        run_probe_stage(config);
        stage = "stats";
        run_stats_stage(config);
        stage = "report";
        run_report_stage(config);
    } catch (const Error& e) {
        write_manifest(config, "failed", stage, e.what());
        throw;
    }
    write_manifest(config, "ok", "", "");
}

}
