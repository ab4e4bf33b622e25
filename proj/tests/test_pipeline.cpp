#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lexalign/pipeline.hpp"
#include "lexalign/util.hpp"

using namespace lexalign;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = LEXALIGN_FIXTURE_DIR;

RunConfig fixture_config(const std::string& out_name) {
    RunConfig config = load_config((kFixtures / "config.json").string());
    const fs::path out = fs::temp_directory_path() / "lexalign_tests" / out_name;
    fs::remove_all(out);
    config.output_dir = out.string();
    return config;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[fs::relative(entry.path(), root).generic_string()] = slurp(entry.path());
    }
    return out;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}

TEST_CASE("the bundled fixture runs end to end with the expected artifacts") {
    const RunConfig config = fixture_config("full");
    run(config);
    const fs::path out = config.output_dir;

    const std::vector<std::string> tasks{"north_shine", "south_shine", "north_touch",
                                         "south_touch"};
    for (const auto& task : tasks) {
        CHECK(fs::exists(out / task / "retained.csv"));
        CHECK(fs::exists(out / task / "cv_folds.csv"));
        CHECK(fs::exists(out / task / "lsm65.csv"));
        CHECK(fs::exists(out / task / "lsm14.csv"));
        CHECK(fs::exists(out / task / "profile_dims_65.csv"));
        CHECK(fs::exists(out / task / "profile_words_65.csv"));
        // 65 dimension rows plus the header
        CHECK(count_lines(slurp(out / task / "profile_dims_65.csv")) == 66);
    }

    const std::string dice = slurp(out / "cross" / "dice.csv");
    CHECK(count_lines(dice) == 5);  // header + 4 rows

    CHECK(fs::exists(out / "cross" / "discrepancy_shine_north_vs_south.csv"));
    CHECK(fs::exists(out / "cross" / "discrepancy_touch_north_vs_south.csv"));
    CHECK(count_lines(slurp(out / "cross" / "discrepancy_shine_north_vs_south.csv")) == 15);
    CHECK(fs::exists(out / "cross" / "feature_frequency.csv"));
    CHECK(fs::exists(out / "cross" / "compression.csv"));
    CHECK(fs::exists(out / "cross" / "table1.csv"));
    CHECK(fs::exists(out / "cross" / "table2.csv"));
    CHECK(fs::exists(out / "cross" / "dendrogram.txt"));
    CHECK(fs::exists(out / "run_manifest.json"));

    // pivoted per-domain contrast table: header plus one row per domain
    const std::string t3 = slurp(out / "cross" / "table3.csv");
    CHECK(t3.rfind("domain,shine_t,shine_significant,touch_t,touch_significant\n", 0) == 0);
    CHECK(count_lines(t3) == 15);
}

TEST_CASE("identical seed and config give byte-identical output trees") {
    const RunConfig a = fixture_config("det_a");
    const RunConfig b = fixture_config("det_b");
    run(a);
    run(b);
    CHECK(tree_contents(a.output_dir) == tree_contents(b.output_dir));
}

TEST_CASE("worker count does not change the outputs") {
    RunConfig a = fixture_config("jobs1");
    a.jobs = 1;
    RunConfig b = fixture_config("jobs4");
    b.jobs = 4;
    run(a);
    run(b);
    CHECK(tree_contents(a.output_dir) == tree_contents(b.output_dir));
}

TEST_CASE("a missing input file fails validation before any compute") {
    RunConfig config = fixture_config("missing");
    config.embeddings_path = (kFixtures / "no_such_file.txt").string();
    const auto issues = validate(config);
    REQUIRE(!issues.empty());
    CHECK(issues[0].find("no_such_file") != std::string::npos);
    try {
        run(config);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }
    CHECK(!fs::exists(config.output_dir));
}

TEST_CASE("validate aggregates option-range and coverage problems") {
    RunConfig config = fixture_config("validate");
    config.alpha = 1.5;
    config.tasks.push_back({"north", "unknown_category"});
    config.has_seed = false;
    const auto issues = validate(config);
    bool saw_alpha = false, saw_coverage = false, saw_seed = false;
    for (const auto& issue : issues) {
        if (issue.find("alpha") != std::string::npos) saw_alpha = true;
        if (issue.find("unknown_category") != std::string::npos) saw_coverage = true;
        if (issue.find("seed") != std::string::npos) saw_seed = true;
    }
    CHECK(saw_alpha);
    CHECK(saw_coverage);
    CHECK(saw_seed);
}

TEST_CASE("a well-formed config validates cleanly") {
    const RunConfig config = fixture_config("clean");
    CHECK(validate(config).empty());
}

TEST_CASE("removing a task leaves the remaining task outputs unchanged") {
    const RunConfig full = fixture_config("iso_full");
    run(full);
    RunConfig reduced = fixture_config("iso_reduced");
    reduced.tasks.pop_back();
    run(reduced);
    for (const auto& task : reduced.tasks) {
        const fs::path a = fs::path(full.output_dir) / task_label(task);
        const fs::path b = fs::path(reduced.output_dir) / task_label(task);
        CHECK(tree_contents(a) == tree_contents(b));
    }
}

TEST_CASE("the manifest checksums match the emitted files") {
    const RunConfig config = fixture_config("manifest");
    run(config);
    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(fs::path(config.output_dir) / "run_manifest.json"));
    CHECK(manifest.at("status") == "ok");
    CHECK(manifest.at("tasks").size() == 4);
    const auto outputs = manifest.at("outputs");
    CHECK(outputs.size() > 20);
    for (const auto& entry : outputs) {
        const std::string rel = entry.at("path").get<std::string>();
        const std::string body = slurp(fs::path(config.output_dir) / rel);
        CHECK(entry.at("fnv1a64").get<std::string>() == fnv1a64_hex(body));
    }
}

TEST_CASE("a runtime failure leaves partial outputs and a FAILED manifest") {
    RunConfig config = fixture_config("failed");
    // annotations file that exists (passes validation) but cannot be parsed
    const fs::path bogus = fs::temp_directory_path() / "lexalign_tests" / "bogus_annotations.csv";
    fs::create_directories(bogus.parent_path());
    std::ofstream(bogus) << "word,only_one_dim\nfoo,1\n";
    config.annotations_path = bogus.string();
    try {
        run(config);
        FAIL("expected a runtime error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find("stage probe") != std::string::npos);
    }
    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(fs::path(config.output_dir) / "run_manifest.json"));
    CHECK(manifest.at("status") == "failed");
    CHECK(manifest.at("failed_stage") == "probe");
    // pruning artifacts were already written
    CHECK(fs::exists(fs::path(config.output_dir) / "north_shine" / "retained.csv"));
}

TEST_CASE("report regenerates cross tables from stored artifacts") {
    const RunConfig config = fixture_config("regen");
    run(config);
    const fs::path dice = fs::path(config.output_dir) / "cross" / "dice.csv";
    const std::string before = slurp(dice);
    fs::remove(dice);
    run_report_stage(config);
    CHECK(slurp(dice) == before);
}

TEST_CASE("staged execution reproduces the full run") {
    const RunConfig full = fixture_config("staged_ref");
    run(full);
    const RunConfig staged = fixture_config("staged");
    run_prune_stage(staged);
    run_probe_stage(staged);
    run_stats_stage(staged);
    run_report_stage(staged);
    auto a = tree_contents(full.output_dir);
    auto b = tree_contents(staged.output_dir);
    a.erase("run_manifest.json");  // staged subcommands do not write the manifest
    CHECK(a == b);
}

TEST_CASE("config loading resolves paths relative to the config file") {
    const RunConfig config = load_config((kFixtures / "config.json").string());
    CHECK(fs::path(config.embeddings_path).is_absolute());
    CHECK(fs::exists(config.embeddings_path));
    CHECK(config.judgments.size() == 4);
    CHECK(config.tasks.size() == 4);
    CHECK(config.cv);
    CHECK(config.has_seed);
    CHECK(config.seed == 42);
    CHECK(config.n_components == 8);
}
