#ifndef LEXALIGN_STATS_HPP
#define LEXALIGN_STATS_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexalign/plsr.hpp"

namespace lexalign {

enum class CorrelationKind { pearson, spearman };

/// Per-dimension and per-word correlations between predictions and ground
/// truth. Undefined entries (constant predicted or true vector) are NaN and
/// excluded from aggregates.
struct AccuracyProfile {
    std::string label;
    std::vector<std::string> dims;
    std::vector<std::string> words;
    std::vector<double> per_dim_r;
    std::vector<double> per_word_r;
};

AccuracyProfile accuracy_profile(const PredictionMatrix& pm, std::string label,
                                 CorrelationKind kind = CorrelationKind::pearson);

void emit_profile_dims(const AccuracyProfile& profile, std::ostream& out);
void emit_profile_words(const AccuracyProfile& profile, std::ostream& out);

struct PairedT {
    double t = 0.0;
    int df = 0;
    double p = 1.0;
    bool degenerate = false;
};

/// Paired t-test on the differences a_i - b_i. All-zero differences give
/// t = 0; a non-zero constant difference (zero variance) is degenerate.
PairedT paired_t_test(std::span<const double> a, std::span<const double> b, bool two_sided);

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, int m);

struct DiscrepancyOptions {
    double alpha = 0.05;
    bool two_sided = true;
    std::string group_a;
    std::string group_b;
    std::string category;
};

struct DiscrepancyRecord {
    std::string domain;
    double t = 0.0;
    int df = 0;
    double p = 1.0;
    bool significant = false;
    bool degenerate = false;
};

struct DiscrepancyReport {
    std::string group_a;
    std::string group_b;
    std::string category;
    double alpha = 0.05;
    int contrasts = 0;
    std::vector<DiscrepancyRecord> records;
};

/// Per-domain paired t-tests on cell-wise absolute prediction errors.
/// Positive t means group B's errors are larger, i.e. group A predicts more
/// accurately. Bonferroni control uses the number of domains as m.
DiscrepancyReport discrepancy_test(const PredictionMatrix& pm_a, const PredictionMatrix& pm_b,
                                   const DiscrepancyOptions& opt = {});

void emit_discrepancy(const DiscrepancyReport& report, std::ostream& out);

struct Dendrogram {
    struct Merge {
        int left = 0;   // node ids: leaves are 0..n-1, merge j becomes n+j
        int right = 0;
        double height = 0.0;
    };
    std::vector<std::string> leaf_labels;
    std::vector<Merge> merges;

    std::string to_text() const;  // nested-list form with merge heights
};

enum class Linkage { average };

/// Agglomerative clustering of per-dimension accuracy vectors with
/// correlation distance (1 - Pearson). Merge order ties are broken by
/// lexicographic cluster label (smallest member label).
Dendrogram cluster_profiles(std::span<const AccuracyProfile> profiles,
                            Linkage linkage = Linkage::average);

}

#endif
