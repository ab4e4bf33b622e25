#ifndef LEXALIGN_PRUNING_HPP
#define LEXALIGN_PRUNING_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/simkit.hpp"

namespace lexalign {

/// Feature subset kept by pruning, ordered by descending importance.
struct RetainedFeatureSet {
    std::vector<int> indices;      // importance-descending feature indices
    std::vector<double> scores;    // importance D per retained feature
    std::vector<double> prefix_rho;  // alignment at each prefix; NaN = skipped size
    double achieved_rho = 0.0;     // alignment of the retained prefix
    double baseline_rho = 0.0;     // alignment with all features
    int dims = 0;
    std::string category_label;
    std::string group_label;
    std::vector<int> skipped_prefix_sizes;  // diagnostic: degenerate prefix sizes

    int size() const noexcept { return static_cast<int>(indices.size()); }
};

/// Importance of each feature: alignment with all features minus alignment
/// with that feature removed. Higher is more important.
std::vector<double> rank_features(const EmbeddingTable& emb, const SimilarityMatrix& h);

/// Indices sorted by descending importance; ties broken by lower index.
std::vector<int> rank_order(std::span<const double> importance);

/// Ranks features, then keeps the importance-ordered prefix that maximizes
/// alignment with `h` (earliest prefix on exact ties). Prefix sizes on which
/// some word has zero norm are skipped and recorded.
RetainedFeatureSet prune(const EmbeddingTable& emb, const SimilarityMatrix& h);

/// Record stream `rank,feature_index,D,cumulative_rho`.
void emit_retained(const RetainedFeatureSet& set, std::ostream& out);
RetainedFeatureSet parse_retained(std::istream& in, int dims);

enum class CvNormalization { refit, reuse_full };

struct PruneCvOptions {
    int random_draws = 100;
    std::uint64_t seed = 0;
    CvNormalization normalization = CvNormalization::refit;
    SdConvention sd = SdConvention::population;
};

struct PruneCvFold {
    std::string target_word;
    double base_rho = 0.0;
    double retained_rho = 0.0;
    double random_rho = 0.0;
    int retained_size = 0;
};

struct PruneCvReport {
    std::vector<PruneCvFold> folds;
    double base_mean = 0.0;
    double retained_mean = 0.0;
    double random_mean = 0.0;
    double size_mean = 0.0;
    std::string category_label;
    std::string group_label;
};

/// Leave-one-word-out evaluation of pruning. Each fold holds out the pairs
/// containing one target word, reprunes on the remaining sub-matrix, and
/// scores full, retained, and size-matched random feature sets on the
/// held-out pairs.
PruneCvReport prune_cv(const EmbeddingTable& emb, const JudgmentDataset& ds,
                       const PruneCvOptions& opt);

void emit_prune_cv(const PruneCvReport& report, std::ostream& out);

/// Mean of `score` over `draws` uniform feature subsets of the given size,
/// drawn without replacement; deterministic for a fixed seed.
double random_baseline(int dims, int size, int draws, std::uint64_t seed,
                       const std::function<double(std::span<const int>)>& score);

}

#endif
