#ifndef LEXALIGN_SIMKIT_HPP
#define LEXALIGN_SIMKIT_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/matrix.hpp"

namespace lexalign {

enum class SdConvention { population, sample };

/// Symmetric word-by-word similarity matrix. `upper()` flattens the strict
/// upper triangle row-major; that vector is what alignment correlates.
struct SimilarityMatrix {
    std::vector<std::string> words;
    Matrix values;

    int size() const noexcept { return static_cast<int>(words.size()); }
    std::vector<double> upper() const;
};

void emit_similarity(const SimilarityMatrix& sm, std::ostream& out);

/// Pairwise cosine similarity over all features.
SimilarityMatrix cosine_matrix(const EmbeddingTable& emb);

/// Pairwise cosine similarity over a column subset. The subset is iterated in
/// the order given, which fixes the accumulation order bit-for-bit.
SimilarityMatrix cosine_matrix(const EmbeddingTable& emb, std::span<const int> feature_subset);

struct GroupSimilarityOptions {
    SdConvention sd = SdConvention::population;
};

/// Per-participant z-scored ratings averaged into a group matrix. Each
/// participant is standardized over their own available pairs; absent pairs
/// are excluded from that participant's statistics. Diagonal is 0 by
/// convention and never used downstream.
SimilarityMatrix group_similarity(const JudgmentDataset& ds,
                                  const GroupSimilarityOptions& opt = {});

/// 1-based fractional ranks; ties get the average of their rank positions.
std::vector<double> fractional_ranks(std::span<const double> v);

double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman's rho: Pearson correlation of fractional rank vectors.
double spearman(std::span<const double> a, std::span<const double> b);

/// spearman over the upper triangles; word lists must match exactly.
double alignment(const SimilarityMatrix& z, const SimilarityMatrix& h);

}

#endif
