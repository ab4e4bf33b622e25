#ifndef LEXALIGN_SETANALYSIS_HPP
#define LEXALIGN_SETANALYSIS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/matrix.hpp"
#include "lexalign/pruning.hpp"

namespace lexalign {

/// Size-matched Dice coefficient: the larger set is truncated to its
/// top-ranked n features (n = size of the smaller set) before overlap.
double dice(const RetainedFeatureSet& u, const RetainedFeatureSet& v);

struct DiceMatrix {
    std::vector<std::string> labels;
    Matrix values;
};

DiceMatrix dice_matrix(std::span<const RetainedFeatureSet> sets,
                       std::span<const std::string> labels);
void emit_dice(const DiceMatrix& dm, std::ostream& out);

/// counts[c] = number of features appearing in exactly c of the sets,
/// for c in 0..sets.size(); buckets sum to dims.
std::vector<std::int64_t> frequency_histogram(std::span<const RetainedFeatureSet> sets, int dims);

struct CompressionReport {
    std::size_t raw_bytes = 0;
    std::size_t compressed_bytes = 0;
    double ratio = 0.0;
};

/// Serializes the column-restricted embedding in the canonical text form
/// (6 significant digits) and deflates it with zlib at level 6; the ratio is
/// compressed over raw bytes.
CompressionReport compression_ratio(const EmbeddingTable& emb, std::span<const int> feature_subset);

/// The k words with the highest value sum over `features`, score-descending
/// with alphabetical tie-break.
std::vector<std::string> top_activation_words(const EmbeddingTable& emb,
                                              std::span<const int> features, int k);

}

#endif
