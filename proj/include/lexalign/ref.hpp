#ifndef LEXALIGN_REF_HPP
#define LEXALIGN_REF_HPP

#include <span>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/plsr.hpp"
#include "lexalign/pruning.hpp"
#include "lexalign/simkit.hpp"

// Straightforward single-threaded kernels. Kept as the comparison baseline
// for the OpenMP implementations: tests assert bit-identical results and the
// benchmark tool reports the speedup.
namespace lexalign::ref {

SimilarityMatrix cosine_matrix(const EmbeddingTable& emb);
SimilarityMatrix cosine_matrix(const EmbeddingTable& emb, std::span<const int> feature_subset);

std::vector<double> rank_features(const EmbeddingTable& emb, const SimilarityMatrix& h);

PredictionMatrix loocv_stack(const EmbeddingTable& emb, const RetainedFeatureSet& retained,
                             const AnnotationTable& ann, int n_components,
                             const PlsrOptions& opt = {});

}

#endif
