#include "lexalign/ref.hpp"

#include <cmath>
#include <numeric>

#include "lexalign/error.hpp"

namespace lexalign::ref {

namespace {

SimilarityMatrix cosine_serial(const EmbeddingTable& emb, std::span<const int> subset) {
    const int n = emb.size();
    SimilarityMatrix sm;
    sm.words = emb.vocab();
    sm.values = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sm.values(i, i) = 1.0;
    for (int i = 0; i < n; ++i) {
        const auto ri = emb.row(i);
        for (int j = i + 1; j < n; ++j) {
            const auto rj = emb.row(j);
            double d = 0.0, na = 0.0, nb = 0.0;
            for (int f : subset) {
                const auto fi = static_cast<std::size_t>(f);
                d += ri[fi] * rj[fi];
                na += ri[fi] * ri[fi];
                nb += rj[fi] * rj[fi];
            }
            if (na == 0.0)
                throw Error(ErrorKind::degenerate_vector,
                            "word '" + emb.vocab()[static_cast<std::size_t>(i)] +
                                "' has zero norm on the selected features");
            if (nb == 0.0)
                throw Error(ErrorKind::degenerate_vector,
                            "word '" + emb.vocab()[static_cast<std::size_t>(j)] +
                                "' has zero norm on the selected features");
            const double v = d / (std::sqrt(na) * std::sqrt(nb));
            sm.values(i, j) = v;
            sm.values(j, i) = v;
        }
    }
    return sm;
}

}

SimilarityMatrix cosine_matrix(const EmbeddingTable& emb) {
    std::vector<int> all(static_cast<std::size_t>(emb.dims()));
    std::iota(all.begin(), all.end(), 0);
    return cosine_serial(emb, all);
}

SimilarityMatrix cosine_matrix(const EmbeddingTable& emb, std::span<const int> feature_subset) {
    return cosine_serial(emb, feature_subset);
}

std::vector<double> rank_features(const EmbeddingTable& emb, const SimilarityMatrix& h) {
    const int d = emb.dims();
    const SimilarityMatrix full = ref::cosine_matrix(emb);
    const double rho_full = alignment(full, h);
    std::vector<double> importance(static_cast<std::size_t>(d));
    for (int f = 0; f < d; ++f) {
        std::vector<int> subset;
        subset.reserve(static_cast<std::size_t>(d) - 1);
        for (int g = 0; g < d; ++g)
            if (g != f) subset.push_back(g);
        const SimilarityMatrix reduced = ref::cosine_matrix(emb, subset);
        importance[static_cast<std::size_t>(f)] = rho_full - alignment(reduced, h);
    }
    return importance;
}

PredictionMatrix loocv_stack(const EmbeddingTable& emb, const RetainedFeatureSet& retained,
                             const AnnotationTable& ann, int n_components,
                             const PlsrOptions& opt) {
    const EmbeddingTable sub = emb.subset(ann.words);
    const int n = ann.word_count();
    const std::size_t p = retained.indices.size();
    Matrix x(static_cast<std::size_t>(n), p);
    for (int i = 0; i < n; ++i) {
        const auto r = sub.row(i);
        for (std::size_t j = 0; j < p; ++j)
            x(static_cast<std::size_t>(i), j) = r[static_cast<std::size_t>(retained.indices[j])];
    }

    PredictionMatrix pm;
    pm.words = ann.words;
    pm.dims = ann.dim_names;
    pm.ground_truth = ann.values;
    pm.values = Matrix(static_cast<std::size_t>(n), ann.values.cols());

    for (int w = 0; w < n; ++w) {
        Matrix x_train(static_cast<std::size_t>(n) - 1, p);
        Matrix y_train(static_cast<std::size_t>(n) - 1, ann.values.cols());
        std::size_t r = 0;
        for (int i = 0; i < n; ++i) {
            if (i == w) continue;
            std::copy(x.row(static_cast<std::size_t>(i)).begin(),
                      x.row(static_cast<std::size_t>(i)).end(), x_train.row(r).begin());
            std::copy(ann.values.row(static_cast<std::size_t>(i)).begin(),
                      ann.values.row(static_cast<std::size_t>(i)).end(), y_train.row(r).begin());
            ++r;
        }
        const PlsrModel model = plsr_fit(x_train, y_train, n_components, opt);
        const auto pred = plsr_predict_row(model, x.row(static_cast<std::size_t>(w)));
        std::copy(pred.begin(), pred.end(), pm.values.row(static_cast<std::size_t>(w)).begin());
    }
    return pm;
}

}
