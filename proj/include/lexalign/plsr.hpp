#ifndef LEXALIGN_PLSR_HPP
#define LEXALIGN_PLSR_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/matrix.hpp"
#include "lexalign/pruning.hpp"

namespace lexalign {

struct PlsrOptions {
    bool scale_predictors = true;
    double tol = 1e-10;  // NIPALS inner-loop convergence on the weight vector
    int max_iter = 500;
};

/// Partial least squares regression model (NIPALS, regression deflation).
/// Predictors are centered and optionally scaled to unit variance; targets
/// are centered only.
struct PlsrModel {
    int n_components = 0;  // components actually extracted
    std::vector<double> x_mean;
    std::vector<double> x_scale;
    std::vector<double> y_mean;
    Matrix x_weights;   // p x K
    Matrix x_loadings;  // p x K
    Matrix y_loadings;  // m x K
    Matrix x_scores;    // n x K, mutually orthogonal latent scores
    Matrix coef;        // p x m, applied to centered/scaled predictors

    int predictors() const noexcept { return static_cast<int>(x_mean.size()); }
    int targets() const noexcept { return static_cast<int>(y_mean.size()); }
};

PlsrModel plsr_fit(const Matrix& x, const Matrix& y, int n_components,
                   const PlsrOptions& opt = {});

Matrix plsr_predict(const PlsrModel& model, const Matrix& x_new);
std::vector<double> plsr_predict_row(const PlsrModel& model, std::span<const double> x_row);

/// Stacked leave-one-out predictions: row w is predicted by a model fit on
/// every word except w.
struct PredictionMatrix {
    std::vector<std::string> words;
    std::vector<std::string> dims;
    Matrix values;
    Matrix ground_truth;

    int word_count() const noexcept { return static_cast<int>(words.size()); }
    int dim_count() const noexcept { return static_cast<int>(dims.size()); }
};

PredictionMatrix loocv_stack(const EmbeddingTable& emb, const RetainedFeatureSet& retained,
                             const AnnotationTable& ann, int n_components,
                             const PlsrOptions& opt = {});

/// Averages dimension columns into their domains (values and ground truth).
PredictionMatrix condense_domains(const PredictionMatrix& pm, const DomainMap& map);

void emit_predictions(const PredictionMatrix& pm, std::ostream& values_out);
void emit_ground_truth(const PredictionMatrix& pm, std::ostream& truth_out);
PredictionMatrix parse_predictions(std::istream& values_in, std::istream& truth_in);

}

#endif
