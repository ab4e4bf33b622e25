// Compares the OpenMP kernels against the serial reference implementations
// on synthetic data and reports timings plus the maximum result deviation
// (expected to be exactly zero).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "lexalign/corpus_io.hpp"
#include "lexalign/plsr.hpp"
#include "lexalign/pruning.hpp"
#include "lexalign/ref.hpp"
#include "lexalign/rng.hpp"
#include "lexalign/simkit.hpp"

using namespace lexalign;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

EmbeddingTable random_embedding(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> vocab;
    vocab.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vocab.push_back("w" + std::to_string(i));
    Matrix values(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j)
            values(i, j) = uniform01(rng) * 2.0 - 1.0;
    return EmbeddingTable(std::move(vocab), std::move(values));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::fabs(a(i, j) - b(i, j)));
    return m;
}

void report(const char* name, double serial_s, double parallel_s, double diff) {
    std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   max|diff| %g\n",
                name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, diff);
}

void bench_cosine() {
    const EmbeddingTable emb = random_embedding(400, 300, 11);
    const double t0 = now_seconds();
    const SimilarityMatrix serial = ref::cosine_matrix(emb);
    const double t1 = now_seconds();
    const SimilarityMatrix parallel = cosine_matrix(emb);
    const double t2 = now_seconds();
    report("cosine_matrix", t1 - t0, t2 - t1, max_abs_diff(serial.values, parallel.values));
}

void bench_rank_features() {
    const EmbeddingTable emb = random_embedding(15, 300, 23);
    std::mt19937_64 rng(29);
    SimilarityMatrix h = ref::cosine_matrix(emb);
    for (int i = 0; i < h.size(); ++i)
        for (int j = i + 1; j < h.size(); ++j) {
            const double v = h.values(i, j) + 0.05 * (uniform01(rng) - 0.5);
            h.values(i, j) = v;
            h.values(j, i) = v;
        }

    const double t0 = now_seconds();
    const std::vector<double> serial = ref::rank_features(emb, h);
    const double t1 = now_seconds();
    const std::vector<double> parallel = rank_features(emb, h);
    const double t2 = now_seconds();
    double diff = 0.0;
    for (std::size_t i = 0; i < serial.size(); ++i)
        diff = std::max(diff, std::fabs(serial[i] - parallel[i]));
    report("rank_features", t1 - t0, t2 - t1, diff);
}

void bench_loocv_stack() {
    const int n = 120, p = 40;
    const EmbeddingTable emb = random_embedding(n, 64, 37);

    AnnotationTable ann;
    ann.words = emb.vocab();
    for (int j = 0; j < kAnnotationDims; ++j) ann.dim_names.push_back("dim" + std::to_string(j));
    ann.values = Matrix(static_cast<std::size_t>(n), kAnnotationDims);
    std::mt19937_64 rng(41);
    Matrix map(64, kAnnotationDims);
    for (std::size_t i = 0; i < map.rows(); ++i)
        for (std::size_t j = 0; j < map.cols(); ++j) map(i, j) = uniform01(rng) - 0.5;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kAnnotationDims; ++j) {
            double s = 0.0;
            for (int f = 0; f < 64; ++f) s += emb.row(i)[static_cast<std::size_t>(f)] * map(f, j);
            ann.values(i, j) = std::fabs(s);
        }

    RetainedFeatureSet retained;
    retained.dims = 64;
    for (int f = 0; f < p; ++f) retained.indices.push_back(f);
    retained.scores.assign(static_cast<std::size_t>(p), 0.0);
    retained.prefix_rho.assign(static_cast<std::size_t>(p), 0.0);

    const double t0 = now_seconds();
    const PredictionMatrix serial = ref::loocv_stack(emb, retained, ann, 10);
    const double t1 = now_seconds();
    const PredictionMatrix parallel = loocv_stack(emb, retained, ann, 10);
    const double t2 = now_seconds();
    report("loocv_stack", t1 - t0, t2 - t1, max_abs_diff(serial.values, parallel.values));
}

}

int main() {
    bench_cosine();
    bench_rank_features();
    bench_loocv_stack();
    return 0;
}
