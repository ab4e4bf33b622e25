#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "lexalign/rng.hpp"
#include "lexalign/setanalysis.hpp"
#include "oracles.hpp"

using namespace lexalign;

namespace {

RetainedFeatureSet make_set(std::vector<int> indices, int dims) {
    RetainedFeatureSet set;
    set.indices = std::move(indices);
    set.dims = dims;
    set.scores.assign(set.indices.size(), 0.0);
    set.prefix_rho.assign(set.indices.size(), 0.0);
    return set;
}

}

TEST_CASE("dice of a set with itself is 1") {
    const auto u = make_set({3, 1, 4}, 10);
    CHECK(dice(u, u) == 1.0);
}

TEST_CASE("dice of disjoint equal-size sets is 0") {
    const auto u = make_set({0, 1, 2}, 10);
    const auto v = make_set({3, 4, 5}, 10);
    CHECK(dice(u, v) == 0.0);
}

TEST_CASE("dice truncates the larger set to its top-ranked features") {
    // hand evaluation: [3,1,4,9] truncated to [3,1]; overlap with {1,3} is full
    const auto u = make_set({3, 1, 4, 9}, 16);
    const auto v = make_set({1, 3}, 16);
    CHECK(dice(u, v) == 1.0);
    CHECK(dice(v, u) == 1.0);
}

TEST_CASE("dice is symmetric after size-matching") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 12;
        const int su = 1 + static_cast<int>(rng() % 8);
        const int sv = 1 + static_cast<int>(rng() % 8);
        const auto u = make_set(lexalign::sample_indices(rng, d, su), d);
        const auto v = make_set(lexalign::sample_indices(rng, d, sv), d);
        CHECK(dice(u, v) == dice(v, u));
        CHECK(dice(u, u) == 1.0);
        CHECK(dice(u, v) >= 0.0);
        CHECK(dice(u, v) <= 1.0);
    }
}

TEST_CASE("dice requires matching feature spaces") {
    const auto u = make_set({0}, 10);
    const auto v = make_set({0}, 12);
    CHECK_THROWS_AS(dice(u, v), Error);
}

TEST_CASE("dice_matrix is symmetric with unit diagonal") {
    std::vector<RetainedFeatureSet> sets{make_set({0, 1, 2}, 8), make_set({2, 3}, 8),
                                         make_set({5, 6, 7, 0}, 8)};
    const std::vector<std::string> labels{"a", "b", "c"};
    const DiceMatrix dm = dice_matrix(sets, labels);
    for (int i = 0; i < 3; ++i) {
        CHECK(dm.values(i, i) == 1.0);
        for (int j = 0; j < 3; ++j) CHECK(dm.values(i, j) == dm.values(j, i));
    }
    CHECK(dm.values(0, 1) == dice(sets[0], sets[1]));
}

TEST_CASE("frequency_histogram counts appearances and sums to dims") {
    std::vector<RetainedFeatureSet> identical;
    for (int i = 0; i < 14; ++i) identical.push_back(make_set({7}, 300));
    auto counts = frequency_histogram(identical, 300);
    CHECK(counts.size() == 15);
    CHECK(counts[0] == 299);
    CHECK(counts[14] == 1);
    for (std::size_t c = 1; c < 14; ++c) CHECK(counts[c] == 0);

    std::vector<RetainedFeatureSet> disjoint{make_set({0, 1, 2}, 10), make_set({3, 4, 5}, 10)};
    counts = frequency_histogram(disjoint, 10);
    CHECK(counts == std::vector<std::int64_t>{4, 6, 0});
}

TEST_CASE("frequency_histogram buckets always sum to dims") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 20;
        std::vector<RetainedFeatureSet> sets;
        const int n = 2 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i)
            sets.push_back(make_set(
                lexalign::sample_indices(rng, d, 1 + static_cast<int>(rng() % d)), d));
        const auto counts = frequency_histogram(sets, d);
        CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == d);
    }
}

TEST_CASE("frequency_histogram rejects mixed dimensionality") {
    std::vector<RetainedFeatureSet> sets{make_set({0}, 10), make_set({0}, 12)};
    CHECK_THROWS_AS(frequency_histogram(sets, 10), Error);
}

TEST_CASE("all-zero matrices compress to the recorded golden ratio") {
    std::vector<std::string> vocab;
    for (int i = 0; i < 100; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "word%03d", i);
        vocab.push_back(buf);
    }
    const EmbeddingTable emb(vocab, Matrix(100, 10, 0.0));
    std::vector<int> all(10);
    std::iota(all.begin(), all.end(), 0);
    const CompressionReport rep = compression_ratio(emb, all);
    CHECK(rep.raw_bytes == 2800);
    // golden value for zlib level 6 on this serialization
    CHECK(rep.compressed_bytes == 239);
    CHECK(rep.ratio == doctest::Approx(0.085357142857142854).epsilon(1e-15));
    CHECK(rep.ratio < 0.1);
}

TEST_CASE("random matrices compress worse than constant ones") {
    const EmbeddingTable noise = oracle::random_embedding(100, 10, 77);
    std::vector<int> all(10);
    std::iota(all.begin(), all.end(), 0);
    const CompressionReport r_noise = compression_ratio(noise, all);

    std::vector<std::string> vocab = noise.vocab();
    const EmbeddingTable zeros(vocab, Matrix(100, 10, 0.0));
    const CompressionReport r_zero = compression_ratio(zeros, all);
    CHECK(r_noise.ratio > r_zero.ratio);
    CHECK(r_noise.ratio > 0.3);
}

TEST_CASE("compression ratio is deterministic") {
    const EmbeddingTable emb = oracle::random_embedding(40, 8, 91);
    const std::vector<int> subset{1, 3, 5};
    const CompressionReport a = compression_ratio(emb, subset);
    const CompressionReport b = compression_ratio(emb, subset);
    CHECK(a.ratio == b.ratio);
    CHECK(a.compressed_bytes == b.compressed_bytes);
}

TEST_CASE("top_activation_words picks the maximal coordinate for one feature") {
    Matrix m(3, 2);
    m(0, 0) = 0.2;
    m(1, 0) = 5.0;
    m(2, 0) = -1.0;
    m(0, 1) = 9.0;
    m(1, 1) = 0.0;
    m(2, 1) = 0.0;
    const EmbeddingTable emb({"ant", "bee", "cat"}, m);
    const std::vector<int> f0{0};
    CHECK(top_activation_words(emb, f0, 1) == std::vector<std::string>{"bee"});
}

TEST_CASE("top_activation_words breaks equal sums alphabetically") {
    Matrix m(3, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 1.0;  // sums 2
    m(1, 0) = 2.0;
    m(1, 1) = 0.0;  // sums 2
    m(2, 0) = 0.0;
    m(2, 1) = 0.0;  // sums 0
    const EmbeddingTable emb({"moth", "ant", "wasp"}, m);
    const std::vector<int> all{0, 1};
    CHECK(top_activation_words(emb, all, 2) == std::vector<std::string>{"ant", "moth"});
}

TEST_CASE("top_activation_words validates k") {
    const EmbeddingTable emb = oracle::random_embedding(4, 3, 17);
    const std::vector<int> f{0};
    CHECK_THROWS_AS(top_activation_words(emb, f, 5), Error);
    CHECK_THROWS_AS(top_activation_words(emb, f, 0), Error);
}
