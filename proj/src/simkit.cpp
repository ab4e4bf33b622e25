#include "lexalign/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lexalign/error.hpp"
#include "lexalign/util.hpp"

namespace lexalign {

std::vector<double> SimilarityMatrix::upper() const {
    const int k = size();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k) * (k - 1) / 2);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) out.push_back(values(i, j));
    return out;
}

void emit_similarity(const SimilarityMatrix& sm, std::ostream& out) {
    out << "word";
    for (const auto& w : sm.words) out << ',' << w;
    out << '\n';
    for (int i = 0; i < sm.size(); ++i) {
        out << sm.words[static_cast<std::size_t>(i)];
        for (int j = 0; j < sm.size(); ++j) out << ',' << format_g(sm.values(i, j), 17);
        out << '\n';
    }
}

namespace {

void check_subset(const EmbeddingTable& emb, std::span<const int> subset) {
    if (subset.empty())
        throw Error(ErrorKind::domain, "feature subset must be non-empty");
    std::vector<bool> seen(static_cast<std::size_t>(emb.dims()), false);
    for (int f : subset) {
        if (f < 0 || f >= emb.dims())
            throw Error(ErrorKind::domain,
                        "feature index " + std::to_string(f) + " outside [0, " +
                            std::to_string(emb.dims()) + ")");
        if (seen[static_cast<std::size_t>(f)])
            throw Error(ErrorKind::domain,
                        "feature index " + std::to_string(f) + " listed twice in subset");
        seen[static_cast<std::size_t>(f)] = true;
    }
}

SimilarityMatrix cosine_impl(const EmbeddingTable& emb, std::span<const int> subset) {
    const int n = emb.size();
    std::vector<double> norms(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto r = emb.row(i);
        double s = 0.0;
        for (int f : subset) s += r[static_cast<std::size_t>(f)] * r[static_cast<std::size_t>(f)];
        if (s == 0.0)
            throw Error(ErrorKind::degenerate_vector,
                        "word '" + emb.vocab()[static_cast<std::size_t>(i)] +
                            "' has zero norm on the selected features");
        norms[static_cast<std::size_t>(i)] = std::sqrt(s);
    }

    SimilarityMatrix sm;
    sm.words = emb.vocab();
    sm.values = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sm.values(i, i) = 1.0;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto ri = emb.row(i);
        for (int j = i + 1; j < n; ++j) {
            const auto rj = emb.row(j);
            double d = 0.0;
            for (int f : subset)
                d += ri[static_cast<std::size_t>(f)] * rj[static_cast<std::size_t>(f)];
            const double v = d / (norms[static_cast<std::size_t>(i)] *
                                  norms[static_cast<std::size_t>(j)]);
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
    return cosine_impl(emb, all);
}

SimilarityMatrix cosine_matrix(const EmbeddingTable& emb, std::span<const int> feature_subset) {
    check_subset(emb, feature_subset);
    return cosine_impl(emb, feature_subset);
}

SimilarityMatrix group_similarity(const JudgmentDataset& ds, const GroupSimilarityOptions& opt) {
    const int k = ds.word_count();
    if (k < 2) throw Error(ErrorKind::domain, "judgment dataset has fewer than 2 words");
    if (ds.participants.empty())
        throw Error(ErrorKind::domain, "judgment dataset has no participants");

    SimilarityMatrix sm;
    sm.words = ds.words;
    sm.values = Matrix(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    Matrix counts(static_cast<std::size_t>(k), static_cast<std::size_t>(k));

    for (const auto& p : ds.participants) {
        if (p.ratings.size() < 2)
            throw Error(ErrorKind::degenerate_participant,
                        "participant '" + p.id + "' has fewer than 2 rated pairs");
        double sum = 0.0;
        for (const auto& [pair, r] : p.ratings) sum += r;
        const double n = static_cast<double>(p.ratings.size());
        const double mean = sum / n;
        double ss = 0.0;
        bool distinct = false;
        for (const auto& [pair, r] : p.ratings) {
            ss += (r - mean) * (r - mean);
            if (r != p.ratings.begin()->second) distinct = true;
        }
        if (!distinct)
            throw Error(ErrorKind::degenerate_participant,
                        "participant '" + p.id + "' gave a constant rating");
        const double denom = opt.sd == SdConvention::population ? n : n - 1.0;
        const double sd = std::sqrt(ss / denom);
        for (const auto& [pair, r] : p.ratings) {
            const double z = (r - mean) / sd;
            sm.values(pair.first, pair.second) += z;
            counts(pair.first, pair.second) += 1.0;
        }
    }

    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            if (counts(i, j) == 0.0)
                throw Error(ErrorKind::domain, "pair (" + sm.words[static_cast<std::size_t>(i)] +
                                                   ", " + sm.words[static_cast<std::size_t>(j)] +
                                                   ") was rated by no participant");
            const double v = sm.values(i, j) / counts(i, j);
            sm.values(i, j) = v;
            sm.values(j, i) = v;
        }
    }
    return sm;
}

std::vector<double> fractional_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // positions i..j (0-based) share the average rank
        const double r = static_cast<double>(i + 1) + 0.5 * static_cast<double>(j - i);
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::domain, "pearson: vectors differ in length");
    const std::size_t n = a.size();
    if (n < 3) throw Error(ErrorKind::domain, "pearson: need at least 3 observations");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw Error(ErrorKind::undefined_correlation,
                    "correlation undefined for a constant vector");
    return sab / std::sqrt(saa * sbb);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::domain, "spearman: vectors differ in length");
    if (a.size() < 3) throw Error(ErrorKind::domain, "spearman: need at least 3 observations");
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    return pearson(ra, rb);
}

double alignment(const SimilarityMatrix& z, const SimilarityMatrix& h) {
    if (z.words != h.words)
        throw Error(ErrorKind::alignment_domain,
                    "similarity matrices cover different word lists");
    const auto uz = z.upper();
    const auto uh = h.upper();
    return spearman(uz, uh);
}

}
