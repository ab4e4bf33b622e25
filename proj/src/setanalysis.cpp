#include "lexalign/setanalysis.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>

#include <zlib.h>

#include "lexalign/error.hpp"
#include "lexalign/util.hpp"

namespace lexalign {

double dice(const RetainedFeatureSet& u, const RetainedFeatureSet& v) {
    if (u.indices.empty() || v.indices.empty())
        throw Error(ErrorKind::domain, "dice requires non-empty feature sets");
    if (u.dims != v.dims)
        throw Error(ErrorKind::domain, "dice requires sets over the same feature space");
    const std::size_t n = std::min(u.indices.size(), v.indices.size());
    const std::set<int> a(u.indices.begin(), u.indices.begin() + n);
    const std::set<int> b(v.indices.begin(), v.indices.begin() + n);
    std::size_t inter = 0;
    for (int f : a) inter += b.count(f);
    return 2.0 * static_cast<double>(inter) / static_cast<double>(2 * n);
}

DiceMatrix dice_matrix(std::span<const RetainedFeatureSet> sets,
                       std::span<const std::string> labels) {
    if (sets.size() != labels.size())
        throw Error(ErrorKind::domain, "dice matrix: label count does not match set count");
    DiceMatrix dm;
    dm.labels.assign(labels.begin(), labels.end());
    const int n = static_cast<int>(sets.size());
    dm.values = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) dm.values(i, i) = 1.0;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = dice(sets[static_cast<std::size_t>(i)],
                                  sets[static_cast<std::size_t>(j)]);
            dm.values(i, j) = v;
            dm.values(j, i) = v;
        }
    }
    return dm;
}

void emit_dice(const DiceMatrix& dm, std::ostream& out) {
    out << "label";
    for (const auto& l : dm.labels) out << ',' << l;
    out << '\n';
    for (std::size_t i = 0; i < dm.labels.size(); ++i) {
        out << dm.labels[i];
        for (std::size_t j = 0; j < dm.labels.size(); ++j)
            out << ',' << format_g(dm.values(i, j), 6);
        out << '\n';
    }
}

std::vector<std::int64_t> frequency_histogram(std::span<const RetainedFeatureSet> sets,
                                              int dims) {
    if (dims < 1) throw Error(ErrorKind::domain, "frequency histogram needs dims >= 1");
    std::vector<int> appearances(static_cast<std::size_t>(dims), 0);
    for (const auto& set : sets) {
        if (set.dims != dims)
            throw Error(ErrorKind::domain,
                        "frequency histogram: set over " + std::to_string(set.dims) +
                            " features, expected " + std::to_string(dims));
        for (int f : set.indices) ++appearances[static_cast<std::size_t>(f)];
    }
    std::vector<std::int64_t> counts(sets.size() + 1, 0);
    for (int a : appearances) ++counts[static_cast<std::size_t>(a)];
    return counts;
}

CompressionReport compression_ratio(const EmbeddingTable& emb,
                                    std::span<const int> feature_subset) {
    if (feature_subset.empty())
        throw Error(ErrorKind::domain, "compression ratio requires a non-empty feature subset");
    std::ostringstream text;
    emit_embeddings(emb, feature_subset, text);
    const std::string raw = text.str();

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> buf(bound);
    const int rc = compress2(buf.data(), &bound,
                             reinterpret_cast<const unsigned char*>(raw.data()),
                             static_cast<uLong>(raw.size()), 6);
    if (rc != Z_OK) throw Error(ErrorKind::io, "zlib compression failed");

    CompressionReport report;
    report.raw_bytes = raw.size();
    report.compressed_bytes = static_cast<std::size_t>(bound);
    report.ratio = static_cast<double>(report.compressed_bytes) /
                   static_cast<double>(report.raw_bytes);
    return report;
}

std::vector<std::string> top_activation_words(const EmbeddingTable& emb,
                                              std::span<const int> features, int k) {
    if (features.empty())
        throw Error(ErrorKind::domain, "top activation requires a non-empty feature set");
    if (k < 1 || k > emb.size())
        throw Error(ErrorKind::domain,
                    "top activation k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(emb.size()) + "]");
    for (int f : features)
        if (f < 0 || f >= emb.dims())
            throw Error(ErrorKind::domain,
                        "feature index " + std::to_string(f) + " outside [0, " +
                            std::to_string(emb.dims()) + ")");

    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(static_cast<std::size_t>(emb.size()));
    for (int i = 0; i < emb.size(); ++i) {
        const auto r = emb.row(i);
        double s = 0.0;
        for (int f : features) s += r[static_cast<std::size_t>(f)];
        scored.emplace_back(s, emb.vocab()[static_cast<std::size_t>(i)]);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

}
