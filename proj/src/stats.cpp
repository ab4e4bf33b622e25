#include "lexalign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "lexalign/error.hpp"
#include "lexalign/simkit.hpp"
#include "lexalign/util.hpp"

namespace lexalign {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool is_constant(std::span<const double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0]) return false;
    return true;
}

double correlate(std::span<const double> a, std::span<const double> b, CorrelationKind kind) {
    return kind == CorrelationKind::pearson ? pearson(a, b) : spearman(a, b);
}

}

AccuracyProfile accuracy_profile(const PredictionMatrix& pm, std::string label,
                                 CorrelationKind kind) {
    if (pm.values.rows() != pm.ground_truth.rows() ||
        pm.values.cols() != pm.ground_truth.cols())
        throw Error(ErrorKind::shape, "prediction matrix has no aligned ground truth");

    AccuracyProfile profile;
    profile.label = std::move(label);
    profile.dims = pm.dims;
    profile.words = pm.words;

    const std::size_t n = pm.values.rows();
    const std::size_t m = pm.values.cols();

    std::vector<double> pred(n), truth(n);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = pm.values(i, j);
            truth[i] = pm.ground_truth(i, j);
        }
        profile.per_dim_r.push_back(is_constant(pred) || is_constant(truth)
                                        ? kNan
                                        : correlate(pred, truth, kind));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto pr = pm.values.row(i);
        const auto tr = pm.ground_truth.row(i);
        profile.per_word_r.push_back(is_constant(pr) || is_constant(tr)
                                         ? kNan
                                         : correlate(pr, tr, kind));
    }
    return profile;
}

void emit_profile_dims(const AccuracyProfile& profile, std::ostream& out) {
    out << "dim,r\n";
    for (std::size_t j = 0; j < profile.dims.size(); ++j)
        out << profile.dims[j] << ',' << format_g(profile.per_dim_r[j], 17) << '\n';
}

void emit_profile_words(const AccuracyProfile& profile, std::ostream& out) {
    out << "word,r\n";
    for (std::size_t i = 0; i < profile.words.size(); ++i)
        out << profile.words[i] << ',' << format_g(profile.per_word_r[i], 17) << '\n';
}

PairedT paired_t_test(std::span<const double> a, std::span<const double> b, bool two_sided) {
    if (a.size() != b.size())
        throw Error(ErrorKind::domain, "paired t-test: samples differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw Error(ErrorKind::domain, "paired t-test: need at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(n - 1);

    PairedT result;
    result.df = static_cast<int>(n) - 1;
    if (var == 0.0) {
        if (mean == 0.0) {
            result.t = 0.0;
            result.p = 1.0;
            return result;
        }
        result.degenerate = true;
        result.t = kNan;
        result.p = kNan;
        return result;
    }
    result.t = mean / std::sqrt(var / static_cast<double>(n));
    const boost::math::students_t dist(static_cast<double>(result.df));
    if (two_sided) {
        result.p = 2.0 * boost::math::cdf(dist, -std::fabs(result.t));
    } else {
        result.p = boost::math::cdf(dist, -result.t);  // upper tail: P(T >= t)
    }
    return result;
}

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, int m) {
    if (m < 1) throw Error(ErrorKind::domain, "bonferroni: m must be at least 1");
    const double threshold = alpha / static_cast<double>(m);
    std::vector<bool> flags;
    flags.reserve(p_values.size());
    for (double p : p_values) flags.push_back(p < threshold);
    return flags;
}

DiscrepancyReport discrepancy_test(const PredictionMatrix& pm_a, const PredictionMatrix& pm_b,
                                   const DiscrepancyOptions& opt) {
    if (pm_a.words != pm_b.words || pm_a.dims != pm_b.dims)
        throw Error(ErrorKind::domain,
                    "discrepancy test: prediction matrices cover different axes");
    if (!(pm_a.ground_truth == pm_b.ground_truth))
        throw Error(ErrorKind::domain,
                    "discrepancy test: prediction matrices bind different ground truth");

    const std::size_t n = pm_a.values.rows();
    const std::size_t m = pm_a.values.cols();

    DiscrepancyReport report;
    report.group_a = opt.group_a;
    report.group_b = opt.group_b;
    report.category = opt.category;
    report.alpha = opt.alpha;
    report.contrasts = static_cast<int>(m);

    std::vector<double> err_a(n), err_b(n);
    std::vector<double> ps;
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            err_a[i] = std::fabs(pm_a.values(i, j) - pm_a.ground_truth(i, j));
            err_b[i] = std::fabs(pm_b.values(i, j) - pm_b.ground_truth(i, j));
        }
        // positive t <=> B's errors larger <=> A more accurate
        const PairedT t = paired_t_test(err_b, err_a, opt.two_sided);
        DiscrepancyRecord rec;
        rec.domain = pm_a.dims[j];
        rec.t = t.t;
        rec.df = t.df;
        rec.p = t.p;
        rec.degenerate = t.degenerate;
        report.records.push_back(rec);
        ps.push_back(t.p);
    }
    const auto flags = bonferroni(ps, opt.alpha, report.contrasts);
    for (std::size_t j = 0; j < m; ++j)
        report.records[j].significant = !report.records[j].degenerate && flags[j];
    return report;
}

void emit_discrepancy(const DiscrepancyReport& report, std::ostream& out) {
    out << "category,group_a,group_b,domain,t,df,p,significant,degenerate\n";
    for (const auto& rec : report.records) {
        out << report.category << ',' << report.group_a << ',' << report.group_b << ','
            << rec.domain << ',' << format_g(rec.t, 6) << ',' << rec.df << ','
            << format_g(rec.p, 6) << ',' << (rec.significant ? 1 : 0) << ','
            << (rec.degenerate ? 1 : 0) << '\n';
    }
}

namespace {

struct Cluster {
    std::string label;  // lexicographically smallest member label
    int node = 0;
    int size = 0;
    bool active = true;
};

}

Dendrogram cluster_profiles(std::span<const AccuracyProfile> profiles, Linkage linkage) {
    (void)linkage;  // only average linkage is implemented
    const int n = static_cast<int>(profiles.size());
    if (n < 2) throw Error(ErrorKind::domain, "clustering needs at least 2 profiles");
    const std::size_t dims = profiles[0].per_dim_r.size();
    for (const auto& pr : profiles) {
        if (pr.per_dim_r.size() != dims)
            throw Error(ErrorKind::domain, "profiles differ in dimensionality");
        for (double v : pr.per_dim_r)
            if (std::isnan(v))
                throw Error(ErrorKind::domain,
                            "profile '" + pr.label +
                                "' has undefined entries; impute or drop them before clustering");
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (profiles[static_cast<std::size_t>(i)].label ==
                profiles[static_cast<std::size_t>(j)].label)
                throw Error(ErrorKind::domain, "profiles must carry distinct labels");

    const int total = 2 * n - 1;
    Matrix dist(static_cast<std::size_t>(total), static_cast<std::size_t>(total));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = 1.0 - pearson(profiles[static_cast<std::size_t>(i)].per_dim_r,
                                           profiles[static_cast<std::size_t>(j)].per_dim_r);
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<std::size_t>(total));
    Dendrogram tree;
    for (int i = 0; i < n; ++i) {
        tree.leaf_labels.push_back(profiles[static_cast<std::size_t>(i)].label);
        clusters.push_back({profiles[static_cast<std::size_t>(i)].label, i, 1, true});
    }

    for (int step = 0; step < n - 1; ++step) {
        int best_a = -1, best_b = -1;
        double best_d = 0.0;
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            if (!clusters[a].active) continue;
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                if (!clusters[b].active) continue;
                const double d = dist(clusters[a].node, clusters[b].node);
                // order the candidate pair by label for the tie-break
                const bool a_first = clusters[a].label < clusters[b].label;
                const std::string& lo = a_first ? clusters[a].label : clusters[b].label;
                const std::string& hi = a_first ? clusters[b].label : clusters[a].label;
                bool better = false;
                if (best_a < 0 || d < best_d) {
                    better = true;
                } else if (d == best_d) {
                    const auto& ca = clusters[static_cast<std::size_t>(best_a)];
                    const auto& cb = clusters[static_cast<std::size_t>(best_b)];
                    const bool ca_first = ca.label < cb.label;
                    const std::string& blo = ca_first ? ca.label : cb.label;
                    const std::string& bhi = ca_first ? cb.label : ca.label;
                    better = std::make_pair(lo, hi) < std::make_pair(blo, bhi);
                }
                if (better) {
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                    best_d = d;
                }
            }
        }

        auto& ca = clusters[static_cast<std::size_t>(best_a)];
        auto& cb = clusters[static_cast<std::size_t>(best_b)];
        const int new_node = n + step;
        const bool a_first = ca.label < cb.label;
        tree.merges.push_back({a_first ? ca.node : cb.node, a_first ? cb.node : ca.node, best_d});

        Cluster merged;
        merged.label = std::min(ca.label, cb.label);
        merged.node = new_node;
        merged.size = ca.size + cb.size;
        merged.active = true;

        // UPGMA update: size-weighted average of the two merged clusters.
        for (const auto& other : clusters) {
            if (!other.active) continue;
            if (other.node == ca.node || other.node == cb.node) continue;
            const double d = (static_cast<double>(ca.size) * dist(ca.node, other.node) +
                              static_cast<double>(cb.size) * dist(cb.node, other.node)) /
                             static_cast<double>(ca.size + cb.size);
            dist(new_node, other.node) = d;
            dist(other.node, new_node) = d;
        }
        ca.active = false;
        cb.active = false;
        clusters.push_back(merged);
    }
    return tree;
}

namespace {

std::string node_text(const Dendrogram& tree, int node) {
    const int n = static_cast<int>(tree.leaf_labels.size());
    if (node < n) return tree.leaf_labels[static_cast<std::size_t>(node)];
    const auto& m = tree.merges[static_cast<std::size_t>(node - n)];
    return "(" + node_text(tree, m.left) + "," + node_text(tree, m.right) +
           "):" + format_g(m.height, 12);
}

}

std::string Dendrogram::to_text() const {
    if (merges.empty()) return leaf_labels.empty() ? "" : leaf_labels[0];
    const int root = static_cast<int>(leaf_labels.size() + merges.size()) - 1;
    return node_text(*this, root);
}

}
