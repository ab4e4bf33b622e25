#include "lexalign/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <istream>

#include "lexalign/error.hpp"
#include "lexalign/rng.hpp"
#include "lexalign/util.hpp"

namespace lexalign {

namespace {

// Captures the first error raised inside a parallel loop, by iteration index.
struct DeferredError {
    bool failed = false;
    ErrorKind kind = ErrorKind::domain;
    std::string message;
    long index = std::numeric_limits<long>::max();

    void capture(long i, const Error& e) {
#pragma omp critical(lexalign_deferred_error)
        {
            if (!failed || i < index) {
                failed = true;
                kind = e.kind();
                message = e.what();
                index = i;
            }
        }
    }

    void rethrow() const {
        if (failed) throw Error(kind, message);
    }
};

void check_word_match(const EmbeddingTable& emb, const SimilarityMatrix& h) {
    if (emb.vocab() != h.words)
        throw Error(ErrorKind::alignment_domain,
                    "embedding words do not match the similarity matrix words");
}

// Held-out evaluation convention: a feature set whose model similarities are
// constant over the test pairs (or a constant human test vector) carries no
// ranking information and scores 0.
double test_rho(std::span<const double> model, std::span<const double> human) {
    try {
        return spearman(model, human);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::undefined_correlation) return 0.0;
        throw;
    }
}

double cosine_pair(std::span<const double> a, std::span<const double> b,
                   std::span<const int> features, const std::string& word_a,
                   const std::string& word_b) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (int f : features) {
        const auto i = static_cast<std::size_t>(f);
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0)
        throw Error(ErrorKind::degenerate_vector,
                    "word '" + word_a + "' has zero norm on the selected features");
    if (nb == 0.0)
        throw Error(ErrorKind::degenerate_vector,
                    "word '" + word_b + "' has zero norm on the selected features");
    return d / (std::sqrt(na) * std::sqrt(nb));
}

}

std::vector<double> rank_features(const EmbeddingTable& emb, const SimilarityMatrix& h) {
    check_word_match(emb, h);
    if (emb.dims() < 2)
        throw Error(ErrorKind::domain, "feature ranking needs at least 2 features");
    const int d = emb.dims();

    const SimilarityMatrix full = cosine_matrix(emb);
    const double rho_full = alignment(full, h);

    std::vector<double> importance(static_cast<std::size_t>(d));
    DeferredError err;

#pragma omp parallel for schedule(static)
    for (int f = 0; f < d; ++f) {
        try {
            std::vector<int> subset;
            subset.reserve(static_cast<std::size_t>(d) - 1);
            for (int g = 0; g < d; ++g)
                if (g != f) subset.push_back(g);
            const SimilarityMatrix reduced = cosine_matrix(emb, subset);
            importance[static_cast<std::size_t>(f)] = rho_full - alignment(reduced, h);
        } catch (const Error& e) {
            err.capture(f, e);
        }
    }
    err.rethrow();
    return importance;
}

std::vector<int> rank_order(std::span<const double> importance) {
    std::vector<int> order(importance.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = importance[static_cast<std::size_t>(a)];
        const double db = importance[static_cast<std::size_t>(b)];
        if (da != db) return da > db;
        return a < b;
    });
    return order;
}

RetainedFeatureSet prune(const EmbeddingTable& emb, const SimilarityMatrix& h) {
    check_word_match(emb, h);
    if (emb.size() < 3)
        throw Error(ErrorKind::domain, "pruning needs at least 3 words");
    const int d = emb.dims();

    const SimilarityMatrix full = cosine_matrix(emb);
    const double rho_full = alignment(full, h);

    std::vector<double> importance;
    if (d == 1) {
        importance.assign(1, 0.0);
    } else {
        importance = rank_features(emb, h);
    }
    const std::vector<int> order = rank_order(importance);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> prefix_rho(static_cast<std::size_t>(d), nan);
    std::vector<char> skipped(static_cast<std::size_t>(d), 0);
    DeferredError err;

#pragma omp parallel for schedule(static)
    for (int s = 1; s <= d; ++s) {
        try {
            const std::span<const int> prefix(order.data(), static_cast<std::size_t>(s));
            const SimilarityMatrix zs = cosine_matrix(emb, prefix);
            prefix_rho[static_cast<std::size_t>(s) - 1] = alignment(zs, h);
        } catch (const Error& e) {
            // A prefix is unusable when some word has zero norm on it or when
            // its similarity values are constant (e.g. a single-feature prefix
            // where every pair has the same sign product); the objective is
            // undefined there, so the size is skipped and recorded.
            if (e.kind() == ErrorKind::degenerate_vector ||
                e.kind() == ErrorKind::undefined_correlation) {
                skipped[static_cast<std::size_t>(s) - 1] = 1;
            } else {
                err.capture(s, e);
            }
        }
    }
    err.rethrow();

    int best_size = 0;
    double best_rho = 0.0;
    for (int s = 1; s <= d; ++s) {
        const double r = prefix_rho[static_cast<std::size_t>(s) - 1];
        if (std::isnan(r)) continue;
        if (best_size == 0 || r > best_rho) {
            best_size = s;
            best_rho = r;
        }
    }
    if (best_size == 0)
        throw Error(ErrorKind::pruning_failure,
                    "no feature prefix admits a valid cosine matrix");

    RetainedFeatureSet set;
    set.dims = d;
    set.baseline_rho = rho_full;
    set.achieved_rho = best_rho;
    set.indices.assign(order.begin(), order.begin() + best_size);
    set.scores.reserve(static_cast<std::size_t>(best_size));
    for (int idx : set.indices) set.scores.push_back(importance[static_cast<std::size_t>(idx)]);
    set.prefix_rho.assign(prefix_rho.begin(), prefix_rho.begin() + best_size);
    for (int s = 1; s <= d; ++s)
        if (skipped[static_cast<std::size_t>(s) - 1]) set.skipped_prefix_sizes.push_back(s);
    return set;
}

void emit_retained(const RetainedFeatureSet& set, std::ostream& out) {
    out << "rank,feature_index,D,cumulative_rho\n";
    for (int i = 0; i < set.size(); ++i) {
        out << (i + 1) << ',' << set.indices[static_cast<std::size_t>(i)] << ','
            << format_g(set.scores[static_cast<std::size_t>(i)], 17) << ','
            << format_g(set.prefix_rho[static_cast<std::size_t>(i)], 17) << '\n';
    }
}

RetainedFeatureSet parse_retained(std::istream& in, int dims) {
    std::string line;
    if (!std::getline(in, line) || split(line, ',') !=
        std::vector<std::string>{"rank", "feature_index", "D", "cumulative_rho"})
        throw Error(ErrorKind::format,
                    "retained set header must be 'rank,feature_index,D,cumulative_rho'");
    RetainedFeatureSet set;
    set.dims = dims;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4)
            throw Error(ErrorKind::format,
                        "retained set line " + std::to_string(line_no) + ": expected 4 fields");
        bool ok1 = false, ok2 = false, ok3 = false, ok4 = false;
        const double rank = parse_number(fields[0], ok1);
        const double idx = parse_number(fields[1], ok2);
        const double score = parse_number(fields[2], ok3);
        const double rho = parse_number(fields[3], ok4);
        if (!ok1 || !ok2 || !ok3 || !ok4 ||
            rank != static_cast<double>(set.size() + 1))
            throw Error(ErrorKind::format,
                        "retained set line " + std::to_string(line_no) + ": malformed record");
        const int fidx = static_cast<int>(idx);
        if (fidx < 0 || fidx >= dims)
            throw Error(ErrorKind::range, "retained set line " + std::to_string(line_no) +
                                              ": feature index outside [0, " +
                                              std::to_string(dims) + ")");
        set.indices.push_back(fidx);
        set.scores.push_back(score);
        set.prefix_rho.push_back(rho);
    }
    if (set.indices.empty())
        throw Error(ErrorKind::format, "retained set stream has no records");
    for (auto it = set.prefix_rho.rbegin(); it != set.prefix_rho.rend(); ++it) {
        if (!std::isnan(*it)) {
            set.achieved_rho = *it;
            break;
        }
    }
    set.baseline_rho = std::numeric_limits<double>::quiet_NaN();
    return set;
}

double random_baseline(int dims, int size, int draws, std::uint64_t seed,
                       const std::function<double(std::span<const int>)>& score) {
    if (size < 1 || size > dims)
        throw Error(ErrorKind::domain, "random baseline size " + std::to_string(size) +
                                           " outside [1, " + std::to_string(dims) + "]");
    if (draws < 1) throw Error(ErrorKind::domain, "random baseline needs at least 1 draw");
    std::mt19937_64 rng(seed);
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const std::vector<int> subset = sample_indices(rng, dims, size);
        sum += score(subset);
    }
    return sum / static_cast<double>(draws);
}

namespace {

struct ParticipantStats {
    double mean = 0.0;
    double sd = 0.0;
};

// Standardization statistics over the pairs accepted by `keep`.
ParticipantStats participant_stats(const ParticipantRecord& p,
                                   const std::function<bool(int, int)>& keep, SdConvention sd,
                                   const std::string& context) {
    double sum = 0.0;
    int n = 0;
    double first = 0.0;
    bool distinct = false, have_first = false;
    for (const auto& [pair, r] : p.ratings) {
        if (!keep(pair.first, pair.second)) continue;
        if (!have_first) {
            first = r;
            have_first = true;
        } else if (r != first) {
            distinct = true;
        }
        sum += r;
        ++n;
    }
    if (n < 2 || !distinct)
        throw Error(ErrorKind::degenerate_participant,
                    "participant '" + p.id + "' has degenerate ratings " + context);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& [pair, r] : p.ratings) {
        if (!keep(pair.first, pair.second)) continue;
        ss += (r - mean) * (r - mean);
    }
    const double denom = sd == SdConvention::population ? static_cast<double>(n)
                                                        : static_cast<double>(n - 1);
    return {mean, std::sqrt(ss / denom)};
}

PruneCvFold run_fold(const EmbeddingTable& embc, const JudgmentDataset& ds, int target,
                     const PruneCvOptions& opt) {
    const int k = ds.word_count();
    const int d = embc.dims();

    const auto is_training = [&](int i, int j) { return i != target && j != target; };
    const auto keep_all = [](int, int) { return true; };

    // Per-participant standardization; refit mode excludes held-out pairs
    // from the statistics.
    std::vector<ParticipantStats> stats;
    stats.reserve(ds.participants.size());
    for (const auto& p : ds.participants) {
        const std::string context =
            "on training pairs for fold '" + ds.words[static_cast<std::size_t>(target)] + "'";
        stats.push_back(participant_stats(
            p, opt.normalization == CvNormalization::refit
                   ? std::function<bool(int, int)>(is_training)
                   : std::function<bool(int, int)>(keep_all),
            opt.sd, context));
    }

    // Group means of z-scores for training pairs and for held-out pairs.
    Matrix zsum(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    Matrix zcount(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    for (std::size_t pi = 0; pi < ds.participants.size(); ++pi) {
        const auto& st = stats[pi];
        for (const auto& [pair, r] : ds.participants[pi].ratings) {
            const double z = (r - st.mean) / st.sd;
            zsum(pair.first, pair.second) += z;
            zcount(pair.first, pair.second) += 1.0;
        }
    }
    const auto group_z = [&](int i, int j) {
        if (i > j) std::swap(i, j);
        if (zcount(i, j) == 0.0)
            throw Error(ErrorKind::domain,
                        "pair (" + ds.words[static_cast<std::size_t>(i)] + ", " +
                            ds.words[static_cast<std::size_t>(j)] + ") was rated by no participant");
        return zsum(i, j) / zcount(i, j);
    };

    std::vector<std::string> train_words;
    std::vector<int> train_idx;
    train_words.reserve(static_cast<std::size_t>(k) - 1);
    for (int i = 0; i < k; ++i) {
        if (i == target) continue;
        train_words.push_back(ds.words[static_cast<std::size_t>(i)]);
        train_idx.push_back(i);
    }

    SimilarityMatrix h_train;
    h_train.words = train_words;
    h_train.values = Matrix(train_words.size(), train_words.size());
    for (std::size_t a = 0; a < train_idx.size(); ++a) {
        for (std::size_t b = a + 1; b < train_idx.size(); ++b) {
            const double z = group_z(train_idx[a], train_idx[b]);
            h_train.values(a, b) = z;
            h_train.values(b, a) = z;
        }
    }

    const EmbeddingTable emb_train = embc.subset(train_words);
    const RetainedFeatureSet retained = prune(emb_train, h_train);

    // Held-out pairs are exactly those containing the target word, ordered by
    // the other word's index.
    std::vector<double> human;
    human.reserve(static_cast<std::size_t>(k) - 1);
    for (int i : train_idx) human.push_back(group_z(target, i));

    const auto model_vector = [&](std::span<const int> features) {
        std::vector<double> v;
        v.reserve(train_idx.size());
        const auto target_row = embc.row(target);
        for (int i : train_idx) {
            v.push_back(cosine_pair(target_row, embc.row(i), features,
                                    ds.words[static_cast<std::size_t>(target)],
                                    ds.words[static_cast<std::size_t>(i)]));
        }
        return v;
    };

    std::vector<int> all_features(static_cast<std::size_t>(d));
    std::iota(all_features.begin(), all_features.end(), 0);

    PruneCvFold fold;
    fold.target_word = ds.words[static_cast<std::size_t>(target)];
    fold.retained_size = retained.size();
    const std::vector<double> base_vec = model_vector(all_features);
    fold.base_rho = test_rho(base_vec, human);
    const std::vector<double> retained_vec = model_vector(retained.indices);
    fold.retained_rho = test_rho(retained_vec, human);
    fold.random_rho = random_baseline(
        d, retained.size(), opt.random_draws, mix_seed(opt.seed, static_cast<std::uint64_t>(target)),
        [&](std::span<const int> subset) {
            const std::vector<double> v = model_vector(subset);
            return test_rho(v, human);
        });
    return fold;
}

}

PruneCvReport prune_cv(const EmbeddingTable& emb, const JudgmentDataset& ds,
                       const PruneCvOptions& opt) {
    const int k = ds.word_count();
    if (k < 4)
        throw Error(ErrorKind::fold_size,
                    "cross-validation needs at least 4 words (folds would have fewer than 3 "
                    "held-out pairs)");
    if (opt.random_draws < 1)
        throw Error(ErrorKind::domain, "random_draws must be at least 1");

    const EmbeddingTable embc = emb.subset(ds.words);

    PruneCvReport report;
    report.category_label = ds.category_label;
    report.group_label = ds.group_label;
    report.folds.resize(static_cast<std::size_t>(k));
    DeferredError err;

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < k; ++t) {
        try {
            report.folds[static_cast<std::size_t>(t)] = run_fold(embc, ds, t, opt);
        } catch (const Error& e) {
            err.capture(t, Error(e.kind(), "fold '" + ds.words[static_cast<std::size_t>(t)] +
                                               "': " + e.what()));
        }
    }
    err.rethrow();

    for (const auto& f : report.folds) {
        report.base_mean += f.base_rho;
        report.retained_mean += f.retained_rho;
        report.random_mean += f.random_rho;
        report.size_mean += f.retained_size;
    }
    const double nk = static_cast<double>(k);
    report.base_mean /= nk;
    report.retained_mean /= nk;
    report.random_mean /= nk;
    report.size_mean /= nk;
    return report;
}

void emit_prune_cv(const PruneCvReport& report, std::ostream& out) {
    out << "target_word,base_rho,retained_rho,random_rho,retained_size\n";
    for (const auto& f : report.folds) {
        out << f.target_word << ',' << format_g(f.base_rho, 17) << ','
            << format_g(f.retained_rho, 17) << ',' << format_g(f.random_rho, 17) << ','
            << f.retained_size << '\n';
    }
}

}
