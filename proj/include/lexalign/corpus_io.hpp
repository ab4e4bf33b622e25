#ifndef LEXALIGN_CORPUS_IO_HPP
#define LEXALIGN_CORPUS_IO_HPP

#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lexalign/error.hpp"
#include "lexalign/matrix.hpp"

namespace lexalign {

inline constexpr int kAnnotationDims = 65;
inline constexpr int kAnnotationDomains = 14;

/// Vocabulary-indexed table of d-dimensional word vectors. Immutable after
/// construction; tokens are unique and lowercase, all values finite.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> vocab, Matrix values);

    const std::vector<std::string>& vocab() const noexcept { return vocab_; }
    int size() const noexcept { return static_cast<int>(vocab_.size()); }
    int dims() const noexcept { return static_cast<int>(values_.cols()); }
    const Matrix& values() const noexcept { return values_; }
    std::span<const double> row(int i) const { return values_.row(static_cast<std::size_t>(i)); }

    bool contains(const std::string& token) const { return index_.count(token) > 0; }
    /// Throws a missing-word error for unknown tokens.
    int index_of(const std::string& token) const;

    /// Rows restricted to `words`, in the requested order. Absent words are
    /// reported together in a single missing-word error.
    EmbeddingTable subset(std::span<const std::string> words) const;

private:
    std::vector<std::string> vocab_;
    Matrix values_;
    std::map<std::string, int> index_;
};

EmbeddingTable parse_embeddings(std::istream& in);
EmbeddingTable parse_embeddings(std::istream& in, const std::set<std::string>& vocab_filter);

/// One record per line: `token v1 ... vd`, values at 6 significant digits.
void emit_embeddings(const EmbeddingTable& emb, std::ostream& out);
void emit_embeddings(const EmbeddingTable& emb, std::span<const int> feature_subset,
                     std::ostream& out);

struct ParticipantRecord {
    std::string id;
    // unordered pair key (i, j) with i < j, indices into JudgmentDataset::words
    std::map<std::pair<int, int>, double> ratings;
};

/// Per-participant pairwise similarity ratings for one verb category.
/// Words and participants are kept sorted so the parse is invariant to input
/// row order.
struct JudgmentDataset {
    std::vector<std::string> words;
    std::vector<ParticipantRecord> participants;
    std::string category_label;
    std::string group_label;

    int word_count() const noexcept { return static_cast<int>(words.size()); }
    int pair_count() const noexcept {
        const int k = word_count();
        return k * (k - 1) / 2;
    }
};

JudgmentDataset parse_judgments(std::istream& in);

/// Assignment of each annotation dimension to exactly one of 14 domains.
struct DomainMap {
    std::vector<std::string> dims;          // dimension labels, map-file order
    std::vector<std::string> domains;       // parallel to dims
    std::vector<std::string> domain_order;  // distinct domains, first appearance

    const std::string& domain_of(const std::string& dim) const;
};

DomainMap parse_domain_map(std::istream& in);

/// Word-by-dimension human annotation norms plus the dimension->domain map.
struct AnnotationTable {
    std::vector<std::string> words;
    std::vector<std::string> dim_names;
    Matrix values;  // n x 65, non-negative
    DomainMap domain_map;
    std::vector<std::string> warnings;

    int word_count() const noexcept { return static_cast<int>(words.size()); }
};

AnnotationTable parse_annotations(std::istream& ann_in, std::istream& map_in);

}

#endif
