#include "lexalign/corpus_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

#include "lexalign/util.hpp"

namespace lexalign {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}

EmbeddingTable::EmbeddingTable(std::vector<std::string> vocab, Matrix values)
    : vocab_(std::move(vocab)), values_(std::move(values)) {
    if (vocab_.size() != values_.rows())
        throw Error(ErrorKind::domain, "embedding table: vocabulary size does not match row count");
    if (vocab_.size() < 2)
        throw Error(ErrorKind::domain, "embedding table: need at least 2 words");
    if (values_.cols() < 1)
        throw Error(ErrorKind::domain, "embedding table: need at least 1 feature");
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        if (!index_.emplace(vocab_[i], static_cast<int>(i)).second)
            throw Error(ErrorKind::duplicate, "embedding table: duplicate token '" + vocab_[i] + "'");
        for (double v : values_.row(i)) {
            if (!std::isfinite(v))
                throw Error(ErrorKind::format,
                            "embedding table: non-finite value in row for '" + vocab_[i] + "'");
        }
    }
}

int EmbeddingTable::index_of(const std::string& token) const {
    const auto it = index_.find(token);
    if (it == index_.end())
        throw Error(ErrorKind::missing_word, "word '" + token + "' not in embedding vocabulary");
    return it->second;
}

EmbeddingTable EmbeddingTable::subset(std::span<const std::string> words) const {
    std::vector<std::string> missing;
    for (const auto& w : words)
        if (!contains(w)) missing.push_back(w);
    if (!missing.empty())
        throw Error(ErrorKind::missing_word,
                    "words not in embedding vocabulary: " + join(missing, ", "));
    Matrix out(words.size(), values_.cols());
    std::vector<std::string> vocab(words.begin(), words.end());
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto src = row(index_.at(words[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return EmbeddingTable(std::move(vocab), std::move(out));
}

namespace {

EmbeddingTable parse_embeddings_impl(std::istream& in, const std::set<std::string>* filter) {
    std::set<std::string> wanted;
    if (filter)
        for (const auto& w : *filter) wanted.insert(to_lower(w));

    std::vector<std::string> vocab;
    std::vector<double> values;
    std::set<std::string> seen;
    int dims = -1;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_ws(line);
        if (fields.size() < 2)
            throw Error(ErrorKind::format,
                        "embedding line " + std::to_string(line_no) + ": expected token and values");
        const std::string token = to_lower(fields[0]);
        const int d = static_cast<int>(fields.size()) - 1;
        if (dims < 0) {
            dims = d;
        } else if (d != dims) {
            throw Error(ErrorKind::format, "embedding line " + std::to_string(line_no) +
                                               ": expected " + std::to_string(dims) +
                                               " values, got " + std::to_string(d));
        }
        if (!seen.insert(token).second)
            throw Error(ErrorKind::duplicate, "embedding line " + std::to_string(line_no) +
                                                  ": duplicate token '" + token + "'");
        if (filter && wanted.count(token) == 0) continue;
        vocab.push_back(token);
        for (int f = 0; f < dims; ++f) {
            bool ok = false;
            const double v = parse_number(fields[static_cast<std::size_t>(f) + 1], ok);
            if (!ok || !std::isfinite(v))
                throw Error(ErrorKind::format, "embedding line " + std::to_string(line_no) +
                                                   ": bad value '" + fields[f + 1] + "'");
            values.push_back(v);
        }
    }
    if (dims < 0) throw Error(ErrorKind::format, "embedding stream is empty");

    if (filter) {
        std::vector<std::string> missing;
        for (const auto& w : wanted)
            if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) missing.push_back(w);
        if (!missing.empty())
            throw Error(ErrorKind::missing_word,
                        "words absent from embedding source: " + join(missing, ", "));
    }

    Matrix m(vocab.size(), static_cast<std::size_t>(dims));
    std::copy(values.begin(), values.end(), m.data());
    return EmbeddingTable(std::move(vocab), std::move(m));
}

}

EmbeddingTable parse_embeddings(std::istream& in) { return parse_embeddings_impl(in, nullptr); }

EmbeddingTable parse_embeddings(std::istream& in, const std::set<std::string>& vocab_filter) {
    return parse_embeddings_impl(in, &vocab_filter);
}

void emit_embeddings(const EmbeddingTable& emb, std::ostream& out) {
    std::vector<int> all(static_cast<std::size_t>(emb.dims()));
    for (int f = 0; f < emb.dims(); ++f) all[static_cast<std::size_t>(f)] = f;
    emit_embeddings(emb, all, out);
}

void emit_embeddings(const EmbeddingTable& emb, std::span<const int> feature_subset,
                     std::ostream& out) {
    for (int i = 0; i < emb.size(); ++i) {
        out << emb.vocab()[static_cast<std::size_t>(i)];
        const auto r = emb.row(i);
        for (int f : feature_subset) out << ' ' << format_g(r[static_cast<std::size_t>(f)], 6);
        out << '\n';
    }
}

JudgmentDataset parse_judgments(std::istream& in) {
    struct Row {
        std::string pid, w1, w2;
        double rating;
    };

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorKind::format, "judgments stream is empty");
    ++line_no;
    {
        auto header = split(line, ',');
        for (auto& h : header) h = to_lower(std::string(trim(h)));
        const std::vector<std::string> expected{"participant", "word1", "word2", "rating"};
        if (header != expected)
            throw Error(ErrorKind::format,
                        "judgments header must be 'participant,word1,word2,rating'");
    }

    std::vector<Row> rows;
    std::set<std::pair<std::string, std::pair<std::string, std::string>>> keys;
    std::set<std::string> word_set;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4)
            throw Error(ErrorKind::format,
                        "judgments line " + std::to_string(line_no) + ": expected 4 fields");
        Row r;
        r.pid = std::string(trim(fields[0]));
        r.w1 = to_lower(trim(fields[1]));
        r.w2 = to_lower(trim(fields[2]));
        bool ok = false;
        r.rating = parse_number(fields[3], ok);
        if (!ok || !std::isfinite(r.rating))
            throw Error(ErrorKind::format, "judgments line " + std::to_string(line_no) +
                                               ": bad rating '" + fields[3] + "'");
        if (r.rating < 1.0 || r.rating > 7.0)
            throw Error(ErrorKind::range, "judgments line " + std::to_string(line_no) +
                                              ": rating " + format_g(r.rating, 6) +
                                              " outside [1, 7]");
        if (r.w1 == r.w2)
            throw Error(ErrorKind::self_pair, "judgments line " + std::to_string(line_no) +
                                                  ": word paired with itself ('" + r.w1 + "')");
        const auto key = std::make_pair(r.pid, std::minmax(r.w1, r.w2));
        if (!keys.insert(key).second)
            throw Error(ErrorKind::duplicate, "judgments line " + std::to_string(line_no) +
                                                  ": duplicate rating for participant '" + r.pid +
                                                  "' pair (" + r.w1 + ", " + r.w2 + ")");
        word_set.insert(r.w1);
        word_set.insert(r.w2);
        rows.push_back(std::move(r));
    }

    JudgmentDataset ds;
    ds.words.assign(word_set.begin(), word_set.end());
    std::map<std::string, int> word_index;
    for (std::size_t i = 0; i < ds.words.size(); ++i)
        word_index[ds.words[i]] = static_cast<int>(i);

    std::map<std::string, ParticipantRecord> by_id;
    for (const auto& r : rows) {
        auto& rec = by_id[r.pid];
        rec.id = r.pid;
        int a = word_index[r.w1], b = word_index[r.w2];
        if (a > b) std::swap(a, b);
        rec.ratings[{a, b}] = r.rating;
    }
    for (auto& [id, rec] : by_id) ds.participants.push_back(std::move(rec));
    return ds;
}

const std::string& DomainMap::domain_of(const std::string& dim) const {
    for (std::size_t i = 0; i < dims.size(); ++i)
        if (dims[i] == dim) return domains[i];
    throw Error(ErrorKind::mapping, "dimension '" + dim + "' has no domain assignment");
}

DomainMap parse_domain_map(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorKind::format, "domain map stream is empty");
    ++line_no;
    {
        auto header = split(line, ',');
        for (auto& h : header) h = to_lower(std::string(trim(h)));
        if (header != std::vector<std::string>{"dimension", "domain"})
            throw Error(ErrorKind::format, "domain map header must be 'dimension,domain'");
    }
    DomainMap map;
    std::set<std::string> seen_dims;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 2)
            throw Error(ErrorKind::format,
                        "domain map line " + std::to_string(line_no) + ": expected 2 fields");
        const std::string dim(trim(fields[0]));
        const std::string dom(trim(fields[1]));
        if (dim.empty() || dom.empty())
            throw Error(ErrorKind::format,
                        "domain map line " + std::to_string(line_no) + ": empty field");
        if (!seen_dims.insert(dim).second)
            throw Error(ErrorKind::mapping, "domain map line " + std::to_string(line_no) +
                                                ": dimension '" + dim + "' mapped twice");
        map.dims.push_back(dim);
        map.domains.push_back(dom);
        if (std::find(map.domain_order.begin(), map.domain_order.end(), dom) ==
            map.domain_order.end())
            map.domain_order.push_back(dom);
    }
    return map;
}

AnnotationTable parse_annotations(std::istream& ann_in, std::istream& map_in) {
    AnnotationTable table;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(ann_in, line)) throw Error(ErrorKind::format, "annotation stream is empty");
    ++line_no;
    {
        const auto header = split(line, ',');
        if (header.size() != static_cast<std::size_t>(kAnnotationDims) + 1)
            throw Error(ErrorKind::format,
                        "annotation header: expected 'word' plus " +
                            std::to_string(kAnnotationDims) + " dimension labels, got " +
                            std::to_string(header.size() - 1));
        if (to_lower(trim(header[0])) != "word")
            throw Error(ErrorKind::format, "annotation header must start with 'word'");
        std::set<std::string> seen;
        for (std::size_t i = 1; i < header.size(); ++i) {
            const std::string label(trim(header[i]));
            if (label.empty() || !seen.insert(label).second)
                throw Error(ErrorKind::format, "annotation header: bad or duplicate label '" +
                                                   label + "'");
            table.dim_names.push_back(label);
        }
    }

    std::vector<std::string> words;
    std::vector<double> values;
    std::set<std::string> seen_words;
    while (std::getline(ann_in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != static_cast<std::size_t>(kAnnotationDims) + 1)
            throw Error(ErrorKind::format, "annotation line " + std::to_string(line_no) +
                                               ": expected " + std::to_string(kAnnotationDims + 1) +
                                               " fields, got " + std::to_string(fields.size()));
        const std::string word = to_lower(trim(fields[0]));
        if (!seen_words.insert(word).second) {
            table.warnings.push_back("annotation line " + std::to_string(line_no) +
                                     ": duplicate word '" + word +
                                     "' dropped (keeping first occurrence)");
            continue;
        }
        words.push_back(word);
        for (int f = 0; f < kAnnotationDims; ++f) {
            bool ok = false;
            const double v = parse_number(fields[static_cast<std::size_t>(f) + 1], ok);
            if (!ok || !std::isfinite(v))
                throw Error(ErrorKind::format, "annotation line " + std::to_string(line_no) +
                                                   ": bad value '" + fields[f + 1] + "'");
            if (v < 0.0)
                throw Error(ErrorKind::range, "annotation line " + std::to_string(line_no) +
                                                  ": negative value " + format_g(v, 6));
            values.push_back(v);
        }
    }
    if (words.empty()) throw Error(ErrorKind::format, "annotation stream has no data rows");

    table.words = std::move(words);
    table.values = Matrix(table.words.size(), kAnnotationDims);
    std::copy(values.begin(), values.end(), table.values.data());

    table.domain_map = parse_domain_map(map_in);

    std::vector<std::string> orphans;
    const std::set<std::string> mapped(table.domain_map.dims.begin(), table.domain_map.dims.end());
    for (const auto& dim : table.dim_names)
        if (mapped.count(dim) == 0) orphans.push_back(dim);
    if (!orphans.empty())
        throw Error(ErrorKind::mapping,
                    "dimensions missing from domain map: " + join(orphans, ", "));

    const std::set<std::string> present(table.dim_names.begin(), table.dim_names.end());
    std::vector<std::string> extraneous;
    for (const auto& dim : table.domain_map.dims)
        if (present.count(dim) == 0) extraneous.push_back(dim);
    if (!extraneous.empty())
        throw Error(ErrorKind::mapping,
                    "domain map lists unknown dimensions: " + join(extraneous, ", "));

    if (static_cast<int>(table.domain_map.domain_order.size()) != kAnnotationDomains)
        throw Error(ErrorKind::mapping,
                    "domain map must define exactly " + std::to_string(kAnnotationDomains) +
                        " domains, found " +
                        std::to_string(table.domain_map.domain_order.size()));

    return table;
}

}
