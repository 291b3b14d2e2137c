#include "eileen/searchidx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"

namespace eileen {

using nlohmann::json;

std::string_view to_string(Field field) noexcept {
    switch (field) {
        case Field::title: return "title";
        case Field::abstract: return "abstract";
        case Field::venue: return "venue";
        case Field::scientists: return "scientists";
    }
    return "title";
}

std::vector<std::string> field_tokens(DocumentRecord const& doc, Field field, Tokenizer const& tokenizer) {
    switch (field) {
        case Field::title: return tokenizer.tokenize(doc.title);
        case Field::abstract: return tokenizer.tokenize(doc.abstract);
        case Field::venue: return tokenizer.tokenize(doc.venue);
        case Field::scientists: {
            std::vector<std::string> out;
            for (auto const& name : doc.scientists) {
                auto tokens = tokenizer.tokenize(name);
                out.insert(out.end(), tokens.begin(), tokens.end());
            }
            return out;
        }
    }
    return {};
}

InvertedIndex InvertedIndex::build(std::span<DocumentRecord const> docs, Tokenizer const& tokenizer) {
    if (docs.empty()) throw DomainError("cannot index an empty corpus");
    InvertedIndex index;
    for (auto const& doc : docs) {
        if (index.lengths_.count(doc.id) != 0) {
            throw ValidationError("duplicate document id " + std::to_string(doc.id));
        }
        FieldCounts lengths{};
        std::map<std::string, FieldCounts> tf;
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            auto const tokens = field_tokens(doc, static_cast<Field>(f), tokenizer);
            lengths[f] = static_cast<std::uint32_t>(tokens.size());
            for (auto const& t : tokens) ++tf[t][f];
        }
        index.lengths_.emplace(doc.id, lengths);
        for (auto& [term, counts] : tf) {
            index.postings_[term].push_back(Posting{doc.id, counts});
        }
    }
    index.finalize();
    return index;
}

void InvertedIndex::finalize() {
    df_.clear();
    for (auto& [term, list] : postings_) {
        std::sort(list.begin(), list.end(),
                  [](Posting const& a, Posting const& b) { return a.doc < b.doc; });
        FieldCounts df{};
        for (auto const& p : list) {
            for (std::size_t f = 0; f < kFieldCount; ++f) df[f] += p.tf[f] > 0 ? 1 : 0;
        }
        df_.emplace(term, df);
    }
    avg_lengths_.fill(0.0);
    for (auto const& [_, lengths] : lengths_) {
        for (std::size_t f = 0; f < kFieldCount; ++f) avg_lengths_[f] += lengths[f];
    }
    if (!lengths_.empty()) {
        for (double& a : avg_lengths_) a /= static_cast<double>(lengths_.size());
    }
}

std::span<Posting const> InvertedIndex::postings(std::string_view term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

Posting const* InvertedIndex::posting(std::string_view term, DocId doc) const {
    auto const list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](Posting const& p, DocId d) { return p.doc < d; });
    return it != list.end() && it->doc == doc ? &*it : nullptr;
}

FieldCounts const& InvertedIndex::field_df(std::string_view term) const {
    static FieldCounts const none{};
    auto it = df_.find(term);
    return it == df_.end() ? none : it->second;
}

FieldCounts const& InvertedIndex::field_lengths(DocId doc) const {
    auto it = lengths_.find(doc);
    if (it == lengths_.end()) throw ReferenceError("document " + std::to_string(doc) + " not indexed");
    return it->second;
}

void InvertedIndex::check_consistency() const {
    std::map<DocId, FieldCounts> sums;
    for (auto const& [term, list] : postings_) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (i > 0 && list[i - 1].doc >= list[i].doc) {
                throw ValidationError("postings of '" + term + "' not sorted by doc id");
            }
            auto& s = sums[list[i].doc];
            for (std::size_t f = 0; f < kFieldCount; ++f) s[f] += list[i].tf[f];
        }
    }
    for (auto const& [doc, lengths] : lengths_) {
        FieldCounts const s = sums.count(doc) != 0 ? sums.at(doc) : FieldCounts{};
        if (s != lengths) {
            throw ValidationError("field lengths of document " + std::to_string(doc) +
                                  " disagree with postings");
        }
    }
    if (sums.size() > lengths_.size()) throw ValidationError("postings reference unknown documents");
}

std::string InvertedIndex::serialize() const {
    json j;
    j["format"] = "eileen-index";
    j["version"] = 1;
    json docs = json::array();
    for (auto const& [doc, lengths] : lengths_) docs.push_back({doc, lengths});
    j["docs"] = std::move(docs);
    json postings = json::object();
    for (auto const& [term, list] : postings_) {
        json entries = json::array();
        for (auto const& p : list) entries.push_back({p.doc, p.tf});
        postings[term] = std::move(entries);
    }
    j["postings"] = std::move(postings);
    return j.dump();
}

void InvertedIndex::save(std::filesystem::path const& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write index " + path.string());
    out << serialize() << '\n';
}

InvertedIndex InvertedIndex::load(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read index " + path.string());
    json j;
    try {
        in >> j;
    } catch (json::exception const& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "eileen-index" || j.value("version", 0) != 1) {
        throw FormatError(path.string() + " is not a version 1 index artifact");
    }
    InvertedIndex index;
    for (auto const& d : j.at("docs")) {
        index.lengths_.emplace(d.at(0).get<DocId>(), d.at(1).get<FieldCounts>());
    }
    for (auto const& [term, entries] : j.at("postings").items()) {
        auto& list = index.postings_[term];
        for (auto const& e : entries) list.push_back(Posting{e.at(0).get<DocId>(), e.at(1).get<FieldCounts>()});
    }
    index.finalize();
    index.check_consistency();
    return index;
}

// ---------------------------------------------------------------------------

double bm25_term_field(double tf, double df, double n_docs, double field_len, double avg_len,
                       double k1, double b) {
    if (tf <= 0.0 || df <= 0.0) return 0.0;
    double const idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    double const norm = avg_len > 0.0 ? field_len / avg_len : 0.0;
    return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
}

namespace {

std::vector<std::string> distinct_in_order(std::span<std::string const> terms) {
    std::vector<std::string> out;
    std::set<std::string_view> seen;
    for (auto const& t : terms) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

double contribution(InvertedIndex const& index, std::string_view term, Posting const& p,
                    Bm25Params const& params) {
    FieldCounts const& df = index.field_df(term);
    FieldCounts const& lengths = index.field_lengths(p.doc);
    double const n = static_cast<double>(index.n_docs());
    double sum = 0.0;
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        if (p.tf[f] == 0 || params.field_weights[f] == 0.0) continue;
        sum += params.field_weights[f] *
               bm25_term_field(p.tf[f], df[f], n, lengths[f],
                               index.avg_field_length(static_cast<Field>(f)), params.k1, params.b);
    }
    return sum;
}

}  // namespace

double bm25_score(std::span<std::string const> query_terms, DocId doc, InvertedIndex const& index,
                  Bm25Params const& params) {
    if (!index.contains(doc)) throw ReferenceError("document " + std::to_string(doc) + " not indexed");
    double score = 0.0;
    for (auto const& term : distinct_in_order(query_terms)) {
        if (auto const* p = index.posting(term, doc)) score += contribution(index, term, *p, params);
    }
    return score;
}

std::vector<SearchHit> search(std::string_view query, InvertedIndex const& index,
                              Tokenizer const& tokenizer, std::size_t page_size,
                              Bm25Params const& params) {
    auto const terms = distinct_in_order(tokenizer.tokenize(query));
    if (terms.empty() || page_size == 0) return {};
    std::map<DocId, double> scores;
    for (auto const& term : terms) {
        for (auto const& p : index.postings(term)) scores[p.doc] += contribution(index, term, p, params);
    }
    std::vector<SearchHit> hits;
    hits.reserve(scores.size());
    for (auto const& [doc, score] : scores) hits.push_back(SearchHit{doc, score, 0});
    auto const by_score = [](SearchHit const& a, SearchHit const& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    };
    std::size_t const n = std::min(page_size, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), by_score);
    hits.resize(n);
    for (std::size_t i = 0; i < n; ++i) hits[i].rank = i + 1;
    return hits;
}

}  // namespace eileen
