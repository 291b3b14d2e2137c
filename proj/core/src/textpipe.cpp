#include "eileen/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"
#include "eileen/porter.hpp"
#include "stopwords_data.hpp"

namespace eileen {

using nlohmann::json;

StopwordList::StopwordList(std::vector<std::string> words) {
    for (auto& w : words) {
        if (!w.empty()) words_.insert(std::move(w));
    }
}

namespace {

std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(line);
    }
    return out;
}

}  // namespace

StopwordList const& StopwordList::builtin() {
    static StopwordList const list = [] {
        std::istringstream in{std::string(detail::kBuiltinStopwords)};
        return StopwordList(read_lines(in));
    }();
    return list;
}

StopwordList StopwordList::load(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read stopword list " + path.string());
    return StopwordList(read_lines(in));
}

bool StopwordList::contains(std::string_view word) const {
    return words_.find(std::string(word)) != words_.end();
}

// ---------------------------------------------------------------------------

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 && (c & 0x80) == 0; }

template <typename F>
void for_each_word(std::string_view text, F&& f) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_alnum(text[i])) ++i;
        std::size_t const start = i;
        while (i < text.size() && is_alnum(text[i])) ++i;
        if (i > start) f(text.substr(start, i - start));
    }
}

}  // namespace

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    for_each_word(text, [&](std::string_view word) {
        std::string lower(word);
        bool has_alpha = false;
        for (char& c : lower) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            has_alpha = has_alpha || std::isalpha(static_cast<unsigned char>(c)) != 0;
        }
        if (!has_alpha || stopwords_->contains(lower)) return;
        std::string stem = porter_stem(lower);
        if (!stem.empty()) tokens.push_back(std::move(stem));
    });
    return tokens;
}

std::vector<std::string> Tokenizer::terms(std::string_view text) const {
    std::vector<std::string> unigrams = tokenize(text);
    std::vector<std::string> out = unigrams;
    for (std::size_t i = 1; i < unigrams.size(); ++i) {
        out.push_back(unigrams[i - 1] + ' ' + unigrams[i]);
    }
    return out;
}

std::vector<std::string> Tokenizer::document_terms(DocumentRecord const& doc) const {
    std::vector<std::string> out = terms(doc.title);
    std::vector<std::string> abstract = terms(doc.abstract);
    out.insert(out.end(), std::make_move_iterator(abstract.begin()),
               std::make_move_iterator(abstract.end()));
    return out;
}

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    for_each_word(text, [&](std::string_view) { ++n; });
    return n;
}

double tfidf_weight(std::uint64_t term_freq, std::uint64_t doc_freq, std::uint64_t n_docs) {
    if (doc_freq < 1 || doc_freq > n_docs) {
        throw DomainError("document frequency " + std::to_string(doc_freq) +
                          " outside [1, " + std::to_string(n_docs) + "]");
    }
    if (term_freq == 0) return 0.0;
    double const w = (1.0 + std::log(static_cast<double>(term_freq))) *
                     std::log(static_cast<double>(n_docs) / static_cast<double>(doc_freq + 1));
    return w > 0.0 ? w : 0.0;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::uint64_t h, void const* data, std::size_t n) {
    auto const* p = static_cast<unsigned char const*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> df,
                       std::uint64_t n_docs, VocabularyConfig config)
    : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs), config_(config) {
    if (terms_.size() != df_.size()) {
        throw ValidationError("vocabulary terms and df differ in length");
    }
    if (!std::is_sorted(terms_.begin(), terms_.end())) {
        throw ValidationError("vocabulary terms must be sorted");
    }
    std::uint64_t h = 0xCBF29CE484222325ULL;
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (df_[i] < 1 || df_[i] > n_docs_) {
            throw ValidationError("document frequency of '" + terms_[i] + "' outside [1, N]");
        }
        if (!index_.emplace(terms_[i], static_cast<TermId>(i)).second) {
            throw ValidationError("duplicate vocabulary term '" + terms_[i] + "'");
        }
        h = fnv1a(h, terms_[i].data(), terms_[i].size());
        h = fnv1a(h, "\0", 1);
        h = fnv1a(h, &df_[i], sizeof(df_[i]));
    }
    fingerprint_ = fnv1a(h, &n_docs_, sizeof(n_docs_));
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Vocabulary::save(std::filesystem::path const& path) const {
    json j;
    j["format"] = "eileen-vocabulary";
    j["version"] = 1;
    j["n_docs"] = n_docs_;
    j["log_base"] = "e";
    j["min_term_count"] = config_.min_term_count;
    j["max_df_ratio"] = config_.max_df_ratio;
    j["fingerprint"] = fingerprint_;
    j["terms"] = terms_;
    j["df"] = df_;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write vocabulary " + path.string());
    out << j.dump() << '\n';
}

Vocabulary Vocabulary::load(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read vocabulary " + path.string());
    json j;
    try {
        in >> j;
    } catch (json::exception const& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "eileen-vocabulary" || j.value("version", 0) != 1) {
        throw FormatError(path.string() + " is not a version 1 vocabulary artifact");
    }
    VocabularyConfig config{j.at("min_term_count").get<std::uint32_t>(),
                            j.at("max_df_ratio").get<double>()};
    Vocabulary v(j.at("terms").get<std::vector<std::string>>(),
                 j.at("df").get<std::vector<std::uint32_t>>(), j.at("n_docs").get<std::uint64_t>(),
                 config);
    if (v.fingerprint() != j.at("fingerprint").get<std::uint64_t>()) {
        throw FormatError(path.string() + ": fingerprint mismatch");
    }
    return v;
}

Vocabulary build_vocabulary(std::span<DocumentRecord const> docs, Tokenizer const& tokenizer,
                            VocabularyConfig config) {
    if (docs.empty()) throw DomainError("cannot build a vocabulary from an empty corpus");
    if (config.min_term_count < 1 || !(config.max_df_ratio > 0.0)) {
        throw DomainError("vocabulary thresholds must be positive");
    }
    std::map<std::string, std::uint32_t> counts;
    for (auto const& doc : docs) {
        std::vector<std::string> terms = tokenizer.document_terms(doc);
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
        for (auto& t : terms) ++counts[std::move(t)];
    }
    double const max_df = config.max_df_ratio * static_cast<double>(docs.size());
    std::vector<std::string> terms;
    std::vector<std::uint32_t> df;
    for (auto& [term, count] : counts) {
        if (count >= config.min_term_count && static_cast<double>(count) <= max_df) {
            terms.push_back(term);
            df.push_back(count);
        }
    }
    return Vocabulary(std::move(terms), std::move(df), docs.size(), config);
}

SparseVector vectorize_terms(std::span<std::string const> terms, Vocabulary const& vocab) {
    std::map<TermId, std::uint64_t> freq;
    for (auto const& t : terms) {
        if (auto id = vocab.find(t)) ++freq[*id];
    }
    std::vector<SparseVector::Entry> entries;
    entries.reserve(freq.size());
    for (auto const& [id, f] : freq) {
        double const w = tfidf_weight(f, vocab.df()[id], vocab.n_docs());
        if (w > 0.0) entries.emplace_back(id, w);
    }
    return SparseVector(std::move(entries));
}

SparseVector vectorize(DocumentRecord const& doc, Vocabulary const& vocab, Tokenizer const& tokenizer) {
    std::vector<std::string> const terms = tokenizer.document_terms(doc);
    return vectorize_terms(terms, vocab);
}

SparseVector vectorize_text(std::string_view text, Vocabulary const& vocab, Tokenizer const& tokenizer) {
    std::vector<std::string> const terms = tokenizer.terms(text);
    return vectorize_terms(terms, vocab);
}

}  // namespace eileen
