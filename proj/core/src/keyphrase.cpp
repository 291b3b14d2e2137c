#include "eileen/keyphrase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "eileen/error.hpp"
#include "eileen/porter.hpp"
#include "eileen/rng.hpp"
#include "eileen/util.hpp"

namespace eileen {

void RakeParams::validate() const {
    if (min_char_len < 1 || max_words < 1 || min_occurrences < 1) {
        throw ConfigError("RAKE thresholds must all be at least 1");
    }
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

bool has_letter(std::string_view w) {
    return std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isalpha(c) != 0 || c >= 0x80; });
}

std::vector<std::string> split_words(std::string_view phrase) {
    std::vector<std::string> out;
    std::istringstream in{std::string(phrase)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::string join(std::vector<std::string> const& words, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        if (i > from) out += ' ';
        out += words[i];
    }
    return out;
}

bool is_content(std::string const& w, std::size_t min_char_len, StopwordList const& stopwords) {
    return w.size() >= min_char_len && has_letter(w) && !stopwords.contains(w);
}

struct Run {
    std::size_t start = 0;
    std::vector<std::string> words;
};

/// Content-word runs bounded by punctuation and non-content tokens.
std::vector<Run> content_runs(std::span<WordToken const> tokens, std::size_t min_char_len,
                              StopwordList const& stopwords) {
    std::vector<Run> runs;
    Run current;
    auto const flush = [&] {
        if (!current.words.empty()) runs.push_back(std::move(current));
        current = Run{};
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].boundary_before) flush();
        if (!is_content(tokens[i].text, min_char_len, stopwords)) {
            flush();
            continue;
        }
        if (current.words.empty()) current.start = i;
        current.words.push_back(tokens[i].text);
    }
    flush();
    return runs;
}

struct RakeAnalysis {
    std::map<std::string, double> word_score;
    std::map<std::string, std::size_t> run_frequency;
    std::size_t long_runs = 0;
};

RakeAnalysis analyze_rake(std::span<WordToken const> tokens, RakeParams const& params,
                          StopwordList const& stopwords) {
    RakeAnalysis a;
    std::map<std::string, double> degree;
    std::map<std::string, double> freq;
    std::set<std::string> long_seen;
    for (auto const& run : content_runs(tokens, params.min_char_len, stopwords)) {
        if (run.words.size() > params.max_words) {
            long_seen.insert(join(run.words, 0, run.words.size()));
            continue;
        }
        for (auto const& w : run.words) {
            freq[w] += 1.0;
            degree[w] += static_cast<double>(run.words.size());
        }
        ++a.run_frequency[join(run.words, 0, run.words.size())];
    }
    for (auto const& [w, f] : freq) a.word_score[w] = degree[w] / f;
    a.long_runs = long_seen.size();
    return a;
}

double phrase_rake_score(std::string const& phrase, RakeAnalysis const& a) {
    double s = 0.0;
    for (auto const& w : split_words(phrase)) {
        auto it = a.word_score.find(w);
        if (it != a.word_score.end()) s += it->second;
    }
    return s;
}

void sort_candidates(std::vector<KeyphraseCandidate>& c) {
    std::sort(c.begin(), c.end(), [](KeyphraseCandidate const& a, KeyphraseCandidate const& b) {
        if (a.rake_score != b.rake_score) return a.rake_score > b.rake_score;
        return a.phrase < b.phrase;
    });
}

}  // namespace

std::vector<WordToken> word_tokens(std::string_view text) {
    std::vector<WordToken> out;
    bool boundary = false;
    std::size_t i = 0;
    while (i < text.size()) {
        auto const c = static_cast<unsigned char>(text[i]);
        if (is_word_byte(c)) {
            std::string word;
            while (i < text.size()) {
                auto const d = static_cast<unsigned char>(text[i]);
                if (is_word_byte(d)) {
                    word += static_cast<char>(std::tolower(d));
                    ++i;
                } else if ((d == '-' || d == '\'') && i + 1 < text.size() &&
                           is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
                    word += static_cast<char>(d);
                    ++i;
                } else {
                    break;
                }
            }
            out.push_back(WordToken{std::move(word), boundary && !out.empty()});
            boundary = false;
        } else {
            if (std::isspace(c) == 0) boundary = true;
            ++i;
        }
    }
    return out;
}

std::vector<KeyphraseCandidate> rake_candidates(std::string_view text, RakeParams const& params,
                                                StopwordList const& stopwords) {
    params.validate();
    auto const tokens = word_tokens(text);
    RakeAnalysis const a = analyze_rake(tokens, params, stopwords);
    std::vector<KeyphraseCandidate> out;
    for (auto const& [phrase, count] : a.run_frequency) {
        if (count < params.min_occurrences) continue;
        KeyphraseCandidate c;
        c.phrase = phrase;
        c.rake_score = phrase_rake_score(phrase, a);
        c.features = candidate_features(phrase, tokens);
        c.from_rake = true;
        out.push_back(std::move(c));
    }
    sort_candidates(out);
    return out;
}

TextRankResult textrank(std::string_view text, TextRankParams const& params, StopwordList const& stopwords) {
    if (!(params.damping >= 0.0 && params.damping <= 1.0) || params.window < 2 || params.max_iter == 0) {
        throw ConfigError("TextRank needs damping in [0, 1], window >= 2 and max_iter >= 1");
    }
    auto const tokens = word_tokens(text);
    std::vector<std::string> sequence;
    for (auto const& t : tokens) {
        if (is_content(t.text, params.min_char_len, stopwords)) sequence.push_back(t.text);
    }
    TextRankResult result;
    if (sequence.empty()) return result;

    std::map<std::string, std::size_t> ids;
    for (auto const& w : sequence) ids.emplace(w, 0);
    std::vector<std::string> words;
    for (auto& [w, id] : ids) {
        id = words.size();
        words.push_back(w);
    }
    std::size_t const n = words.size();
    std::vector<std::set<std::size_t>> adj(n);
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        for (std::size_t j = i + 1; j < sequence.size() && j - i < params.window; ++j) {
            std::size_t const a = ids[sequence[i]];
            std::size_t const b = ids[sequence[j]];
            if (a == b) continue;
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }

    std::vector<double> score(n, 1.0);
    std::vector<double> next(n);
    result.converged = false;
    for (std::size_t it = 0; it < params.max_iter; ++it) {
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double sum = 0.0;
            for (std::size_t u : adj[v]) sum += score[u] / static_cast<double>(adj[u].size());
            next[v] = (1.0 - params.damping) + params.damping * sum;
            delta = std::max(delta, std::abs(next[v] - score[v]));
        }
        score.swap(next);
        result.iterations = it + 1;
        if (delta < params.tol) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        result.warning = "TextRank did not converge in " + std::to_string(params.max_iter) +
                         " iterations; returning the last iterate";
    }

    for (std::size_t v = 0; v < n; ++v) result.ranked.emplace_back(words[v], score[v]);
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](auto const& a, auto const& b) { return a.second > b.second; });

    auto const keep = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * params.keep_fraction - 1e-12));
    std::set<std::string> keywords;
    for (std::size_t i = 0; i < std::min(keep, n); ++i) keywords.insert(result.ranked[i].first);

    std::set<std::string> seen;
    std::vector<std::string> current;
    auto const flush = [&] {
        if (!current.empty() && current.size() <= params.max_words) {
            std::string const p = join(current, 0, current.size());
            if (seen.insert(p).second) result.phrases.push_back(p);
        }
        current.clear();
    };
    for (auto const& t : tokens) {
        if (t.boundary_before) flush();
        if (keywords.count(t.text) != 0 && is_content(t.text, params.min_char_len, stopwords)) {
            current.push_back(t.text);
        } else {
            flush();
        }
    }
    flush();
    return result;
}

std::string phrase_key(std::string_view phrase) {
    std::string out;
    for (auto const& t : word_tokens(phrase)) {
        if (!out.empty()) out += ' ';
        out += porter_stem(t.text);
    }
    return out;
}

CandidateFeatures candidate_features(std::string_view phrase, std::span<WordToken const> tokens) {
    CandidateFeatures f;
    auto const words = split_words(phrase);
    if (words.empty() || tokens.empty()) return f;
    f.term_length = static_cast<double>(words.size());
    for (auto const& w : words) f.max_word_length = std::max(f.max_word_length, static_cast<double>(w.size()));

    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < words.size() && match; ++k) {
            match = tokens[i + k].text == words[k] && (k == 0 || !tokens[i + k].boundary_before);
        }
        if (match) positions.push_back(i);
    }
    if (positions.empty()) return f;

    double word_freq_sum = 0.0;
    for (auto const& w : words) {
        word_freq_sum += static_cast<double>(
            std::count_if(tokens.begin(), tokens.end(), [&](WordToken const& t) { return t.text == w; }));
    }
    double const n = static_cast<double>(tokens.size());
    f.term_count = static_cast<double>(positions.size());
    f.spread = static_cast<double>(positions.back() - positions.front());
    f.lexical_cohesion = f.term_length * f.term_count / word_freq_sum;
    f.first_occurrence = static_cast<double>(positions.front()) / n;
    f.last_occurrence = static_cast<double>(positions.back()) / n;
    return f;
}

std::vector<KeyphraseCandidate> candidate_pool(std::string_view text, RakeParams const& rake,
                                               bool with_textrank, TextRankParams const& tr,
                                               StopwordList const& stopwords) {
    auto pool = rake_candidates(text, rake, stopwords);
    if (!with_textrank) return pool;

    std::map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < pool.size(); ++i) by_key.emplace(phrase_key(pool[i].phrase), i);

    TextRankParams params = tr;
    params.min_char_len = rake.min_char_len;
    params.max_words = rake.max_words;
    auto const tokens = word_tokens(text);
    RakeAnalysis const a = analyze_rake(tokens, rake, stopwords);
    for (auto const& phrase : textrank(text, params, stopwords).phrases) {
        auto const key = phrase_key(phrase);
        if (auto it = by_key.find(key); it != by_key.end()) {
            pool[it->second].from_textrank = true;
            continue;
        }
        KeyphraseCandidate c;
        c.phrase = phrase;
        c.rake_score = phrase_rake_score(phrase, a);
        c.features = candidate_features(phrase, tokens);
        c.from_textrank = true;
        by_key.emplace(key, pool.size());
        pool.push_back(std::move(c));
    }
    sort_candidates(pool);
    return pool;
}

LabelResult label_candidates(std::span<KeyphraseCandidate> candidates, std::span<std::string const> gold) {
    std::vector<std::vector<std::string>> gold_keys;
    std::set<std::string> all_keys;
    for (auto const& g : gold) {
        std::vector<std::string> keys;
        std::size_t start = 0;
        while (start <= g.size()) {
            std::size_t const plus = g.find('+', start);
            std::string const alt = g.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
            if (auto key = phrase_key(alt); !key.empty()) {
                keys.push_back(key);
                all_keys.insert(key);
            }
            if (plus == std::string::npos) break;
            start = plus + 1;
        }
        gold_keys.push_back(std::move(keys));
    }
    LabelResult result;
    std::set<std::string> matched;
    for (auto& c : candidates) {
        auto const key = phrase_key(c.phrase);
        bool const hit = all_keys.count(key) != 0;
        c.label = hit ? 1 : 0;
        if (hit) {
            ++result.positives;
            matched.insert(key);
        }
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
        bool const found = std::any_of(gold_keys[i].begin(), gold_keys[i].end(),
                                       [&](std::string const& k) { return matched.count(k) != 0; });
        if (!found) result.unmatched_gold.push_back(gold[i]);
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto const e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<KeyphraseDoc> load_semeval_split(std::filesystem::path const& dir, std::string const& split) {
    namespace fs = std::filesystem;
    fs::path const split_dir = dir / split;
    if (!fs::is_directory(split_dir)) throw IoError("missing split directory " + split_dir.string());

    std::optional<fs::path> key_file;
    for (auto const& candidate : {split_dir / (split + ".combined.final"), dir / (split + ".combined.final"),
                                  split_dir / (split + ".combined.stem.final")}) {
        if (fs::exists(candidate)) {
            key_file = candidate;
            break;
        }
    }
    if (!key_file) throw IoError("no key file for split '" + split + "' under " + dir.string());

    std::map<std::string, std::vector<std::string>> keys;
    std::istringstream key_text(read_text_file(*key_file));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(key_text, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto const colon = line.find(':');
        if (colon == std::string::npos) {
            throw FormatError(key_file->string() + ":" + std::to_string(line_no) + ": expected 'ID : phrases'");
        }
        std::vector<std::string> phrases;
        std::istringstream list(line.substr(colon + 1));
        std::string phrase;
        while (std::getline(list, phrase, ',')) {
            if (auto p = trim(phrase); !p.empty()) phrases.push_back(std::move(p));
        }
        keys[trim(line.substr(0, colon))] = std::move(phrases);
    }

    std::vector<KeyphraseDoc> docs;
    for (auto const& entry : fs::directory_iterator(split_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        for (std::string_view suffix : {".txt.final", ".txt"}) {
            if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
                std::string const id = name.substr(0, name.size() - suffix.size());
                if (auto it = keys.find(id); it != keys.end()) {
                    docs.push_back(KeyphraseDoc{id, read_text_file(entry.path()), it->second});
                }
                break;
            }
        }
    }
    if (docs.empty()) throw FormatError("split '" + split + "' has no documents with keys");
    std::sort(docs.begin(), docs.end(), [](auto const& a, auto const& b) { return a.id < b.id; });
    return docs;
}

KeyphraseSplits load_semeval(std::filesystem::path const& dir) {
    KeyphraseSplits s;
    s.train = load_semeval_split(dir, "train");
    s.validation = load_semeval_split(dir, "trial");
    s.test = load_semeval_split(dir, "test");
    return s;
}

KeyphraseSplits split_documents(std::vector<KeyphraseDoc> docs, std::uint64_t seed, std::array<double, 3> weights) {
    double const total = weights[0] + weights[1] + weights[2];
    if (!(weights[0] > 0 && weights[1] >= 0 && weights[2] > 0) || !std::isfinite(total)) {
        throw ConfigError("split weights must be positive");
    }
    if (docs.size() < 3) throw DomainError("need at least 3 documents to split train/validation/test");
    Rng rng(seed);
    rng.shuffle(std::span<KeyphraseDoc>(docs));
    double const n = static_cast<double>(docs.size());
    auto n_train = static_cast<std::size_t>(std::lround(n * weights[0] / total));
    auto n_val = static_cast<std::size_t>(std::lround(n * weights[1] / total));
    n_train = std::clamp<std::size_t>(n_train, 1, docs.size() - 2);
    n_val = std::min(n_val, docs.size() - n_train - 1);
    KeyphraseSplits s;
    auto const mid = docs.begin() + static_cast<std::ptrdiff_t>(n_train);
    auto const end_val = mid + static_cast<std::ptrdiff_t>(n_val);
    s.train.assign(std::make_move_iterator(docs.begin()), std::make_move_iterator(mid));
    s.validation.assign(std::make_move_iterator(mid), std::make_move_iterator(end_val));
    s.test.assign(std::make_move_iterator(end_val), std::make_move_iterator(docs.end()));
    return s;
}

CandidateRows candidate_rows(std::span<KeyphraseDoc const> docs, RakeParams const& rake, bool with_textrank) {
    CandidateRows rows;
    for (auto const& doc : docs) {
        auto pool = candidate_pool(doc.text, rake, with_textrank);
        auto const labels = label_candidates(pool, doc.gold);
        rows.gold_total += doc.gold.size();
        rows.gold_matched += doc.gold.size() - labels.unmatched_gold.size();
        for (auto const& c : pool) {
            auto const f = c.features.to_array();
            rows.x.add_row(f);
            rows.y.push_back(*c.label);
        }
    }
    return rows;
}

namespace {

bool both_classes(std::vector<int> const& y) {
    return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

}  // namespace

RerankerReport train_reranker(KeyphraseSplits const& splits, RerankerOptions const& options) {
    options.rake.validate();
    CandidateRows const train = candidate_rows(splits.train, options.rake, options.with_textrank);
    CandidateRows const val = candidate_rows(splits.validation, options.rake, options.with_textrank);
    CandidateRows const test = candidate_rows(splits.test, options.rake, options.with_textrank);
    if (train.y.empty()) throw DomainError("no keyphrase candidates in the training documents");

    RerankerReport report;
    report.train_docs = splits.train.size();
    report.validation_docs = splits.validation.size();
    report.test_docs = splits.test.size();
    report.train_rows = train.y.size();
    report.validation_rows = val.y.size();
    report.test_rows = test.y.size();
    report.test_gold_recall =
        test.gold_total == 0 ? 0.0 : static_cast<double>(test.gold_matched) / static_cast<double>(test.gold_total);

    auto grid = options.grid;
    if (grid.empty() || !both_classes(val.y)) grid = {{options.forest.max_depth, options.forest.min_samples_leaf}};
    std::optional<double> best_auc;
    for (auto const& [depth, leaf] : grid) {
        ForestConfig cfg = options.forest;
        cfg.max_depth = depth;
        cfg.min_samples_leaf = leaf;
        ForestModel model = train_forest(train.x, train.y, cfg, options.seed);
        std::optional<double> val_auc;
        if (both_classes(val.y)) val_auc = auc(predict_p1(model, val.x), val.y);
        bool const take = report.model.trees.empty() || (val_auc && (!best_auc || *val_auc > *best_auc));
        if (take) {
            best_auc = val_auc;
            report.model = std::move(model);
        }
    }
    report.validation_auc = best_auc;
    report.warning = report.model.warning;
    if (!test.y.empty()) {
        report.test_scores = predict_p1(report.model, test.x);
        report.test_labels = test.y;
        if (both_classes(test.y)) report.test_auc = auc(report.test_scores, report.test_labels);
    }
    return report;
}

// ---------------------------------------------------------------------------

std::vector<KeyphraseCandidate> extract_keyphrases(std::string_view text, ForestModel const& model,
                                                   std::size_t top_n, KeyphraseSelection const& sel) {
    if (top_n == 0) return {};
    auto pool = candidate_pool(text, sel.rake, sel.with_textrank);
    for (auto& c : pool) {
        auto const f = c.features.to_array();
        c.p1 = predict_proba(model, f)[1];
    }
    std::sort(pool.begin(), pool.end(), [](KeyphraseCandidate const& a, KeyphraseCandidate const& b) {
        if (*a.p1 != *b.p1) return *a.p1 > *b.p1;
        if (a.rake_score != b.rake_score) return a.rake_score > b.rake_score;
        return a.phrase < b.phrase;
    });
    if (pool.size() > top_n) pool.resize(top_n);
    return pool;
}

std::string keyphrase_text(DocumentRecord const& doc) {
    if (doc.abstract.empty()) return doc.title;
    if (doc.title.empty()) return doc.abstract;
    return doc.title + ". " + doc.abstract;
}

std::vector<KeyphraseCandidate> document_keyphrases(DocumentRecord const& doc, ForestModel const& model,
                                                    KeyphraseSelection const& sel) {
    auto all = extract_keyphrases(keyphrase_text(doc), model, std::numeric_limits<std::size_t>::max(), sel);
    std::vector<KeyphraseCandidate> out;
    for (auto& c : all) {
        if (out.size() >= sel.top_n) break;
        if (*c.p1 >= sel.threshold) out.push_back(std::move(c));
    }
    return out;
}

KeyphraseStats corpus_keyphrase_stats(std::span<DocumentRecord const> docs, ForestModel const& model,
                                      KeyphraseSelection const& sel) {
    KeyphraseStats s;
    s.documents = docs.size();
    for (auto const& doc : docs) {
        for (auto const& c : document_keyphrases(doc, model, sel)) {
            auto const words = static_cast<std::size_t>(c.features.term_length);
            ++s.total;
            ++s.by_words[std::clamp<std::size_t>(words, 1, 6)];
        }
        auto const tokens = word_tokens(keyphrase_text(doc));
        s.filtered_long += analyze_rake(tokens, sel.rake, StopwordList::builtin()).long_runs;
    }
    return s;
}

std::string format_stats_table(KeyphraseStats const& s) {
    auto const grouped = [](std::size_t v) {
        std::string digits = std::to_string(v);
        std::string out;
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
            out += digits[i];
        }
        return out;
    };
    char avg[32];
    std::snprintf(avg, sizeof(avg), "%.3f", s.average());
    std::ostringstream out;
    out << "Keywords summary\tCounts\n"
        << "Number of documents\t" << grouped(s.documents) << '\n'
        << "Total keyphrases from abstract and title\t" << grouped(s.total) << '\n'
        << "Avg keyphrases per document\t" << avg << '\n'
        << "Keyphrases with one word\t" << grouped(s.by_words[1]) << '\n'
        << "Keyphrases with two words\t" << grouped(s.by_words[2]) << '\n'
        << "Keyphrases with three words\t" << grouped(s.by_words[3]) << '\n'
        << "Keyphrases with four words\t" << grouped(s.by_words[4]) << '\n'
        << "Keyphrases with five words\t" << grouped(s.by_words[5]) << '\n'
        << "Keyphrases with more than five words\t" << grouped(s.by_words[6]) << '\n'
        << "Phrases filtered for exceeding the word limit\t" << grouped(s.filtered_long) << '\n';
    return out.str();
}

Popularity popularity_by_year(std::span<DocumentRecord const> docs, ForestModel const& model,
                              KeyphraseSelection const& sel) {
    Popularity out;
    for (auto const& doc : docs) {
        std::string const year = doc.date.year > 0 ? std::to_string(doc.date.year) : "unknown";
        for (auto const& c : document_keyphrases(doc, model, sel)) ++out[c.phrase][year];
    }
    return out;
}

std::string format_predictions(std::span<PredictionRow const> rows) {
    std::string out = "document\tkeyword\tprobability\tprobability_tf\tlabel\n";
    for (auto const& r : rows) {
        out += r.document + '\t' + r.keyword + "\t[" + format_double(r.p0) + ',' + format_double(r.p1) + "]\t" +
               (r.probability_tf ? "true" : "false") + '\t' + (r.label ? std::to_string(*r.label) : "") + '\n';
    }
    return out;
}

}  // namespace eileen
