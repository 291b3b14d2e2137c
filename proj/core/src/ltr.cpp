#include "eileen/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"
#include "eileen/rng.hpp"
#include "eileen/util.hpp"

namespace eileen {

using nlohmann::json;

VariantConfig variant_config(Variant v) {
    std::vector<std::size_t> all(kLtrFeatureCount);
    for (std::size_t i = 0; i < kLtrFeatureCount; ++i) all[i] = i;
    switch (v) {
        case Variant::all12: return {v, "all12", all};
        case Variant::no_es_score: {
            all.erase(all.begin() + 6);
            return {v, "no_es_score", all};
        }
        case Variant::no_library_cosine: {
            all.pop_back();
            return {v, "no_library_cosine", all};
        }
        case Variant::es_only: return {v, "es_only", {6}};
        case Variant::es_plus_library: return {v, "es_plus_library", {6, 11}};
    }
    throw ConfigError("unknown variant");
}

std::vector<VariantConfig> all_variants() {
    return {variant_config(Variant::all12), variant_config(Variant::no_es_score),
            variant_config(Variant::no_library_cosine), variant_config(Variant::es_only),
            variant_config(Variant::es_plus_library)};
}

Variant parse_variant(std::string_view name) {
    for (auto const& v : all_variants()) {
        if (v.name == name) return v.variant;
    }
    throw ConfigError("unknown LTR variant '" + std::string(name) +
                      "' (expected all12, no_es_score, no_library_cosine, es_only or es_plus_library)");
}

// ---------------------------------------------------------------------------

namespace {

std::string joined_names(DocumentRecord const& doc) {
    std::string out;
    for (auto const& s : doc.scientists) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

using TermWeights = std::map<std::string, double>;

double distance(TermWeights const& a, TermWeights const& b) {
    double na = 0.0;
    double nb = 0.0;
    double dot = 0.0;
    for (auto const& [t, w] : a) na += w * w;
    for (auto const& [t, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 1.0;
    for (auto const& [t, w] : a) {
        if (auto it = b.find(t); it != b.end()) dot += w * it->second;
    }
    double const cos = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(1.0 - cos, 0.0, 1.0);
}

double clamp_distance(double d) { return std::clamp(d, 0.0, 1.0); }

}  // namespace

std::array<double, 4> pair_field_distances(std::string_view query, DocumentRecord const& doc,
                                           Tokenizer const& tokenizer) {
    std::array<std::vector<std::string>, 5> fields = {
        tokenizer.tokenize(query), tokenizer.tokenize(doc.title), tokenizer.tokenize(joined_names(doc)),
        tokenizer.tokenize(doc.venue), tokenizer.tokenize(doc.abstract)};
    std::array<std::map<std::string, std::uint64_t>, 5> tf;
    std::map<std::string, std::uint64_t> df;
    for (std::size_t f = 0; f < 5; ++f) {
        for (auto const& t : fields[f]) ++tf[f][t];
        for (auto const& [t, _] : tf[f]) ++df[t];
    }
    std::array<TermWeights, 5> vec;
    for (std::size_t f = 0; f < 5; ++f) {
        for (auto const& [t, count] : tf[f]) {
            double const w = tfidf_weight(count, df[t], 5);
            if (w > 0.0) vec[f][t] = w;
        }
    }
    return {distance(vec[0], vec[1]), distance(vec[0], vec[2]), distance(vec[0], vec[3]), distance(vec[0], vec[4])};
}

std::array<double, kLtrFeatureCount> extract_features(std::string_view query, DocumentRecord const& doc,
                                                      double search_score, TopicVector const& library_topic,
                                                      Tokenizer const& tokenizer, Vocabulary const* corpus_vocab) {
    std::array<double, kLtrFeatureCount> f{};
    f[0] = static_cast<double>(word_count(query));
    f[1] = static_cast<double>(word_count(doc.title));
    double authors = 0.0;
    for (auto const& s : doc.scientists) authors += static_cast<double>(word_count(s));
    f[2] = authors;
    f[3] = static_cast<double>(word_count(doc.venue));
    f[4] = static_cast<double>(word_count(doc.abstract));
    f[5] = static_cast<double>(doc.date.year);
    f[6] = search_score;
    if (corpus_vocab != nullptr) {
        auto const q = vectorize_text(query, *corpus_vocab, tokenizer);
        f[7] = clamp_distance(cosine_distance(q, vectorize_text(doc.title, *corpus_vocab, tokenizer)));
        f[8] = clamp_distance(cosine_distance(q, vectorize_text(joined_names(doc), *corpus_vocab, tokenizer)));
        f[9] = clamp_distance(cosine_distance(q, vectorize_text(doc.venue, *corpus_vocab, tokenizer)));
        f[10] = clamp_distance(cosine_distance(q, vectorize_text(doc.abstract, *corpus_vocab, tokenizer)));
    } else {
        auto const d = pair_field_distances(query, doc, tokenizer);
        std::copy(d.begin(), d.end(), f.begin() + 7);
    }
    if (doc.topic_norm && library_topic.size() == doc.topic_norm->size()) {
        f[11] = clamp_distance(cosine_distance(*doc.topic_norm, library_topic));
    } else {
        f[11] = 1.0;
    }
    return f;
}

std::vector<FeatureRow> build_dataset(std::span<PreferenceEvent const> events, Corpus const& corpus,
                                      InvertedIndex const& index, Tokenizer const& tokenizer,
                                      FeatureOptions const& options, std::size_t page_size,
                                      Vocabulary const* corpus_vocab) {
    if (options.corpus_idf && corpus_vocab == nullptr) {
        throw ConfigError("corpus-level idf for LTR features needs a vocabulary");
    }
    Vocabulary const* vocab = options.corpus_idf ? corpus_vocab : nullptr;

    std::vector<std::string> users;
    std::map<std::string, std::vector<PreferenceEvent const*>> by_user;
    for (auto const& e : events) {
        auto& list = by_user[e.user_id];
        if (list.empty()) users.push_back(e.user_id);
        list.push_back(&e);
    }

    std::size_t const k = topic_dimension(corpus);
    std::vector<FeatureRow> rows;
    for (auto const& user : users) {
        auto const& ev = by_user[user];
        LibraryState state;
        state.library_topic = TopicVector::zeros(k);
        std::size_t i = 0;
        while (i < ev.size()) {
            if (ev[i]->action != Action::search_shown) {
                state = apply_event(std::move(state), *ev[i], corpus);
                ++i;
                continue;
            }
            PreferenceEvent const& head = *ev[i];
            LibraryState const at_search = state;
            std::vector<DocId> shown;
            std::size_t j = i;
            for (; j < ev.size() && ev[j]->action == Action::search_shown && ev[j]->query == head.query &&
                   ev[j]->timestamp == head.timestamp;
                 ++j) {
                if (ev[j]->doc_id && std::find(shown.begin(), shown.end(), *ev[j]->doc_id) == shown.end() &&
                    shown.size() < page_size) {
                    shown.push_back(*ev[j]->doc_id);
                }
                state = apply_event(std::move(state), *ev[j], corpus);
            }
            for (; j < ev.size() && ev[j]->action != Action::search_shown; ++j) {
                state = apply_event(std::move(state), *ev[j], corpus);
            }
            i = j;

            auto const terms = tokenizer.tokenize(head.query);
            for (DocId id : shown) {
                if (state.irrelevant.count(id) != 0) continue;
                int const label = state.relevant.count(id) != 0 ? 1 : 0;
                DocumentRecord const& doc = corpus.at(id);
                TopicVector library;
                if (label == 1 && options.leave_one_out) {
                    auto others = at_search.relevant;
                    others.erase(id);
                    library = mean_topic(others, corpus, k);
                } else if (label == 1) {
                    library = state.library_topic;
                } else {
                    library = at_search.library_topic;
                }
                FeatureRow row;
                row.features = extract_features(head.query, doc, bm25_score(terms, id, index), library,
                                                tokenizer, vocab);
                row.label = label;
                row.user_id = user;
                row.query = head.query;
                row.doc_id = id;
                row.timestamp = head.timestamp;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

UserSplit split_users(std::span<FeatureRow const> rows, std::uint64_t seed) {
    std::set<std::string> unique;
    for (auto const& r : rows) unique.insert(r.user_id);
    if (unique.size() < 4) {
        throw DomainError("need ≥ 2 users for 4:1 split on each side (found " + std::to_string(unique.size()) +
                          " user" + (unique.size() == 1 ? "" : "s") + ", at least 4 required)");
    }
    std::vector<std::string> users(unique.begin(), unique.end());
    Rng rng(Rng::derive(seed, 0x5EED));
    rng.shuffle(std::span<std::string>(users));
    auto const n_test = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(static_cast<double>(users.size()) / 5.0)));
    UserSplit split;
    split.test_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_test), users.end());
    std::sort(split.test_users.begin(), split.test_users.end());
    std::sort(split.train_users.begin(), split.train_users.end());
    return split;
}

FeatureMatrix variant_matrix(std::span<FeatureRow const> rows, VariantConfig const& variant) {
    FeatureMatrix x(variant.features.size());
    std::vector<double> buf(variant.features.size());
    for (auto const& r : rows) {
        for (std::size_t i = 0; i < variant.features.size(); ++i) buf[i] = r.features[variant.features[i]];
        x.add_row(buf);
    }
    return x;
}

LtrReport train_and_evaluate(std::span<FeatureRow const> rows, Variant variant, UserSplit const& split,
                             std::uint64_t seed, ForestConfig const& forest) {
    std::set<std::string> const test_users(split.test_users.begin(), split.test_users.end());
    for (auto const& u : split.train_users) {
        if (test_users.count(u) != 0) throw ValidationError("user '" + u + "' appears on both sides of the split");
    }
    std::vector<FeatureRow> train;
    std::vector<FeatureRow> test;
    for (auto const& r : rows) (test_users.count(r.user_id) != 0 ? test : train).push_back(r);

    auto const labels = [](std::vector<FeatureRow> const& rs) {
        std::vector<int> y;
        y.reserve(rs.size());
        for (auto const& r : rs) y.push_back(r.label);
        return y;
    };
    std::vector<int> const y_train = labels(train);
    std::vector<int> const y_test = labels(test);
    auto const has_both = [](std::vector<int> const& y) {
        return std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
    };
    if (!has_both(y_train) || !has_both(y_test)) {
        throw DomainError("each side of the user split needs both relevant and unvoted rows");
    }

    VariantConfig const cfg = variant_config(variant);
    LtrReport report;
    report.variant = std::string(cfg.name);
    report.model = train_forest(variant_matrix(train, cfg), y_train, forest, Rng::derive(seed, 1));
    std::vector<double> const scores = predict_p1(report.model, variant_matrix(test, cfg));
    report.auc = auc(scores, y_test);
    report.roc = roc_curve(scores, y_test);
    for (std::size_t i = 0; i < cfg.features.size(); ++i) {
        report.importances.emplace_back(std::string(kLtrFeatureNames[cfg.features[i]]),
                                        report.model.feature_importances[i]);
    }
    report.train_rows = train.size();
    report.test_rows = test.size();
    report.train_users = split.train_users.size();
    report.test_users = split.test_users.size();
    return report;
}

LtrReport train_and_evaluate(std::span<FeatureRow const> rows, Variant variant, std::uint64_t seed,
                             ForestConfig const& forest) {
    return train_and_evaluate(rows, variant, split_users(rows, seed), seed, forest);
}

std::vector<LtrReport> evaluate_variants(std::span<FeatureRow const> rows, std::uint64_t seed,
                                         ForestConfig const& forest) {
    UserSplit const split = split_users(rows, seed);
    std::vector<LtrReport> out;
    for (auto const& v : all_variants()) out.push_back(train_and_evaluate(rows, v.variant, split, seed, forest));
    return out;
}

std::vector<RerankedHit> rerank_search(std::span<SearchHit const> hits, ForestModel const& model,
                                       Variant variant, std::string_view query, Corpus const& corpus,
                                       TopicVector const& library_topic, Tokenizer const& tokenizer) {
    VariantConfig const cfg = variant_config(variant);
    if (model.n_features != cfg.features.size()) {
        throw ValidationError("model expects " + std::to_string(model.n_features) + " features but variant " +
                              std::string(cfg.name) + " has " + std::to_string(cfg.features.size()));
    }
    std::vector<RerankedHit> out;
    std::vector<double> buf(cfg.features.size());
    for (auto const& hit : hits) {
        auto const f = extract_features(query, corpus.at(hit.doc_id), hit.score, library_topic, tokenizer);
        for (std::size_t i = 0; i < cfg.features.size(); ++i) buf[i] = f[cfg.features[i]];
        out.push_back(RerankedHit{hit, predict_proba(model, buf)[1]});
    }
    std::stable_sort(out.begin(), out.end(), [](RerankedHit const& a, RerankedHit const& b) {
        if (a.p1 != b.p1) return a.p1 > b.p1;
        return a.hit.rank < b.hit.rank;
    });
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string clean_field(std::string s) {
    for (char& c : s) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

std::vector<std::string> split_tabs(std::string const& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto const tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string dataset_header() {
    std::string h = "user_id\tquery\tdoc_id\ttimestamp\tlabel";
    for (auto name : kLtrFeatureNames) {
        h += '\t';
        h += name;
    }
    return h;
}

}  // namespace

std::string format_dataset(std::span<FeatureRow const> rows) {
    std::string out = dataset_header() + '\n';
    for (auto const& r : rows) {
        out += clean_field(r.user_id) + '\t' + clean_field(r.query) + '\t' + std::to_string(r.doc_id) + '\t' +
               std::to_string(r.timestamp) + '\t' + std::to_string(r.label);
        for (double v : r.features) out += '\t' + format_double(v);
        out += '\n';
    }
    return out;
}

std::vector<FeatureRow> parse_dataset(std::string const& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != dataset_header()) throw FormatError("LTR dataset header mismatch");
    std::vector<FeatureRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto const cols = split_tabs(line);
        if (cols.size() != 5 + kLtrFeatureCount) {
            throw FormatError("LTR dataset line " + std::to_string(line_no) + " has " + std::to_string(cols.size()) +
                              " columns");
        }
        FeatureRow r;
        try {
            r.user_id = cols[0];
            r.query = cols[1];
            r.doc_id = std::stoll(cols[2]);
            r.timestamp = std::stoll(cols[3]);
            r.label = std::stoi(cols[4]);
        } catch (std::exception const&) {
            throw FormatError("LTR dataset line " + std::to_string(line_no) + " is malformed");
        }
        for (std::size_t i = 0; i < kLtrFeatureCount; ++i) r.features[i] = parse_double(cols[5 + i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void save_dataset(std::span<FeatureRow const> rows, std::filesystem::path const& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_dataset(rows);
}

std::vector<FeatureRow> load_dataset(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str());
}

std::string format_ltr_report(std::span<LtrReport const> reports) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %8s %10s %9s %11s %10s\n", "variant", "auc", "train_rows", "test_rows",
                  "train_users", "test_users");
    out << line;
    for (auto const& r : reports) {
        std::snprintf(line, sizeof(line), "%-18s %8.4f %10zu %9zu %11zu %10zu\n", r.variant.c_str(), r.auc,
                      r.train_rows, r.test_rows, r.train_users, r.test_users);
        out << line;
    }
    for (auto const& r : reports) {
        out << "\nfeature importances (" << r.variant << ")\n";
        auto sorted = r.importances;
        std::stable_sort(sorted.begin(), sorted.end(), [](auto const& a, auto const& b) { return a.second > b.second; });
        for (auto const& [name, value] : sorted) {
            std::snprintf(line, sizeof(line), "  %-20s %.4f\n", name.c_str(), value);
            out << line;
        }
    }
    return out.str();
}

std::string format_importance_csv(std::span<LtrReport const> reports) {
    std::string out = "variant,feature,importance\n";
    for (auto const& r : reports) {
        for (auto const& [name, value] : r.importances) out += r.variant + ',' + name + ',' + format_double(value) + '\n';
    }
    return out;
}

json ltr_report_json(std::span<LtrReport const> reports) {
    json out = json::array();
    for (auto const& r : reports) {
        json imp = json::object();
        for (auto const& [name, value] : r.importances) imp[name] = value;
        out.push_back({{"variant", r.variant},
                       {"auc", r.auc},
                       {"importances", imp},
                       {"train_rows", r.train_rows},
                       {"test_rows", r.test_rows},
                       {"train_users", r.train_users},
                       {"test_users", r.test_users}});
    }
    return out;
}

}  // namespace eileen
