#include "eileen/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string_view>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"
#include "eileen/rng.hpp"
#include "eileen/util.hpp"

namespace eileen {

using nlohmann::json;

namespace {

struct Topic {
    std::vector<std::string_view> phrases;
    std::vector<std::string_view> venues;
    std::string_view agency;
    std::string_view organization;
    std::string_view city;
    std::string_view country;
};

std::vector<Topic> const& topics() {
    static std::vector<Topic> const t = {
        {{"malaria transmission", "anopheles mosquito", "plasmodium falciparum", "parasite density", "bed nets",
          "vector control", "antimalarial drug resistance", "fever incidence", "rainfall seasonality",
          "mosquito breeding sites", "artemisinin therapy", "endemic villages", "british guiana", "larval habitats"},
         {"Malaria Journal", "Tropical Medicine Reports"},
         "NIH", "Institute of Tropical Medicine", "Antwerp", "Belgium"},
        {{"gene expression", "genome sequencing", "transcription factor", "chromatin accessibility",
          "single cell rna", "variant calling", "copy number variation", "regulatory elements",
          "methylation patterns", "genome assembly", "splicing isoforms", "allele frequency", "crispr screens",
          "sequencing reads"},
         {"Genome Research", "Nucleic Acids Research"},
         "NIH", "Broad Genomics Center", "Cambridge", "USA"},
        {{"cortical neurons", "synaptic plasticity", "hippocampal memory", "dopamine signaling", "neural circuits",
          "spike trains", "visual cortex", "working memory", "functional mri", "axon guidance", "glial cells",
          "motor learning", "sleep spindles", "neurotransmitter release"},
         {"Journal of Neuroscience", "Neuron"},
         "NIH", "Brain Research Institute", "Zurich", "Switzerland"},
        {{"sea surface temperature", "carbon dioxide", "ice sheet melting", "ocean circulation",
          "precipitation extremes", "climate models", "greenhouse gas emissions", "arctic amplification",
          "drought frequency", "aerosol forcing", "sea level rise", "monsoon variability", "permafrost thaw",
          "heat waves"},
         {"Journal of Climate", "Geophysical Research Letters"},
         "NSF", "Center for Atmospheric Research", "Boulder", "USA"},
        {{"labor market", "minimum wage", "monetary policy", "inflation expectations", "household consumption",
          "trade tariffs", "income inequality", "interest rates", "fiscal stimulus", "unemployment insurance",
          "firm productivity", "housing prices", "credit constraints", "wage growth"},
         {"American Economic Review", "Journal of Labor Economics"},
         "NSF", "Bureau of Economic Studies", "Chicago", "USA"},
        {{"thin films", "crystal lattice", "grain boundaries", "polymer composites", "thermal conductivity",
          "perovskite solar cells", "tensile strength", "alloy microstructure", "lithium battery cathodes",
          "nanoparticle synthesis", "surface coatings", "fracture toughness", "semiconductor doping",
          "phase transitions"},
         {"Acta Materialia", "Advanced Materials"},
         "DOE", "National Materials Laboratory", "Oak Ridge", "USA"},
        {{"neural networks", "gradient descent", "reinforcement learning", "convolutional layers", "training data",
          "model generalization", "feature selection", "support vector machines", "transfer learning",
          "language models", "decision trees", "loss functions", "attention mechanisms", "hyperparameter tuning"},
         {"Journal of Machine Learning Research", "Neural Computation"},
         "NSF", "Institute for Learning Systems", "Toronto", "Canada"},
        {{"tumor growth", "breast cancer", "chemotherapy response", "immune checkpoint inhibitors",
          "metastatic disease", "radiation therapy", "tumor microenvironment", "cancer stem cells",
          "overall survival", "targeted therapy", "biopsy samples", "lymph node involvement", "oncogene mutations",
          "clinical trials"},
         {"Cancer Research", "Journal of Clinical Oncology"},
         "NIH", "Comprehensive Cancer Center", "Houston", "USA"},
    };
    return t;
}

constexpr std::string_view kGenericPhrases[] = {
    "baseline model", "sample size", "statistical analysis", "data collection", "follow-up study",
    "control group", "error rate", "measurement protocol", "sensitivity analysis", "pilot study"};

constexpr std::string_view kGenericAdjectives[] = {
    "large", "longitudinal", "comparative", "multicenter", "national", "regional", "statistical",
    "computational", "retrospective", "prospective"};

constexpr std::string_view kFirstNames[] = {
    "Ana", "Ben", "Chen", "Dara", "Elif", "Femi", "Goran", "Hana", "Ivo", "Jun", "Kofi", "Lena",
    "Mateo", "Nora", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tara", "Umar", "Vera", "Wei", "Yara"};

constexpr std::string_view kSurnames[] = {
    "Abara", "Brandt", "Castillo", "Dube", "Eriksen", "Fonseca", "Gupta", "Haddad", "Ito", "Jensen",
    "Kowalski", "Larsen", "Moreau", "Nakamura", "Okafor", "Petrov", "Quispe", "Rossi", "Sato", "Tanaka",
    "Ueda", "Varga", "Weber", "Xu", "Yilmaz", "Zhang", "Amari", "Bianchi", "Costa", "Diaz", "Engel", "Ferreira"};

template <typename Seq>
auto const& pick(Rng& rng, Seq const& seq) {
    return seq[rng.below(std::size(seq))];
}

std::string capitalized(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string fill(std::string_view pattern, Rng& rng, Topic const& topic, double p_topic) {
    std::string out;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] == '{' && i + 2 < pattern.size() && pattern[i + 2] == '}') {
            char const slot = pattern[i + 1];
            if (slot == 'P') {
                out += rng.bernoulli(p_topic) ? pick(rng, topic.phrases) : pick(rng, kGenericPhrases);
            } else {
                out += pick(rng, kGenericAdjectives);
            }
            i += 2;
        } else {
            out += pattern[i];
        }
    }
    return out;
}

constexpr std::string_view kTitlePatterns[] = {
    "{P} and {P} in {A} cohorts", "On the {P} of {P}", "{P}: a {A} study of {P}",
    "Effects of {P} on {P}", "{A} evidence linking {P} and {P}"};

constexpr std::string_view kSentencePatterns[] = {
    "We study {P} and {P} in a {A} setting.",
    "The {P} of {P} was measured across {A} samples.",
    "Our results show that {P} improves {P}.",
    "These findings suggest a role for {P} in {P}.",
    "A {A} analysis of {P} is presented.",
    "Here we report {P} data from {A} experiments on {P}.",
    "We compare {P} with {P} and discuss {P}.",
    "Changes in {P} were associated with {P}."};

}  // namespace

std::size_t synth_topic_count() noexcept { return topics().size(); }

SynthCorpus generate_corpus(SynthCorpusOptions const& options) {
    if (options.n_docs == 0) throw DomainError("corpus size must be positive");
    if (options.last_year < options.first_year) throw ConfigError("last_year precedes first_year");
    auto const& ts = topics();
    Rng rng(options.seed);

    // Six-person lab per topic.
    std::vector<std::vector<std::string>> labs(ts.size());
    for (auto& lab : labs) {
        while (lab.size() < 6) {
            std::string name = std::string(pick(rng, kFirstNames)) + " " + std::string(pick(rng, kSurnames));
            if (std::find(lab.begin(), lab.end(), name) == lab.end()) lab.push_back(std::move(name));
        }
    }

    struct Draft {
        DocumentRecord doc;
        std::size_t topic;
    };
    std::vector<Draft> pubs;
    std::vector<Draft> grants;
    for (std::size_t i = 0; i < options.n_docs; ++i) {
        std::size_t const t = i % ts.size();
        Topic const& topic = ts[t];
        DocumentRecord d;
        bool const grant = rng.bernoulli(options.grant_share);
        d.title = capitalized(fill(pick(rng, kTitlePatterns), rng, topic, 0.9));
        std::size_t const n_sentences = 4 + rng.below(4);
        for (std::size_t s = 0; s < n_sentences; ++s) {
            if (s > 0) d.abstract += ' ';
            d.abstract += fill(pick(rng, kSentencePatterns), rng, topic, 0.8);
        }
        std::size_t const n_authors = 2 + rng.below(3);
        std::vector<std::string> pool = labs[t];
        rng.shuffle(std::span<std::string>(pool));
        d.scientists.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_authors));
        d.organizations.emplace_back(topic.organization);
        int const year = options.first_year + static_cast<int>(rng.below(
                                                  static_cast<std::uint64_t>(options.last_year - options.first_year + 1)));
        int const month = 1 + static_cast<int>(rng.below(12));
        int const day = 1 + static_cast<int>(rng.below(28));
        d.date = Date{year, month, day};
        d.city = std::string(topic.city);
        d.country = std::string(topic.country);
        if (grant) {
            d.source = Source::federal_exporter;
            d.doc_type = DocType::grant;
            d.venue = std::string(topic.agency);
            d.end_date = Date{year + 3, month, day};
            grants.push_back({std::move(d), t});
        } else {
            d.source = Source::pubmed;
            d.venue = std::string(pick(rng, topic.venues));
            pubs.push_back({std::move(d), t});
        }
    }

    SynthCorpus out;
    DocId next = 0;
    for (auto& draft : pubs) {
        draft.doc.id = next;
        draft.doc.source_id = std::to_string(30'000'000 + next);
        draft.doc.other_ids["pmid"] = draft.doc.source_id;
        draft.doc.other_ids["doi"] = "10.5555/synth." + std::to_string(next);
        ++next;
        out.docs.push_back(std::move(draft.doc));
        out.topics.push_back(draft.topic);
    }
    for (auto& draft : grants) {
        draft.doc.id = next;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "R01-%06u", static_cast<unsigned>(next));
        draft.doc.source_id = buf;
        ++next;
        out.docs.push_back(std::move(draft.doc));
        out.topics.push_back(draft.topic);
    }
    return out;
}

void write_source_files(SynthCorpus const& corpus, std::filesystem::path const& dir) {
    std::string pubmed;
    std::string exporter;
    for (auto const& d : corpus.docs) {
        json j;
        if (d.doc_type == DocType::grant) {
            j["project_number"] = d.source_id;
            j["project_title"] = d.title;
            j["agency"] = d.venue;
            j["abstract_text"] = d.abstract;
            j["pi_names"] = d.scientists;
            if (!d.organizations.empty()) j["org_name"] = d.organizations.front();
            j["project_start"] = d.date.to_iso();
            if (d.end_date) j["project_end"] = d.end_date->to_iso();
            if (d.city) j["org_city"] = *d.city;
            if (d.country) j["org_country"] = *d.country;
            exporter += j.dump() + "\n";
        } else {
            j["pmid"] = d.source_id;
            j["title"] = d.title;
            j["journal"] = d.venue;
            j["abstract"] = d.abstract;
            j["authors"] = d.scientists;
            j["affiliations"] = d.organizations;
            j["pub_date"] = d.date.to_iso();
            if (d.city) j["city"] = *d.city;
            if (d.country) j["country"] = *d.country;
            if (auto it = d.other_ids.find("doi"); it != d.other_ids.end()) j["doi"] = it->second;
            pubmed += j.dump() + "\n";
        }
    }
    write_text_file(dir / "pubmed.jsonl", pubmed);
    write_text_file(dir / "federal_exporter.jsonl", exporter);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> title_words(std::string_view title, StopwordList const& stopwords) {
    std::vector<std::string> out;
    for (auto const& w : word_tokens(title)) {
        bool const has_alpha = std::any_of(w.text.begin(), w.text.end(),
                                           [](unsigned char c) { return std::isalpha(c) != 0; });
        if (w.text.size() < 3 || !has_alpha || stopwords.contains(w.text)) continue;
        if (std::find(out.begin(), out.end(), w.text) == out.end()) out.push_back(w.text);
    }
    return out;
}

}  // namespace

std::vector<PreferenceEvent> simulate_users(Corpus const& corpus, InvertedIndex const& index,
                                            Tokenizer const& tokenizer, SimulationOptions const& options) {
    if (options.pivot_last < options.pivot_first) throw ConfigError("pivot_last precedes pivot_first");
    std::vector<DocumentRecord const*> topical;
    for (auto const& d : corpus.records()) {
        if (d.topic_norm && !d.topic_norm->is_zero()) topical.push_back(&d);
    }
    if (topical.empty()) throw PreconditionError("corpus has no topic vectors; run fit-lsa before simulate-users");

    auto const n_liked = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(options.liked_fraction * static_cast<double>(topical.size()))));
    auto const records = corpus.records();

    std::vector<PreferenceEvent> events;
    std::int64_t clock = options.start_time;
    for (std::size_t u = 0; u < options.n_users; ++u) {
        Rng rng(Rng::derive(options.seed, u));
        char name[32];
        std::snprintf(name, sizeof(name), "sim-user-%02zu", u + 1);
        std::string const user = name;

        DocumentRecord const& anchor = *topical[rng.below(topical.size())];
        std::vector<std::pair<double, DocId>> by_distance;
        by_distance.reserve(topical.size());
        for (auto const* d : topical) {
            by_distance.emplace_back(cosine_distance(*anchor.topic_norm, *d->topic_norm), d->id);
        }
        std::sort(by_distance.begin(), by_distance.end());
        std::vector<DocId> liked;
        for (std::size_t i = 0; i < n_liked; ++i) liked.push_back(by_distance[i].second);
        std::set<DocId> const liked_set(liked.begin(), liked.end());
        int const pivot = options.pivot_first +
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(options.pivot_last - options.pivot_first + 1)));

        std::set<DocId> voted;
        for (std::size_t s = 0; s < options.searches_per_user; ++s) {
            DocumentRecord const& source = rng.bernoulli(options.p_query_liked)
                                               ? corpus.at(liked[rng.below(liked.size())])
                                               : records[rng.below(records.size())];
            auto words = title_words(source.title, tokenizer.stopwords());
            if (words.empty()) continue;
            std::string query;
            if (words.size() == 1) {
                query = words[0];
            } else {
                std::size_t i = rng.below(words.size());
                std::size_t j = rng.below(words.size() - 1);
                if (j >= i) ++j;
                if (j < i) std::swap(i, j);
                query = words[i] + " " + words[j];
            }
            auto const hits = search(query, index, tokenizer, options.page_size);
            // Every hit of one search shares the search's timestamp.
            for (auto const& hit : hits) {
                events.push_back(PreferenceEvent{user, hit.doc_id, Action::search_shown, query, clock});
            }
            if (hits.empty()) events.push_back(PreferenceEvent{user, std::nullopt, Action::search_shown, query, clock});
            clock += 1000;
            for (auto const& hit : hits) {
                if (voted.count(hit.doc_id) != 0) continue;
                auto const& doc = corpus.at(hit.doc_id);
                std::optional<Action> vote;
                if (liked_set.count(hit.doc_id) != 0) {
                    double const p = doc.date.year >= pivot ? options.p_relevant_recent : options.p_relevant_old;
                    if (rng.bernoulli(p)) vote = Action::vote_relevant;
                } else if (rng.bernoulli(options.p_irrelevant)) {
                    vote = Action::vote_irrelevant;
                }
                if (!vote) continue;
                voted.insert(hit.doc_id);
                events.push_back(PreferenceEvent{user, hit.doc_id, *vote, query, clock});
                clock += 1000;
            }
        }
    }
    return events;
}

// ---------------------------------------------------------------------------

namespace {

class WordFactory {
  public:
    explicit WordFactory(Rng& rng) : rng_(rng) {}

    /// Fresh pronounceable word of three syllables, never repeated.
    std::string next() {
        static constexpr std::string_view consonants = "bdfgklmnprstvz";
        static constexpr std::string_view vowels = "aeiou";
        for (;;) {
            std::string w;
            for (int i = 0; i < 3; ++i) {
                w += consonants[rng_.below(consonants.size())];
                w += vowels[rng_.below(vowels.size())];
            }
            if (used_.insert(w).second) return w;
        }
    }

    std::string phrase(std::size_t words) {
        std::string p;
        for (std::size_t i = 0; i < words; ++i) {
            if (i > 0) p += ' ';
            p += next();
        }
        return p;
    }

  private:
    Rng& rng_;
    std::set<std::string> used_;
};

constexpr std::string_view kConnectors[] = {"the", "of", "and", "in", "with", "for", "on", "by", "from", "is", "was"};

KeyphraseDoc fixture_doc(std::string id, Rng& rng, WordFactory& words, KeyphraseFixtureOptions const& o) {
    KeyphraseDoc doc;
    doc.id = std::move(id);
    std::vector<std::string> mentions;
    for (std::size_t g = 0; g < o.gold_per_doc; ++g) {
        std::string p = words.phrase(1 + rng.below(3));
        std::size_t const times = 4 + rng.below(3);
        for (std::size_t i = 0; i < times; ++i) mentions.push_back(p);
        doc.gold.push_back(std::move(p));
    }
    for (std::size_t d = 0; d < o.distractors_per_doc; ++d) {
        std::string const p = words.phrase(1 + rng.below(3));
        for (int i = 0; i < 3; ++i) mentions.push_back(p);
    }
    rng.shuffle(std::span<std::string>(mentions));
    std::string text;
    for (std::size_t i = 0; i < mentions.size(); ++i) {
        text += pick(rng, kConnectors);
        text += ' ';
        text += mentions[i];
        text += ' ';
        text += pick(rng, kConnectors);
        text += ' ';
        text += words.next();
        text += (i % 3 == 2) ? ". " : " ";
    }
    doc.text = text;
    return doc;
}

std::string key_file(std::vector<KeyphraseDoc> const& docs) {
    std::string out;
    for (auto const& d : docs) {
        out += d.id + " : ";
        for (std::size_t i = 0; i < d.gold.size(); ++i) {
            if (i > 0) out += ',';
            out += d.gold[i];
        }
        out += '\n';
    }
    return out;
}

}  // namespace

KeyphraseSplits generate_keyphrase_fixture(KeyphraseFixtureOptions const& options) {
    if (options.train == 0 || options.test == 0) throw DomainError("train and test splits need documents");
    if (options.gold_per_doc == 0) throw DomainError("documents need gold phrases");
    Rng rng(options.seed);
    WordFactory words(rng);
    KeyphraseSplits s;
    auto fill_split = [&](std::vector<KeyphraseDoc>& out, std::string_view prefix, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.*s-%03zu", static_cast<int>(prefix.size()), prefix.data(), i + 1);
            out.push_back(fixture_doc(buf, rng, words, options));
        }
    };
    fill_split(s.train, "C", options.train);
    fill_split(s.validation, "T", options.trial);
    fill_split(s.test, "X", options.test);
    return s;
}

void write_semeval(KeyphraseSplits const& splits, std::filesystem::path const& dir) {
    auto write_split = [&](std::vector<KeyphraseDoc> const& docs, std::string const& split) {
        for (auto const& d : docs) write_text_file(dir / split / (d.id + ".txt"), d.text);
        write_text_file(dir / split / (split + ".combined.final"), key_file(docs));
    };
    write_split(splits.train, "train");
    write_split(splits.validation, "trial");
    write_split(splits.test, "test");
}

}  // namespace eileen
