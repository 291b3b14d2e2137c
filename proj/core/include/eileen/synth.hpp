#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eileen/corpus.hpp"
#include "eileen/keyphrase.hpp"
#include "eileen/relevance.hpp"
#include "eileen/searchidx.hpp"
#include "eileen/textpipe.hpp"

// Seeded generators for fixtures and acceptance runs: a topic-clustered
// corpus, simulated users with latent preferences, and a gold-labelled
// keyphrase corpus with a planted rule.

namespace eileen {

struct SynthCorpusOptions {
    std::size_t n_docs = 200;
    /// Share of documents emitted as grants (federal_exporter source).
    double grant_share = 0.25;
    int first_year = 1995;
    int last_year = 2020;
    std::uint64_t seed = 7;
};

struct SynthCorpus {
    std::vector<DocumentRecord> docs;
    /// Planted topic of each document, parallel to docs.
    std::vector<std::size_t> topics;
};

/// Number of planted topics.
std::size_t synth_topic_count() noexcept;

SynthCorpus generate_corpus(SynthCorpusOptions const& options = {});

/// Writes pubmed.jsonl and federal_exporter.jsonl in the adapter schemas,
/// so that ingesting both (pubmed first) reproduces the documents and ids.
void write_source_files(SynthCorpus const& corpus, std::filesystem::path const& dir);

struct SimulationOptions {
    std::size_t n_users = 40;
    std::size_t searches_per_user = 10;
    std::size_t page_size = 10;
    /// Share of the corpus closest to a user's anchor document that the user likes.
    double liked_fraction = 0.10;
    /// P(relevant vote) for a liked document at or after / before the user's pivot year.
    double p_relevant_recent = 0.9;
    double p_relevant_old = 0.3;
    /// P(irrelevant vote) for a shown document the user does not like.
    double p_irrelevant = 0.15;
    int pivot_first = 2000;
    int pivot_last = 2012;
    /// P(query words come from a liked document rather than a random one).
    double p_query_liked = 0.5;
    std::int64_t start_time = 1'600'000'000'000;
    std::uint64_t seed = 11;
};

/// Search-and-vote logs of simulated users. Each user likes the documents
/// nearest (by topic_norm cosine) to a random anchor document and votes on
/// the BM25 results of two-word queries. Throws PreconditionError when the
/// corpus has no topic vectors.
std::vector<PreferenceEvent> simulate_users(Corpus const& corpus, InvertedIndex const& index,
                                            Tokenizer const& tokenizer, SimulationOptions const& options = {});

struct KeyphraseFixtureOptions {
    std::size_t train = 36;
    std::size_t trial = 10;
    std::size_t test = 25;
    std::size_t gold_per_doc = 4;
    std::size_t distractors_per_doc = 6;
    std::uint64_t seed = 5;
};

/// Documents whose gold phrases each occur 4-6 times and whose distractor
/// phrases occur exactly 3 times, so that gold iff term_count >= 4.
KeyphraseSplits generate_keyphrase_fixture(KeyphraseFixtureOptions const& options = {});

/// SemEval-2010 layout: <split>/<id>.txt plus <split>/<split>.combined.final.
void write_semeval(KeyphraseSplits const& splits, std::filesystem::path const& dir);

}  // namespace eileen
