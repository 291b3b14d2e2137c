// Regenerates the bundled fixtures under data/fixtures:
//   corpus/pubmed.jsonl, corpus/federal_exporter.jsonl  (200 documents)
//   keyphrase/{train,trial,test}/                        (gold-labelled text)

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eileen/error.hpp"
#include "eileen/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the bundled fixture corpora"};
    std::string out = "data/fixtures";
    eileen::SynthCorpusOptions corpus;
    eileen::KeyphraseFixtureOptions keyphrase;
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--docs", corpus.n_docs, "Corpus size")->capture_default_str();
    app.add_option("--corpus-seed", corpus.seed, "Corpus seed")->capture_default_str();
    app.add_option("--keyphrase-seed", keyphrase.seed, "Keyphrase fixture seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        auto const generated = eileen::generate_corpus(corpus);
        eileen::write_source_files(generated, std::filesystem::path(out) / "corpus");
        eileen::write_semeval(eileen::generate_keyphrase_fixture(keyphrase), std::filesystem::path(out) / "keyphrase");
        std::cout << "wrote " << generated.docs.size() << " documents and the keyphrase fixture to " << out << '\n';
    } catch (eileen::Error const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
