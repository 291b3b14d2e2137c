// Command-line entry points for the recommendation pipeline.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 I/O, 4 configuration,
// 5 malformed or inconsistent input, 6 domain or precondition failure.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eileen/engine.hpp"
#include "eileen/error.hpp"
#include "eileen/keyphrase.hpp"
#include "eileen/ltr.hpp"
#include "eileen/rng.hpp"
#include "eileen/service.hpp"
#include "eileen/synth.hpp"
#include "eileen/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eileen;

namespace {

constexpr char const* kExitCodes =
    "Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 I/O, 4 configuration,\n"
    "            5 malformed or inconsistent input, 6 domain or precondition failure.";

struct Globals {
    std::optional<std::uint64_t> seed;
    bool json_output = false;
    std::string config_path;
    std::string artifacts;
};

EngineConfig resolve_config(Globals const& g) {
    EngineConfig c = g.config_path.empty() ? EngineConfig{} : EngineConfig::load(g.config_path);
    c.apply_env([](char const* name) { return std::getenv(name); });
    if (g.seed) c.seed = *g.seed;
    if (!g.artifacts.empty()) c.artifact_dir = g.artifacts;
    return c;
}

/// Prints either the JSON summary or the human-readable text.
void emit(Globals const& g, json const& summary, std::string const& text) {
    if (g.json_output) {
        std::cout << summary.dump(2) << '\n';
    } else {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    }
}

Corpus load_corpus_artifact(ArtifactPaths const& paths) {
    if (!fs::exists(paths.corpus())) throw IoError("missing " + paths.corpus().string() + "; run ingest first");
    return Corpus(load_corpus(paths.corpus()));
}

InvertedIndex load_index_artifact(ArtifactPaths const& paths) {
    if (!fs::exists(paths.index())) throw IoError("missing " + paths.index().string() + "; run build-index first");
    return InvertedIndex::load(paths.index());
}

ForestModel load_model(fs::path const& path, char const* producer) {
    if (!fs::exists(path)) throw IoError("missing " + path.string() + "; run " + producer + " first");
    return ForestModel::load(path);
}

std::vector<PreferenceEvent> load_event_file(fs::path const& path) {
    if (!fs::exists(path)) throw IoError("missing event log " + path.string() + "; run simulate-users or serve");
    return load_events(path);
}

std::string auc_text(std::optional<double> auc) { return auc ? format_double(*auc) : std::string("n/a"); }

std::string roc_csv(std::vector<RocPoint> const& roc) {
    std::ostringstream out;
    out << "fpr,tpr,threshold\n";
    for (auto const& p : roc) {
        out << format_double(p.fpr) << ',' << format_double(p.tpr) << ',' << format_double(p.threshold)
            << '\n';
    }
    return out.str();
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Content-based recommender for publications and grants"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Seed for every random component (overrides config)");
    app.add_flag("--json", g.json_output, "Machine-readable JSON output");
    app.add_option("--config", g.config_path, "JSON config file shared with the service")->check(CLI::ExistingFile);
    app.add_option("--artifacts", g.artifacts, "Artifact directory (overrides config and EILEEN_ARTIFACT_DIR)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse source exports into the canonical corpus file");
    std::vector<std::string> inputs;
    ingest->add_option("-i,--input", inputs, "KIND=PATH with KIND one of pubmed, arxiv, federal_exporter, nber, other")
        ->required();

    // build-index
    auto* build_index = app.add_subcommand("build-index", "Build the BM25 inverted index");

    // fit-lsa
    auto* fit = app.add_subcommand("fit-lsa", "Fit vocabulary, tf-idf, LSA topics and LSH buckets");
    std::optional<std::size_t> lsa_k;
    std::optional<std::uint32_t> planes;
    fit->add_option("--k", lsa_k, "Number of latent topics");
    fit->add_option("--planes", planes, "LSH hyperplanes (bits)");

    // simulate-users
    auto* simulate = app.add_subcommand("simulate-users", "Write a synthetic search-and-vote log");
    SimulationOptions sim;
    std::string sim_out;
    bool force = false;
    simulate->add_option("--users", sim.n_users, "Number of simulated users")->capture_default_str();
    simulate->add_option("--searches", sim.searches_per_user, "Searches per user")->capture_default_str();
    simulate->add_option("--out", sim_out, "Output log (default: <artifacts>/events.jsonl)");
    simulate->add_flag("--force", force, "Replace an existing log");

    // train-ltr
    auto* train_ltr = app.add_subcommand("train-ltr", "Build the LTR dataset and train one model variant");
    std::string events_path;
    std::string variant_name = "all12";
    std::optional<std::size_t> ltr_trees;
    bool naive_library = false;
    train_ltr->add_option("--events", events_path, "Event log (default: <artifacts>/events.jsonl)");
    train_ltr->add_option("--variant", variant_name, "all12, no_es_score, no_library_cosine, es_only, es_plus_library")
        ->capture_default_str();
    train_ltr->add_option("--trees", ltr_trees, "Number of trees");
    train_ltr->add_flag("--naive-library", naive_library, "Library feature without leaving the row's document out");

    // eval-ltr
    auto* eval_ltr = app.add_subcommand("eval-ltr", "Compare all five LTR variants on a shared user split");
    std::string report_dir;
    eval_ltr->add_option("--events", events_path, "Event log (default: <artifacts>/events.jsonl)");
    eval_ltr->add_option("--trees", ltr_trees, "Number of trees");
    eval_ltr->add_option("--report-dir", report_dir, "Report directory (default: <artifacts>/reports)");
    eval_ltr->add_flag("--naive-library", naive_library, "Library feature without leaving the row's document out");

    // train-keyphrase
    auto* train_kp = app.add_subcommand("train-keyphrase", "Train the keyphrase reranker on gold-labelled text");
    std::string semeval_dir;
    std::optional<std::size_t> kp_trees;
    bool with_textrank = false;
    bool resplit = false;
    train_kp->add_option("--semeval", semeval_dir, "SemEval-2010 style directory (train/, trial/, test/)")
        ->required()
        ->check(CLI::ExistingDirectory);
    train_kp->add_option("--trees", kp_trees, "Number of trees");
    train_kp->add_flag("--with-textrank", with_textrank, "Add TextRank phrases to the training candidates");
    train_kp->add_flag("--resplit", resplit, "Pool all documents and split 144:40:100");
    train_kp->add_option("--report-dir", report_dir, "Report directory (default: <artifacts>/reports)");

    // extract-keyphrases
    auto* extract = app.add_subcommand("extract-keyphrases", "Export scored keyphrases as tab-separated rows");
    KeyphraseSelection selection;
    std::vector<DocId> doc_ids;
    std::string extract_out;
    std::string extract_semeval;
    extract->add_option("--top-n", selection.top_n, "Keyphrases per document")->capture_default_str();
    extract->add_option("--threshold", selection.threshold, "Cut-off of the probability_tf column")->capture_default_str();
    extract->add_option("--doc", doc_ids, "Corpus document ids (default: all)");
    extract->add_option("--semeval", extract_semeval, "Score the test split of a SemEval directory, with labels")
        ->check(CLI::ExistingDirectory);
    extract->add_option("--out", extract_out, "Output file (default: stdout)");

    // stats
    auto* stats = app.add_subcommand("stats", "Keyphrase summary table over the corpus");
    stats->add_option("--threshold", selection.threshold, "Minimum p1 for a keyphrase")->capture_default_str();
    stats->add_option("--top-n", selection.top_n, "Keyphrases per document")->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
    std::optional<std::string> host;
    std::optional<int> port;
    serve->add_option("--host", host, "Listen address (overrides config and EILEEN_HOST)");
    serve->add_option("--port", port, "Listen port, 0 for any (overrides config and EILEEN_PORT)");

    for (auto* sub : app.get_subcommands({})) sub->footer(kExitCodes);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    EngineConfig config = resolve_config(g);
    ArtifactPaths const paths{config.artifact_dir};
    if (events_path.empty()) events_path = paths.events().string();
    if (report_dir.empty()) report_dir = (paths.dir / "reports").string();

    if (ingest->parsed()) {
        std::vector<SourceInput> sources;
        for (auto const& spec : inputs) {
            auto const eq = spec.find('=');
            if (eq == std::string::npos) throw ConfigError("--input expects KIND=PATH, got '" + spec + "'");
            sources.push_back(SourceInput{spec.substr(eq + 1), parse_source_kind(spec.substr(0, eq))});
        }
        auto const report = ingest_sources(sources);
        fs::create_directories(paths.dir);
        save_corpus(report.records, paths.corpus());
        std::size_t skipped = 0;
        for (auto s : report.skipped) skipped += s;
        emit(g, json{{"documents", report.records.size()}, {"skipped", report.skipped}, {"corpus", paths.corpus().string()}},
             "ingested " + std::to_string(report.records.size()) + " documents (" + std::to_string(skipped) +
                 " malformed lines skipped) into " + paths.corpus().string());
        return 0;
    }

    if (build_index->parsed()) {
        Corpus const corpus = load_corpus_artifact(paths);
        auto const index = InvertedIndex::build(corpus.records(), Tokenizer());
        index.save(paths.index());
        emit(g, json{{"documents", index.n_docs()}, {"terms", index.term_count()}, {"index", paths.index().string()}},
             "indexed " + std::to_string(index.n_docs()) + " documents, " + std::to_string(index.term_count()) +
                 " terms into " + paths.index().string());
        return 0;
    }

    if (fit->parsed()) {
        if (lsa_k) config.lsa_k = *lsa_k;
        if (planes) config.lsh_planes = *planes;
        Corpus const loaded = load_corpus_artifact(paths);
        std::vector<DocumentRecord> docs(loaded.records().begin(), loaded.records().end());
        auto model = fit_semantics(std::move(docs), config);
        model.vocabulary.save(paths.vocabulary());
        model.lsa.save(paths.lsa());
        save_corpus(model.docs, paths.corpus());
        std::size_t zero = 0;
        for (auto const& d : model.docs) zero += d.topic_norm->is_zero() ? 1 : 0;
        std::vector<double> top(model.lsa.singular_values.begin(),
                                model.lsa.singular_values.begin() +
                                    static_cast<std::ptrdiff_t>(std::min<std::size_t>(5, model.lsa.k)));
        std::ostringstream text;
        text << "fitted LSA with k=" << model.lsa.k << " over " << model.vocabulary.size() << " terms and "
             << model.docs.size() << " documents";
        if (model.lsa.k < config.lsa_k) text << " (k lowered from " << config.lsa_k << " to the matrix rank limit)";
        text << "; " << zero << " documents have an empty topic vector";
        emit(g,
             json{{"k", model.lsa.k}, {"requested_k", config.lsa_k}, {"terms", model.vocabulary.size()},
                  {"documents", model.docs.size()}, {"zero_topic_documents", zero}, {"top_singular_values", top},
                  {"lsh_planes", model.lsa.lsh_planes}},
             text.str());
        return 0;
    }

    if (simulate->parsed()) {
        fs::path const out = sim_out.empty() ? paths.events() : fs::path(sim_out);
        if (fs::exists(out) && !force) {
            throw PreconditionError(out.string() + " exists and the event log is append-only; pass --force to replace it");
        }
        Corpus const corpus = load_corpus_artifact(paths);
        auto const index = load_index_artifact(paths);
        sim.seed = Rng::derive(config.seed, 0x51A);
        sim.page_size = config.page_size;
        auto const events = simulate_users(corpus, index, Tokenizer(), sim);
        save_events(events, out);
        emit(g, json{{"users", sim.n_users}, {"events", events.size()}, {"log", out.string()}},
             "simulated " + std::to_string(sim.n_users) + " users, " + std::to_string(events.size()) + " events into " +
                 out.string());
        return 0;
    }

    if (train_ltr->parsed() || eval_ltr->parsed()) {
        Corpus const corpus = load_corpus_artifact(paths);
        auto const index = load_index_artifact(paths);
        auto const events = load_event_file(events_path);
        FeatureOptions options;
        options.leave_one_out = !naive_library;
        auto const rows = build_dataset(events, corpus, index, Tokenizer(), options, config.page_size);
        ForestConfig forest;
        forest.n_trees = ltr_trees.value_or(config.ltr_trees);

        if (train_ltr->parsed()) {
            Variant const variant = parse_variant(variant_name);
            save_dataset(rows, paths.ltr_dataset());
            auto const report = train_and_evaluate(rows, variant, config.seed, forest);
            report.model.save(paths.ltr_model());
            std::vector<LtrReport> const reports{report};
            emit(g, ltr_report_json(reports), format_ltr_report(reports) + "model written to " + paths.ltr_model().string());
            return 0;
        }
        auto const reports = evaluate_variants(rows, config.seed, forest);
        fs::path const dir = report_dir;
        write_text_file(dir / "ltr_report.txt", format_ltr_report(reports));
        write_text_file(dir / "ltr_importances.csv", format_importance_csv(reports));
        std::string roc = "variant,fpr,tpr,threshold\n";
        for (auto const& r : reports) {
            for (auto const& p : r.roc) {
                roc += r.variant + "," + format_double(p.fpr) + "," + format_double(p.tpr) + "," +
                       format_double(p.threshold) + "\n";
            }
        }
        write_text_file(dir / "ltr_roc.csv", roc);
        json const j = ltr_report_json(reports);
        write_text_file(dir / "ltr_report.json", j.dump(2) + "\n");
        emit(g, j, format_ltr_report(reports) + "reports written to " + dir.string());
        return 0;
    }

    if (train_kp->parsed()) {
        KeyphraseSplits splits = load_semeval(semeval_dir);
        if (resplit) {
            std::vector<KeyphraseDoc> all;
            for (auto* part : {&splits.train, &splits.validation, &splits.test}) {
                for (auto& d : *part) all.push_back(std::move(d));
            }
            splits = split_documents(std::move(all), Rng::derive(config.seed, 0x5EED));
        }
        RerankerOptions options;
        options.with_textrank = with_textrank;
        options.forest.n_trees = kp_trees.value_or(config.keyphrase_trees);
        options.seed = config.seed;
        auto const report = train_reranker(splits, options);
        fs::create_directories(paths.dir);
        report.model.save(paths.keyphrase_model());
        fs::path const dir = report_dir;
        auto const roc = report.test_scores.empty() ? std::vector<RocPoint>{}
                                                    : roc_curve(report.test_scores, report.test_labels);
        write_text_file(dir / "keyphrase_roc.csv", roc_csv(roc));
        json j{{"validation_auc", report.validation_auc ? json(*report.validation_auc) : json(nullptr)},
               {"test_auc", report.test_auc ? json(*report.test_auc) : json(nullptr)},
               {"documents", {{"train", report.train_docs}, {"validation", report.validation_docs}, {"test", report.test_docs}}},
               {"rows", {{"train", report.train_rows}, {"validation", report.validation_rows}, {"test", report.test_rows}}},
               {"test_gold_recall", report.test_gold_recall},
               {"max_depth", report.model.config.max_depth},
               {"min_samples_leaf", report.model.config.min_samples_leaf}};
        json importances = json::object();
        for (std::size_t i = 0; i < kCandidateFeatureCount; ++i) {
            importances[std::string(kCandidateFeatureNames[i])] = report.model.feature_importances[i];
        }
        j["importances"] = importances;
        if (report.warning) j["warning"] = *report.warning;
        write_text_file(dir / "keyphrase_report.json", j.dump(2) + "\n");

        std::ostringstream text;
        text << "keyphrase reranker: validation AUC " << auc_text(report.validation_auc) << ", test AUC "
             << auc_text(report.test_auc) << "\n";
        text << "documents train/validation/test " << report.train_docs << "/" << report.validation_docs << "/"
             << report.test_docs << ", candidate rows " << report.train_rows << "/" << report.validation_rows << "/"
             << report.test_rows << "\n";
        text << "gold phrases covered by candidates (test): " << format_double(report.test_gold_recall) << "\n";
        if (report.warning) text << "warning: " << *report.warning << "\n";
        text << "model written to " << paths.keyphrase_model().string();
        emit(g, j, text.str());
        return 0;
    }

    if (extract->parsed()) {
        auto const model = load_model(paths.keyphrase_model(), "train-keyphrase");
        std::vector<PredictionRow> rows;
        auto add_rows = [&](std::string const& id, std::string const& text, std::vector<std::string> const* gold) {
            auto candidates = extract_keyphrases(text, model, selection.top_n, selection);
            if (gold != nullptr) label_candidates(candidates, *gold);
            for (auto const& c : candidates) {
                double const p1 = c.p1.value_or(0.0);
                rows.push_back(PredictionRow{id, c.phrase, 1.0 - p1, p1, p1 >= selection.threshold, c.label});
            }
        };
        if (!extract_semeval.empty()) {
            for (auto const& d : load_semeval_split(extract_semeval, "test")) add_rows(d.id, d.text, &d.gold);
        } else {
            Corpus const corpus = load_corpus_artifact(paths);
            if (doc_ids.empty()) {
                for (auto const& d : corpus.records()) add_rows(std::to_string(d.id), keyphrase_text(d), nullptr);
            } else {
                for (DocId id : doc_ids) add_rows(std::to_string(id), keyphrase_text(corpus.at(id)), nullptr);
            }
        }
        std::string const table = format_predictions(rows);
        if (!extract_out.empty()) {
            write_text_file(extract_out, table);
            emit(g, json{{"rows", rows.size()}, {"out", extract_out}},
                 "wrote " + std::to_string(rows.size()) + " rows to " + extract_out);
        } else if (g.json_output) {
            json arr = json::array();
            for (auto const& r : rows) {
                arr.push_back({{"document", r.document}, {"keyword", r.keyword}, {"probability", {r.p0, r.p1}},
                               {"probability_tf", r.probability_tf}, {"label", r.label ? json(*r.label) : json(nullptr)}});
            }
            std::cout << arr.dump(2) << '\n';
        } else {
            std::cout << table;
        }
        return 0;
    }

    if (stats->parsed()) {
        auto const model = load_model(paths.keyphrase_model(), "train-keyphrase");
        Corpus const corpus = load_corpus_artifact(paths);
        auto const s = corpus_keyphrase_stats(corpus.records(), model, selection);
        json by_words = json::object();
        for (std::size_t n = 1; n <= 5; ++n) by_words[std::to_string(n)] = s.by_words[n];
        by_words["more_than_five"] = s.by_words[6];
        emit(g,
             json{{"documents", s.documents}, {"total", s.total}, {"average", s.average()}, {"by_words", by_words},
                  {"filtered_long", s.filtered_long}},
             format_stats_table(s));
        return 0;
    }

    if (serve->parsed()) {
        if (host) config.host = *host;
        if (port) config.port = *port;
        Service service(Engine::load(config));
        HttpServer server(service);
        int const bound = server.bind(config.host, config.port);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "listening on http://" << config.host << ":" << bound << std::endl;
        server.run();
        g_server = nullptr;
        service.snapshot();
        return 0;
    }
    return 2;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (IoError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (ConfigError const& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 4;
    } catch (FormatError const& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 5;
    } catch (ValidationError const& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 5;
    } catch (ReferenceError const& e) {
        std::cerr << "reference error: " << e.what() << '\n';
        return 5;
    } catch (IncompatibleError const& e) {
        std::cerr << "incompatible artifacts: " << e.what() << '\n';
        return 5;
    } catch (DomainError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 6;
    } catch (PreconditionError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 6;
    } catch (std::exception const& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
}
