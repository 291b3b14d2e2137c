#include "eileen/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"

namespace eileen {

using nlohmann::json;

std::string_view to_string(Source source) noexcept {
    switch (source) {
        case Source::pubmed: return "pubmed";
        case Source::arxiv: return "arxiv";
        case Source::federal_exporter: return "federal_exporter";
        case Source::nber: return "nber";
        case Source::other: return "other";
    }
    return "other";
}

std::string_view to_string(DocType type) noexcept {
    return type == DocType::grant ? "grant" : "publication";
}

Source parse_source_kind(std::string_view tag) {
    if (tag == "pubmed") return Source::pubmed;
    if (tag == "arxiv") return Source::arxiv;
    if (tag == "federal_exporter") return Source::federal_exporter;
    if (tag == "nber") return Source::nber;
    if (tag == "other") return Source::other;
    throw ConfigError("unknown source kind '" + std::string(tag) +
                      "' (expected pubmed, arxiv, federal_exporter, nber or other)");
}

DocType parse_doc_type(std::string_view tag) {
    if (tag == "publication") return DocType::publication;
    if (tag == "grant") return DocType::grant;
    throw FormatError("unknown doc_type '" + std::string(tag) + "'");
}

namespace {

std::optional<int> parse_int(std::string_view text) {
    int value = 0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        return std::nullopt;
    }
    return value;
}

std::string pad(int value, int width) {
    std::string s = std::to_string(value);
    if (static_cast<int>(s.size()) < width) {
        s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    }
    return s;
}

}  // namespace

std::string Date::to_iso() const {
    std::string out = pad(year, 4);
    if (month) {
        out += '-' + pad(*month, 2);
        if (day) {
            out += '-' + pad(*day, 2);
        }
    }
    return out;
}

Date Date::parse(std::string_view text) {
    auto fail = [&]() -> FormatError {
        return FormatError("unparseable date '" + std::string(text) + "'");
    };
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    Date date;
    if (text.find('/') != std::string_view::npos) {
        // MM/DD/YYYY, optionally followed by a time.
        auto const space = text.find(' ');
        std::string_view const core = text.substr(0, space);
        auto const s1 = core.find('/');
        auto const s2 = core.find('/', s1 + 1);
        if (s2 == std::string_view::npos) throw fail();
        auto m = parse_int(core.substr(0, s1));
        auto d = parse_int(core.substr(s1 + 1, s2 - s1 - 1));
        auto y = parse_int(core.substr(s2 + 1));
        if (!m || !d || !y) throw fail();
        date = Date{*y, *m, *d};
    } else {
        std::string_view core = text.substr(0, text.find_first_of("T "));
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (;;) {
            auto const dash = core.find('-', start);
            parts.push_back(core.substr(start, dash - start));
            if (dash == std::string_view::npos) break;
            start = dash + 1;
        }
        if (parts.empty() || parts.size() > 3 || parts[0].size() != 4) throw fail();
        auto y = parse_int(parts[0]);
        if (!y) throw fail();
        date.year = *y;
        if (parts.size() >= 2) {
            auto m = parse_int(parts[1]);
            if (!m) throw fail();
            date.month = *m;
        }
        if (parts.size() == 3) {
            auto d = parse_int(parts[2]);
            if (!d) throw fail();
            date.day = *d;
        }
    }
    if (date.year < 1000 || date.year > 9999) throw fail();
    if (date.month && (*date.month < 1 || *date.month > 12)) throw fail();
    if (date.day && (*date.day < 1 || *date.day > 31)) throw fail();
    return date;
}

// ---------------------------------------------------------------------------
// Canonical JSON form

void to_json(json& j, DocumentRecord const& r) {
    j = json::object();
    j["id"] = r.id;
    j["source"] = to_string(r.source);
    j["source_id"] = r.source_id;
    j["doc_type"] = to_string(r.doc_type);
    j["title"] = r.title;
    j["venue"] = r.venue;
    j["abstract"] = r.abstract;
    j["scientists"] = r.scientists;
    j["organizations"] = r.organizations;
    j["date"] = r.date.to_iso();
    j["content"] = r.content;
    if (r.end_date) j["end_date"] = r.end_date->to_iso();
    if (r.city) j["city"] = *r.city;
    if (r.country) j["country"] = *r.country;
    j["other_ids"] = r.other_ids;
    if (r.tfidf) {
        json indices = json::array();
        json weights = json::array();
        for (auto const& [i, w] : r.tfidf->entries()) {
            indices.push_back(i);
            weights.push_back(w);
        }
        j["tfidf"] = {{"indices", std::move(indices)}, {"weights", std::move(weights)}};
    }
    if (r.topic) j["topic"] = r.topic->values;
    if (r.topic_norm) j["topic_norm"] = r.topic_norm->values;
    if (r.buckets) {
        j["buckets"] = {{"bits", r.buckets->bits},
                        {"n_planes", r.buckets->n_planes},
                        {"seed", r.buckets->seed}};
    }
}

void from_json(json const& j, DocumentRecord& r) {
    r = DocumentRecord{};
    r.id = j.at("id").get<DocId>();
    r.source = parse_source_kind(j.at("source").get<std::string>());
    r.source_id = j.at("source_id").get<std::string>();
    r.doc_type = parse_doc_type(j.at("doc_type").get<std::string>());
    r.title = j.at("title").get<std::string>();
    r.venue = j.value("venue", std::string{});
    r.abstract = j.value("abstract", std::string{});
    r.scientists = j.value("scientists", std::vector<std::string>{});
    r.organizations = j.value("organizations", std::vector<std::string>{});
    r.date = Date::parse(j.at("date").get<std::string>());
    r.content = j.value("content", std::string{});
    if (j.contains("end_date")) r.end_date = Date::parse(j.at("end_date").get<std::string>());
    if (j.contains("city")) r.city = j.at("city").get<std::string>();
    if (j.contains("country")) r.country = j.at("country").get<std::string>();
    r.other_ids = j.value("other_ids", std::map<std::string, std::string>{});
    if (j.contains("tfidf")) {
        auto const& t = j.at("tfidf");
        auto indices = t.at("indices").get<std::vector<TermId>>();
        auto weights = t.at("weights").get<std::vector<double>>();
        if (indices.size() != weights.size()) {
            throw FormatError("tfidf indices and weights differ in length for id " +
                              std::to_string(r.id));
        }
        std::vector<SparseVector::Entry> entries;
        entries.reserve(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            entries.emplace_back(indices[i], weights[i]);
        }
        r.tfidf = SparseVector(std::move(entries));
    }
    if (j.contains("topic")) r.topic = TopicVector{j.at("topic").get<std::vector<double>>()};
    if (j.contains("topic_norm")) {
        r.topic_norm = TopicVector{j.at("topic_norm").get<std::vector<double>>()};
    }
    if (j.contains("buckets")) {
        auto const& b = j.at("buckets");
        r.buckets = LshSignature{b.at("bits").get<std::uint64_t>(),
                                 b.at("n_planes").get<std::uint32_t>(),
                                 b.at("seed").get<std::uint64_t>()};
    }
}

std::optional<std::string> check_invariants(DocumentRecord const& r) {
    if (r.end_date && r.doc_type != DocType::grant) {
        return "end_date present on a publication";
    }
    if (r.source_id.empty()) {
        return "empty source_id";
    }
    if (r.topic_norm && !r.topic_norm->is_zero()) {
        double const n = r.topic_norm->norm();
        if (std::abs(n - 1.0) > 1e-9) {
            return "topic_norm has norm " + std::to_string(n);
        }
    }
    if (r.topic && !r.topic->is_finite()) {
        return "topic has non-finite entries";
    }
    if (r.buckets && (r.buckets->n_planes == 0 || r.buckets->n_planes > 64)) {
        return "buckets signature has invalid plane count";
    }
    return std::nullopt;
}

void validate_records(std::span<DocumentRecord const> records) {
    std::set<DocId> seen_ids;
    std::set<std::pair<Source, std::string>> seen_source_ids;
    std::ostringstream problems;
    bool any = false;
    for (auto const& r : records) {
        std::optional<std::string> issue = check_invariants(r);
        if (!issue && !seen_ids.insert(r.id).second) issue = "duplicate id";
        if (!issue && !seen_source_ids.emplace(r.source, r.source_id).second) {
            issue = "duplicate source_id '" + r.source_id + "'";
        }
        if (issue) {
            problems << (any ? "; " : "") << "id " << r.id << ": " << *issue;
            any = true;
        }
    }
    if (any) {
        throw ValidationError("invalid records: " + problems.str());
    }
}

// ---------------------------------------------------------------------------
// Markup stripping

namespace {

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool decode_entity(std::string_view text, std::size_t& i, std::string& out) {
    auto const semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) return false;
    std::string_view const name = text.substr(i + 1, semi - i - 1);
    static std::pair<std::string_view, std::string_view> const named[] = {
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
    for (auto const& [n, v] : named) {
        if (name == n) {
            out += v;
            i = semi + 1;
            return true;
        }
    }
    if (name.size() >= 2 && name[0] == '#') {
        unsigned long cp = 0;
        bool const hex = name[1] == 'x' || name[1] == 'X';
        std::string_view const digits = name.substr(hex ? 2 : 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp,
                                         hex ? 16 : 10);
        if (ec == std::errc{} && ptr == digits.data() + digits.size()) {
            append_utf8(out, cp);
            i = semi + 1;
            return true;
        }
    }
    return false;
}

bool is_inline_tag(std::string_view tag) {
    if (!tag.empty() && tag.front() == '/') tag.remove_prefix(1);
    std::size_t end = 0;
    while (end < tag.size() && std::isalnum(static_cast<unsigned char>(tag[end])) != 0) ++end;
    std::string name;
    for (char ch : tag.substr(0, end)) name += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    static constexpr std::array<std::string_view, 11> kInline{"i", "b", "em", "strong", "sub", "sup", "u",
                                                              "span", "a", "small", "tt"};
    return std::find(kInline.begin(), kInline.end(), name) != kInline.end();
}

std::string strip_html(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        char const c = text[i];
        if (c == '<') {
            auto const close = text.find('>', i);
            bool const looks_like_tag =
                close != std::string_view::npos && i + 1 < text.size() &&
                (std::isalpha(static_cast<unsigned char>(text[i + 1])) != 0 ||
                 text[i + 1] == '/' || text[i + 1] == '!');
            if (looks_like_tag) {
                // Inline formatting joins its neighbours; anything else separates words.
                if (!is_inline_tag(text.substr(i + 1, close - i - 1))) out += ' ';
                i = close + 1;
                continue;
            }
        }
        if (c == '&' && decode_entity(text, i, out)) {
            continue;
        }
        out += c;
        ++i;
    }
    return out;
}

std::string strip_latex(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char const c = text[i];
        if (c == '\\') {
            if (i + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[i + 1])) != 0) {
                // Control word: drop the command name, keep its braced argument.
                std::size_t j = i + 1;
                while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j])) != 0) {
                    ++j;
                }
                i = j - 1;
                continue;
            }
            if (i + 1 < text.size()) {
                // Control symbol such as \% or \&: keep the symbol.
                out += text[i + 1];
                ++i;
            }
            continue;
        }
        if (c == '$' || c == '{' || c == '}') {
            continue;
        }
        out += c;
    }
    return out;
}

}  // namespace

std::string strip_markup(std::string_view text) {
    std::string const plain = strip_latex(strip_html(text));
    std::string out;
    out.reserve(plain.size());
    bool pending_space = false;
    for (char c : plain) {
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Source adapters

namespace {

std::string text_field(json const& j, char const* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    auto const& v = j.at(key);
    if (v.is_string()) return strip_markup(v.get<std::string>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw FormatError(std::string("field '") + key + "' is not a string");
}

std::optional<std::string> optional_text(json const& j, char const* key) {
    std::string s = text_field(j, key);
    if (s.empty()) return std::nullopt;
    return s;
}

std::string required_text(json const& j, char const* key) {
    std::string s = text_field(j, key);
    if (s.empty()) throw FormatError(std::string("missing required field '") + key + "'");
    return s;
}

std::vector<std::string> split_names(std::string const& joined) {
    // "A, B and C" or "A; B".
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        std::string trimmed = strip_markup(current);
        if (!trimmed.empty()) out.push_back(std::move(trimmed));
        current.clear();
    };
    for (std::size_t i = 0; i < joined.size(); ++i) {
        if (joined[i] == ',' || joined[i] == ';') {
            flush();
        } else if (joined.compare(i, 5, " and ") == 0) {
            flush();
            i += 4;
        } else {
            current += joined[i];
        }
    }
    flush();
    return out;
}

std::vector<std::string> name_list(json const& j, char const* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    auto const& v = j.at(key);
    if (v.is_string()) return split_names(v.get<std::string>());
    if (!v.is_array()) throw FormatError(std::string("field '") + key + "' is not a list");
    std::vector<std::string> out;
    for (auto const& item : v) {
        std::string s = strip_markup(item.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

void add_other_id(DocumentRecord& r, json const& j, char const* key, char const* name) {
    if (auto v = optional_text(j, key)) r.other_ids[name] = *v;
}

DocumentRecord adapt_pubmed(json const& j) {
    DocumentRecord r;
    r.source = Source::pubmed;
    r.doc_type = DocType::publication;
    r.source_id = required_text(j, "pmid");
    r.title = required_text(j, "title");
    r.venue = text_field(j, "journal");
    r.abstract = text_field(j, "abstract");
    r.scientists = name_list(j, "authors");
    r.organizations = name_list(j, "affiliations");
    r.date = Date::parse(required_text(j, "pub_date"));
    r.city = optional_text(j, "city");
    r.country = optional_text(j, "country");
    if (j.contains("content") && j.at("content").is_string()) r.content = j.at("content");
    r.other_ids["pmid"] = r.source_id;
    add_other_id(r, j, "doi", "doi");
    add_other_id(r, j, "pmc", "pmc");
    return r;
}

DocumentRecord adapt_arxiv(json const& j) {
    DocumentRecord r;
    r.source = Source::arxiv;
    r.doc_type = DocType::publication;
    r.source_id = required_text(j, "id");
    r.title = required_text(j, "title");
    r.venue = text_field(j, "journal_ref");
    r.abstract = text_field(j, "abstract");
    r.scientists = name_list(j, "authors");
    r.organizations = name_list(j, "affiliations");
    r.date = Date::parse(required_text(j, "published"));
    r.other_ids["arxiv"] = r.source_id;
    add_other_id(r, j, "doi", "doi");
    return r;
}

DocumentRecord adapt_exporter(json const& j) {
    DocumentRecord r;
    r.source = Source::federal_exporter;
    r.doc_type = DocType::grant;
    r.source_id = required_text(j, "project_number");
    r.title = required_text(j, "project_title");
    r.venue = text_field(j, "agency");
    r.abstract = text_field(j, "abstract_text");
    r.scientists = name_list(j, "pi_names");
    if (auto org = optional_text(j, "org_name")) r.organizations.push_back(*org);
    r.date = Date::parse(required_text(j, "project_start"));
    if (auto end = optional_text(j, "project_end")) r.end_date = Date::parse(*end);
    r.city = optional_text(j, "org_city");
    r.country = optional_text(j, "org_country");
    return r;
}

DocumentRecord adapt_nber(json const& j) {
    DocumentRecord r;
    r.source = Source::nber;
    r.doc_type = DocType::publication;
    r.source_id = required_text(j, "paper");
    r.title = required_text(j, "title");
    r.venue = "NBER Working Paper";
    r.abstract = text_field(j, "abstract");
    r.scientists = name_list(j, "authors");
    r.date = Date::parse(required_text(j, "date"));
    r.other_ids["nber"] = r.source_id;
    add_other_id(r, j, "doi", "doi");
    return r;
}

DocumentRecord adapt_canonical(json const& j) {
    DocumentRecord r = j.get<DocumentRecord>();
    r.title = strip_markup(r.title);
    r.abstract = strip_markup(r.abstract);
    r.venue = strip_markup(r.venue);
    if (r.title.empty()) throw FormatError("missing required field 'title'");
    return r;
}

}  // namespace

ParseResult parse_source(std::filesystem::path const& path, Source kind, DocId first_id) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read source file " + path.string());
    }
    ParseResult result;
    std::set<std::string> seen_source_ids;
    std::size_t total = 0;
    std::string line;
    DocId next_id = first_id;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++total;
        try {
            json const j = json::parse(line);
            if (!j.is_object()) throw FormatError("line is not a JSON object");
            DocumentRecord r;
            switch (kind) {
                case Source::pubmed: r = adapt_pubmed(j); break;
                case Source::arxiv: r = adapt_arxiv(j); break;
                case Source::federal_exporter: r = adapt_exporter(j); break;
                case Source::nber: r = adapt_nber(j); break;
                case Source::other: r = adapt_canonical(j); break;
            }
            if (r.end_date && r.doc_type != DocType::grant) r.end_date.reset();
            if (!seen_source_ids.insert(r.source_id).second) {
                throw FormatError("duplicate source_id " + r.source_id);
            }
            r.id = next_id++;
            if (check_invariants(r)) throw FormatError("record violates invariants");
            result.records.push_back(std::move(r));
        } catch (json::exception const&) {
            ++result.skipped;
        } catch (Error const&) {
            ++result.skipped;
        }
    }
    if (in.bad()) {
        throw IoError("error while reading " + path.string());
    }
    if (total > 0 && result.skipped * 2 > total) {
        throw FormatError(path.string() + ": " + std::to_string(result.skipped) + " of " +
                          std::to_string(total) + " lines malformed; wrong source kind '" +
                          std::string(to_string(kind)) + "'?");
    }
    return result;
}

// ---------------------------------------------------------------------------

Corpus::Corpus(std::vector<DocumentRecord> records) : records_(std::move(records)) {
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!by_id_.emplace(records_[i].id, i).second) {
            throw ValidationError("duplicate document id " + std::to_string(records_[i].id));
        }
    }
}

DocumentRecord const* Corpus::find(DocId id) const noexcept {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

DocumentRecord const& Corpus::at(DocId id) const {
    if (auto const* r = find(id)) return *r;
    throw ReferenceError("unknown document id " + std::to_string(id));
}

void save_corpus(std::span<DocumentRecord const> records, std::filesystem::path const& path) {
    validate_records(records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write corpus file " + path.string());
    }
    for (auto const& r : records) {
        out << json(r).dump() << '\n';
    }
    if (!out) {
        throw IoError("error while writing " + path.string());
    }
}

std::vector<DocumentRecord> load_corpus(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read corpus file " + path.string());
    }
    std::vector<DocumentRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(json::parse(line).get<DocumentRecord>());
        } catch (json::exception const& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace eileen
