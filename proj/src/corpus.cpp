#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "iab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <set>

namespace iab::corpus {

std::string doc_id_for_url(const std::string& url) {
    return "d" + hash_hex(fnv1a64(url));
}

namespace {

std::string utc_now_iso() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool is_absolute_url(const std::string& url) {
    return url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0;
}

std::string canonical_url(const std::string& url) {
    std::string u = url;
    size_t frag = u.find('#');
    if (frag != std::string::npos) u.resize(frag);
    size_t scheme_end = u.find("://");
    if (scheme_end != std::string::npos) {
        size_t host_end = u.find('/', scheme_end + 3);
        size_t upper = host_end == std::string::npos ? u.size() : host_end;
        for (size_t i = 0; i < upper; ++i)
            u[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(u[i])));
    }
    while (u.size() > 1 && u.back() == '/') u.pop_back();
    return u;
}

} // namespace

std::vector<DocumentRef> search(gateway::Gateway& gw, const std::string& query, int max_results) {
    if (trim(query).empty()) throw PipelineError("search query is empty");
    if (max_results < 1) throw PipelineError("max_results must be positive");

    gateway::SearchResponse resp = gw.search({query, max_results});

    std::vector<DocumentRef> refs;
    std::set<std::string> seen;
    for (const auto& hit : resp.hits) {
        if (!is_absolute_url(hit.url)) continue;
        if (!seen.insert(canonical_url(hit.url)).second) continue;
        DocumentRef ref;
        ref.url = hit.url;
        ref.title = hit.title;
        ref.rank = hit.rank;
        refs.push_back(std::move(ref));
        if (static_cast<int>(refs.size()) >= max_results) break;
    }
    return refs;
}

// ---------------------------------------------------------------------------
// PageStore

PageStore::PageStore(gateway::Mode mode, std::filesystem::path dir, FetchTransport fetch)
    : mode_(mode), dir_(std::move(dir)), fetch_(std::move(fetch)) {
    load_index();
}

void PageStore::load_index() {
    index_ = json::object();
    if (dir_.empty()) return;
    auto index_path = dir_ / "pages_index.json";
    if (std::filesystem::exists(index_path)) index_ = load_json_file(index_path);
}

void PageStore::save_index() const {
    if (dir_.empty()) return;
    write_file(dir_ / "pages_index.json", dump_pretty(index_));
}

std::optional<FetchResult> PageStore::get(const std::string& url) {
    auto from_entry = [&](const json& entry) -> std::optional<FetchResult> {
        FetchResult result;
        result.status = entry.at("status").get<int>();
        if (result.status == 0) return std::nullopt; // recorded transport failure
        result.content_type = entry.at("content_type").get<std::string>();
        result.retrieved_at = entry.at("retrieved_at").get<std::string>();
        std::string file = entry.at("file").get<std::string>();
        result.body = file.empty() ? std::string{} : read_file(dir_ / file);
        return result;
    };

    if (mode_ != gateway::Mode::live) {
        if (index_.contains(url)) return from_entry(index_[url]);
        if (mode_ == gateway::Mode::replay) return std::nullopt; // fixture miss replays as failure
    }

    if (!fetch_) return std::nullopt;
    ++live_fetches_;
    FetchResult result;
    bool failed = false;
    try {
        result = fetch_(url);
    } catch (const gateway::TransportError&) {
        failed = true;
    }
    if (result.retrieved_at.empty()) result.retrieved_at = utc_now_iso();

    if (mode_ == gateway::Mode::record) {
        std::string file;
        if (!failed && !result.body.empty()) {
            file = hash_hex(fnv1a64(url)) + ".body";
            write_file(dir_ / file, result.body);
        }
        index_[url] = json{{"status", failed ? 0 : result.status},
                           {"content_type", failed ? "" : result.content_type},
                           {"retrieved_at", result.retrieved_at},
                           {"file", file}};
        save_index();
    }
    if (failed) return std::nullopt;
    return result;
}

FetchTransport make_http_fetch_transport() {
    return [](const std::string& url) -> FetchResult {
        size_t scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw gateway::TransportError("bad url: " + url);
        size_t path_start = url.find('/', scheme_end + 3);
        std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client cli(origin);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(30);
        cli.set_follow_location(true);
        auto res = cli.Get(path);
        if (!res) throw gateway::TransportError("fetch failed: " + url);

        FetchResult result;
        result.status = res->status;
        result.content_type = res->get_header_value("Content-Type");
        result.body = res->body;
        return result;
    };
}

// ---------------------------------------------------------------------------
// Extraction

FetchOutcome fetch_and_extract(const DocumentRef& ref, PageStore& store, size_t min_chars) {
    FetchOutcome outcome;
    auto fetched = store.get(ref.url);
    if (!fetched) {
        outcome.skip_reason = "fetch_failed";
        return outcome;
    }
    if (fetched->status != 200) {
        outcome.skip_reason = "http_error";
        return outcome;
    }
    const std::string& ct = fetched->content_type;
    if (!ct.empty() && to_lower(ct).find("html") == std::string::npos &&
        to_lower(ct).find("text/plain") == std::string::npos) {
        outcome.skip_reason = "non_html";
        return outcome;
    }

    std::string text = to_lower(ct).find("text/plain") != std::string::npos
                           ? fetched->body
                           : extract_main_text(fetched->body);
    if (text.size() < min_chars) {
        outcome.skip_reason = "too_short";
        return outcome;
    }

    Document doc;
    doc.ref = ref;
    doc.ref.retrieved_at = fetched->retrieved_at;
    doc.text = std::move(text);
    doc.doc_id = doc_id_for_url(ref.url);
    outcome.doc = std::move(doc);
    return outcome;
}

// ---------------------------------------------------------------------------
// Sentences & chunking

std::vector<std::pair<size_t, size_t>> sentence_spans(const std::string& text) {
    std::vector<std::pair<size_t, size_t>> spans;
    const size_t n = text.size();
    if (n == 0) return spans;

    auto is_ws = [&](size_t i) { return std::isspace(static_cast<unsigned char>(text[i])) != 0; };
    size_t start = 0;
    size_t i = 0;
    while (i < n) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            size_t j = i + 1;
            while (j < n && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
            while (j < n && (text[j] == '"' || text[j] == '\'' || text[j] == ')' || text[j] == ']'))
                ++j;
            size_t ws = j;
            while (ws < n && is_ws(ws)) ++ws;
            if (ws > j && ws < n) {
                unsigned char next = static_cast<unsigned char>(text[ws]);
                if (std::isupper(next) || std::isdigit(next) || next == '"' || next == '\'' ||
                    next == '(') {
                    spans.emplace_back(start, ws);
                    start = ws;
                }
            }
            i = std::max(ws, j);
            continue;
        }
        if (c == '\n') {
            size_t j = i + 1;
            int newlines = 1;
            while (j < n && is_ws(j)) {
                if (text[j] == '\n') ++newlines;
                ++j;
            }
            if (newlines >= 2 && j < n && j > start) {
                spans.emplace_back(start, j);
                start = j;
            }
            i = j;
            continue;
        }
        ++i;
    }
    if (start < n) spans.emplace_back(start, n);
    return spans;
}

std::vector<TextUnit> chunk(const Document& doc, size_t target_size, size_t overlap) {
    if (target_size <= overlap) throw PipelineError("chunk target_size must exceed overlap");

    std::vector<TextUnit> units;
    auto sentences = sentence_spans(doc.text);
    if (sentences.empty()) return units;

    const size_t m = sentences.size();
    size_t i = 0;
    int ordinal = 0;
    while (i < m) {
        size_t begin = sentences[i].first;
        size_t j = i;
        size_t end = sentences[j].second;
        // grow until the chunk reaches target size; the sentence that crosses
        // the line is included, so units run at most one sentence long
        while (end - begin < target_size && j + 1 < m) {
            ++j;
            end = sentences[j].second;
        }

        TextUnit unit;
        unit.doc_id = doc.doc_id;
        unit.unit_id = doc.doc_id + ":" + std::to_string(ordinal);
        unit.span_begin = begin;
        unit.span_end = end;
        unit.text = doc.text.substr(begin, end - begin);
        units.push_back(std::move(unit));
        ++ordinal;

        if (j + 1 >= m) break;

        // next chunk re-reads up to `overlap` chars of trailing sentences
        size_t k = j + 1;
        size_t acc = 0;
        while (k > i + 1) {
            size_t slen = sentences[k - 1].second - sentences[k - 1].first;
            if (acc + slen > overlap) break;
            acc += slen;
            --k;
        }
        i = k;
    }
    return units;
}

// ---------------------------------------------------------------------------
// Serialization

json document_to_json(const Document& doc) {
    return json{{"doc_id", doc.doc_id},
                {"url", doc.ref.url},
                {"title", doc.ref.title},
                {"rank", doc.ref.rank},
                {"retrieved_at", doc.ref.retrieved_at},
                {"text", doc.text}};
}

Document document_from_json(const json& j) {
    Document doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.ref.url = j.at("url").get<std::string>();
    doc.ref.title = j.at("title").get<std::string>();
    doc.ref.rank = j.at("rank").get<int>();
    doc.ref.retrieved_at = j.at("retrieved_at").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    return doc;
}

json unit_to_json(const TextUnit& unit) {
    return json{{"unit_id", unit.unit_id},
                {"doc_id", unit.doc_id},
                {"text", unit.text},
                {"span_begin", unit.span_begin},
                {"span_end", unit.span_end}};
}

TextUnit unit_from_json(const json& j) {
    TextUnit unit;
    unit.unit_id = j.at("unit_id").get<std::string>();
    unit.doc_id = j.at("doc_id").get<std::string>();
    unit.text = j.at("text").get<std::string>();
    unit.span_begin = j.at("span_begin").get<size_t>();
    unit.span_end = j.at("span_end").get<size_t>();
    return unit;
}

} // namespace iab::corpus
