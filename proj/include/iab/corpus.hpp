#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/gateway.hpp"

namespace iab::corpus {

struct DocumentRef {
    std::string url;
    std::string title;
    int rank = 1;                // 1-based result position
    std::string retrieved_at;    // ISO-8601 UTC; fixed by the page store on replay
};

struct Document {
    DocumentRef ref;
    std::string text;   // extracted main content
    std::string doc_id; // "d" + stable hash of url
};

struct TextUnit {
    std::string unit_id; // "<doc_id>:<ordinal>"
    std::string doc_id;
    std::string text;
    size_t span_begin = 0;
    size_t span_end = 0; // half-open [begin, end) within the document text
};

std::string doc_id_for_url(const std::string& url);

// Query the search endpoint through the gateway; keeps rank order and drops
// later duplicates of the same canonical URL. Zero hits is reported via the
// empty vector so callers can skip the seed rather than abort.
std::vector<DocumentRef> search(gateway::Gateway& gw, const std::string& query, int max_results);

// ---------------------------------------------------------------------------
// Page store: record/replay for fetched pages, one body file plus an index
// entry per URL. In record mode a miss goes through the fetch transport and
// is persisted (body, status, content type, timestamp); in replay mode the
// store is read-only and an absent URL replays as a fetch failure.

struct FetchResult {
    int status = 0;
    std::string content_type;
    std::string body;
    std::string retrieved_at;
};

using FetchTransport = std::function<FetchResult(const std::string& url)>;

FetchTransport make_http_fetch_transport();

class PageStore {
public:
    PageStore(gateway::Mode mode, std::filesystem::path dir, FetchTransport fetch = nullptr);

    // nullopt = the URL could not be fetched (recorded failure or live error).
    std::optional<FetchResult> get(const std::string& url);

    long live_fetches() const { return live_fetches_; }

private:
    void load_index();
    void save_index() const;

    gateway::Mode mode_;
    std::filesystem::path dir_;
    FetchTransport fetch_;
    json index_; // url -> {file, status, content_type, retrieved_at}
    long live_fetches_ = 0;
};

// ---------------------------------------------------------------------------
// Extraction & chunking

struct FetchOutcome {
    std::optional<Document> doc;
    std::string skip_reason; // set when doc is empty: fetch_failed, http_error,
                             // non_html, too_short
};

// Readability-style extraction: strips script/style/nav/header/footer/aside,
// keeps block-level text. Pages under min_chars of extracted text are skipped.
FetchOutcome fetch_and_extract(const DocumentRef& ref, PageStore& store, size_t min_chars = 200);

// Main-content extraction from raw HTML; returns cleaned paragraphs joined by
// blank lines.
std::string extract_main_text(const std::string& html);

// Sentence spans tiling [0, text.size()) exactly; trailing whitespace belongs
// to the preceding sentence.
std::vector<std::pair<size_t, size_t>> sentence_spans(const std::string& text);

// Sentence-aligned chunks of about target_size chars; consecutive units share
// up to `overlap` chars of trailing context, so reassembly (dropping each
// unit's shared prefix) reproduces the document byte-for-byte.
std::vector<TextUnit> chunk(const Document& doc, size_t target_size, size_t overlap);

json document_to_json(const Document& doc);
Document document_from_json(const json& j);
json unit_to_json(const TextUnit& unit);
TextUnit unit_from_json(const json& j);

} // namespace iab::corpus
