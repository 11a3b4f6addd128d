#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iab/common.hpp"

namespace iab::gateway {

enum class Mode { record, replay, live };

Mode mode_from_string(std::string_view s);
std::string mode_to_string(Mode m);

struct Message {
    std::string role; // "system" or "user"
    std::string text;
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    // Canonical form used for cassette keys: field order is fixed here, so the
    // hash never depends on how callers assembled the request.
    json canonical() const;
    std::string request_hash() const;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::string model_id;
    TokenUsage usage;
    std::string fingerprint; // hash of (request hash, text)
};

struct SearchRequest {
    std::string query;
    int max_results = 10;

    json canonical() const;
    std::string request_hash() const;
};

struct SearchHit {
    std::string url;
    std::string title;
    int rank = 1;
};

struct SearchResponse {
    std::vector<SearchHit> hits;
};

// ---------------------------------------------------------------------------
// Errors

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ReplayMissError : std::runtime_error {
    explicit ReplayMissError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProviderPayloadError : std::runtime_error {
    explicit ProviderPayloadError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Cassette: request-hash -> recorded response, one JSON file per stage.

class Cassette {
public:
    Cassette() = default;
    explicit Cassette(std::filesystem::path file);

    // Loads entries if the file exists; a missing file is an empty cassette.
    void load();
    void save() const;

    std::optional<json> lookup(const std::string& request_hash) const;
    void store(const std::string& request_hash, json entry);
    size_t size() const { return entries_.size(); }

    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
    std::map<std::string, json> entries_;
};

// ---------------------------------------------------------------------------
// Transports. Live implementations speak HTTP; tests inject deterministic
// lambdas. A transport failure is signalled by throwing TransportError.

using ChatTransport = std::function<ChatResponse(const ChatRequest&)>;
using SearchTransport = std::function<SearchResponse(const SearchRequest&)>;

struct RetryPolicy {
    int attempts = 3;
    int base_delay_ms = 100; // doubled per retry
};

// Provider-neutral HTTP transports. chat_base/search_base are origin URLs
// (e.g. "http://localhost:8080"); POST {chat_base}/v1/chat and
// GET {search_base}/search?q=...&format=json.
ChatTransport make_http_chat_transport(std::string chat_base);
SearchTransport make_http_search_transport(std::string search_base);

// ---------------------------------------------------------------------------
// Gateway: uniform record/replay/live front for chat and search calls.
// Thread-safe; cassette access is serialized internally.

class Gateway {
public:
    Gateway(Mode mode, std::filesystem::path cassette_file, ChatTransport chat = nullptr,
            SearchTransport search = nullptr, RetryPolicy retry = {});
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    ChatResponse complete(const ChatRequest& req);
    SearchResponse search(const SearchRequest& req);

    // Number of transport invocations since construction; must stay 0 in
    // replay mode.
    long live_calls() const { return live_calls_.load(); }

    Mode mode() const { return mode_; }

    // Persists the cassette now (also done on destruction in record mode).
    void flush();

private:
    ChatResponse transport_chat(const ChatRequest& req);
    SearchResponse transport_search(const SearchRequest& req);

    Mode mode_;
    Cassette cassette_;
    ChatTransport chat_;
    SearchTransport search_;
    RetryPolicy retry_;
    std::atomic<long> live_calls_{0};
    mutable std::mutex mu_;
    bool dirty_ = false;
};

// ---------------------------------------------------------------------------
// Structured-output parsing. schema_id selects one of the pipeline's wire
// schemas; any failure means the model output is rejected, not a crash.
//
//   qa_array          array of QA candidate objects (7 exact keys each)
//   judge_object      object with exactly the 16 judge keys (8 flags + 8 reasons)
//   grade_object      object with exactly {label, reasoning}
//   extraction_array  array of {subject, relation, object} string triples
//
// Returns the validated value, or nullopt with a diagnostic in `error`.
std::optional<json> parse_json_payload(const std::string& text, const std::string& schema_id,
                                       std::string& error);

// The 8 judge criteria, in wire order; flag keys are "<name>_flag" and
// reasoning keys "<name>_reasoning".
const std::vector<std::string>& judge_criteria();

// Drop a surrounding markdown code fence, if any, before JSON parsing.
std::string strip_fence(const std::string& text);

// Structured completion with the pipeline's bounded repair rule: one reprompt
// carrying a "return valid JSON" reminder after a schema violation, then the
// candidate is rejected (nullopt). Transport errors still propagate.
std::optional<json> complete_json(Gateway& gw, const ChatRequest& req,
                                  const std::string& schema_id, std::string& error);

} // namespace iab::gateway
