#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "iab/gateway.hpp"

#include <thread>

namespace iab::gateway {

Mode mode_from_string(std::string_view s) {
    if (s == "record") return Mode::record;
    if (s == "replay") return Mode::replay;
    if (s == "live") return Mode::live;
    throw ConfigError("unknown gateway mode: " + std::string(s));
}

std::string mode_to_string(Mode m) {
    switch (m) {
        case Mode::record: return "record";
        case Mode::replay: return "replay";
        case Mode::live: return "live";
    }
    return "replay";
}

json ChatRequest::canonical() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
    return json{{"kind", "chat"},
                {"model_id", model_id},
                {"messages", std::move(msgs)},
                {"temperature", temperature},
                {"max_tokens", max_tokens}};
}

std::string ChatRequest::request_hash() const {
    return stable_json_hash(canonical());
}

json SearchRequest::canonical() const {
    return json{{"kind", "search"}, {"query", query}, {"max_results", max_results}};
}

std::string SearchRequest::request_hash() const {
    return stable_json_hash(canonical());
}

// ---------------------------------------------------------------------------
// Cassette

Cassette::Cassette(std::filesystem::path file) : file_(std::move(file)) {}

void Cassette::load() {
    entries_.clear();
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    json doc = load_json_file(file_);
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_object())
        throw IoError("malformed cassette file: " + file_.string());
    for (auto& [key, value] : doc["entries"].items()) entries_[key] = value;
}

void Cassette::save() const {
    if (file_.empty()) return;
    json entries = json::object();
    for (const auto& [key, value] : entries_) entries[key] = value;
    write_file(file_, dump_pretty(json{{"version", 1}, {"entries", std::move(entries)}}));
}

std::optional<json> Cassette::lookup(const std::string& request_hash) const {
    auto it = entries_.find(request_hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Cassette::store(const std::string& request_hash, json entry) {
    entries_[request_hash] = std::move(entry);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(Mode mode, std::filesystem::path cassette_file, ChatTransport chat,
                 SearchTransport search, RetryPolicy retry)
    : mode_(mode), cassette_(std::move(cassette_file)), chat_(std::move(chat)),
      search_(std::move(search)), retry_(retry) {
    cassette_.load();
}

Gateway::~Gateway() {
    if (dirty_) {
        try {
            cassette_.save();
        } catch (...) {
            // destructor must not throw; a failed save surfaces on the next load
        }
    }
}

void Gateway::flush() {
    std::lock_guard<std::mutex> lock(mu_);
    cassette_.save();
    dirty_ = false;
}

static std::string make_fingerprint(const std::string& request_hash, const std::string& text) {
    return hash_hex(fnv1a64(request_hash + "\n" + text));
}

template <typename Fn>
static auto with_retries(const RetryPolicy& retry, Fn&& fn) {
    int attempts = std::max(1, retry.attempts);
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt + 1 >= attempts) throw;
            int delay = retry.base_delay_ms << attempt;
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

ChatResponse Gateway::transport_chat(const ChatRequest& req) {
    if (!chat_) throw TransportError("no chat transport configured");
    live_calls_.fetch_add(1);
    return with_retries(retry_, [&] { return chat_(req); });
}

SearchResponse Gateway::transport_search(const SearchRequest& req) {
    if (!search_) throw TransportError("no search transport configured");
    live_calls_.fetch_add(1);
    return with_retries(retry_, [&] { return search_(req); });
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    if (req.messages.empty()) throw PipelineError("chat request has no messages");
    const std::string key = req.request_hash();

    if (mode_ != Mode::live) {
        std::lock_guard<std::mutex> lock(mu_);
        if (auto entry = cassette_.lookup(key)) {
            ChatResponse resp;
            resp.text = entry->at("response").at("text").get<std::string>();
            resp.model_id = entry->at("response").at("model_id").get<std::string>();
            resp.usage.prompt_tokens = entry->at("response").at("usage").at("prompt_tokens").get<long>();
            resp.usage.completion_tokens =
                entry->at("response").at("usage").at("completion_tokens").get<long>();
            resp.fingerprint = make_fingerprint(key, resp.text);
            return resp;
        }
        if (mode_ == Mode::replay)
            throw ReplayMissError("replay miss for chat request " + key + " (model " +
                                  req.model_id + ")");
    }

    ChatResponse resp = transport_chat(req);
    resp.fingerprint = make_fingerprint(key, resp.text);

    if (mode_ == Mode::record) {
        std::lock_guard<std::mutex> lock(mu_);
        if (auto entry = cassette_.lookup(key)) {
            // another caller recorded the same request first; keep one entry
            ChatResponse stored;
            stored.text = entry->at("response").at("text").get<std::string>();
            stored.model_id = entry->at("response").at("model_id").get<std::string>();
            stored.usage.prompt_tokens =
                entry->at("response").at("usage").at("prompt_tokens").get<long>();
            stored.usage.completion_tokens =
                entry->at("response").at("usage").at("completion_tokens").get<long>();
            stored.fingerprint = make_fingerprint(key, stored.text);
            return stored;
        }
        cassette_.store(key, json{{"kind", "chat"},
                                  {"request", req.canonical()},
                                  {"response",
                                   {{"text", resp.text},
                                    {"model_id", resp.model_id},
                                    {"usage",
                                     {{"prompt_tokens", resp.usage.prompt_tokens},
                                      {"completion_tokens", resp.usage.completion_tokens}}}}}});
        dirty_ = true;
    }
    return resp;
}

SearchResponse Gateway::search(const SearchRequest& req) {
    if (trim(req.query).empty()) throw PipelineError("search query is empty");
    const std::string key = req.request_hash();

    if (mode_ != Mode::live) {
        std::lock_guard<std::mutex> lock(mu_);
        if (auto entry = cassette_.lookup(key)) {
            SearchResponse resp;
            for (const auto& hit : entry->at("response").at("results"))
                resp.hits.push_back({hit.at("url").get<std::string>(),
                                     hit.at("title").get<std::string>(),
                                     hit.at("rank").get<int>()});
            return resp;
        }
        if (mode_ == Mode::replay)
            throw ReplayMissError("replay miss for search request " + key + " (query \"" +
                                  req.query + "\")");
    }

    SearchResponse resp = transport_search(req);

    if (mode_ == Mode::record) {
        std::lock_guard<std::mutex> lock(mu_);
        if (auto entry = cassette_.lookup(key)) {
            SearchResponse stored;
            for (const auto& hit : entry->at("response").at("results"))
                stored.hits.push_back({hit.at("url").get<std::string>(),
                                       hit.at("title").get<std::string>(),
                                       hit.at("rank").get<int>()});
            return stored;
        }
        json results = json::array();
        for (const auto& hit : resp.hits)
            results.push_back({{"url", hit.url}, {"title", hit.title}, {"rank", hit.rank}});
        cassette_.store(key, json{{"kind", "search"},
                                  {"request", req.canonical()},
                                  {"response", {{"results", std::move(results)}}}});
        dirty_ = true;
    }
    return resp;
}

// ---------------------------------------------------------------------------
// HTTP transports

static std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

ChatTransport make_http_chat_transport(std::string chat_base) {
    return [chat_base](const ChatRequest& req) -> ChatResponse {
        httplib::Client cli(chat_base);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(120);
        json body = {{"model_id", req.model_id},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens}};
        json msgs = json::array();
        for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
        body["messages"] = std::move(msgs);

        auto res = cli.Post("/v1/chat", body.dump(), "application/json");
        if (!res) throw TransportError("chat endpoint unreachable: " + chat_base);
        if (res->status != 200)
            throw TransportError("chat endpoint returned status " + std::to_string(res->status));

        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderPayloadError(std::string("chat payload is not JSON: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string())
            throw ProviderPayloadError("chat payload missing string field \"text\"");

        ChatResponse resp;
        resp.text = doc["text"].get<std::string>();
        resp.model_id = req.model_id;
        if (doc.contains("usage") && doc["usage"].is_object()) {
            resp.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
            resp.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
        } else {
            // rough fallback so token budgeting still has a signal
            long chars = 0;
            for (const auto& m : req.messages) chars += static_cast<long>(m.text.size());
            resp.usage.prompt_tokens = chars / 4;
            resp.usage.completion_tokens = static_cast<long>(resp.text.size()) / 4;
        }
        return resp;
    };
}

SearchTransport make_http_search_transport(std::string search_base) {
    return [search_base](const SearchRequest& req) -> SearchResponse {
        httplib::Client cli(search_base);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(60);
        std::string path = "/search?format=json&q=" + url_encode(req.query);

        auto res = cli.Get(path);
        if (!res) throw TransportError("search endpoint unreachable: " + search_base);
        if (res->status != 200)
            throw TransportError("search endpoint returned status " + std::to_string(res->status));

        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderPayloadError(std::string("search payload is not JSON: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array())
            throw ProviderPayloadError("search payload missing array field \"results\"");

        SearchResponse resp;
        int rank = 1;
        for (const auto& item : doc["results"]) {
            if (!item.is_object() || !item.contains("url") || !item["url"].is_string()) continue;
            SearchHit hit;
            hit.url = item["url"].get<std::string>();
            hit.title = item.value("title", std::string{});
            hit.rank = rank++;
            resp.hits.push_back(std::move(hit));
            if (static_cast<int>(resp.hits.size()) >= req.max_results) break;
        }
        return resp;
    };
}

// ---------------------------------------------------------------------------
// Structured-output schemas

const std::vector<std::string>& judge_criteria() {
    static const std::vector<std::string> names = {
        "evidence_only_support",
        "multi_community_necessity",
        "connector_necessity",
        "objective_qa",
        "natural_user_question",
        "anti_trivia",
        "evidence_presence_consistency",
        "standalone_clarity",
    };
    return names;
}

// Models sometimes wrap JSON in a markdown fence; strip that before parsing.
std::string strip_fence(const std::string& text) {
    std::string s = trim(text);
    if (s.rfind("```", 0) == 0) {
        size_t start = s.find('\n');
        size_t end = s.rfind("```");
        if (start != std::string::npos && end != std::string::npos && end > start)
            return trim(s.substr(start + 1, end - start - 1));
    }
    return s;
}

namespace {

bool check_exact_keys(const json& obj, const std::vector<std::string>& keys, std::string& error) {
    if (!obj.is_object()) {
        error = "expected a JSON object";
        return false;
    }
    for (const auto& k : keys) {
        if (!obj.contains(k)) {
            error = "missing key \"" + k + "\"";
            return false;
        }
    }
    if (obj.size() != keys.size()) {
        for (auto& [k, v] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                error = "unexpected key \"" + k + "\"";
                return false;
            }
        }
    }
    return true;
}

bool validate_qa_array(const json& doc, std::string& error) {
    if (!doc.is_array()) {
        error = "expected a JSON array of QA candidates";
        return false;
    }
    static const std::vector<std::string> item_keys = {
        "question",          "answer",
        "required_communities", "supporting_findings",
        "supporting_connectors", "intent_pattern",
        "why_multi_community"};
    for (size_t i = 0; i < doc.size(); ++i) {
        const json& item = doc[i];
        std::string where = "item " + std::to_string(i) + ": ";
        if (!check_exact_keys(item, item_keys, error)) {
            error = where + error;
            return false;
        }
        if (!item["question"].is_string() || !item["answer"].is_string() ||
            !item["intent_pattern"].is_string() || !item["why_multi_community"].is_string()) {
            error = where + "question/answer/intent_pattern/why_multi_community must be strings";
            return false;
        }
        if (!item["required_communities"].is_array()) {
            error = where + "required_communities must be an array";
            return false;
        }
        for (const auto& c : item["required_communities"]) {
            if (!c.is_number_integer()) {
                error = where + "required_communities entries must be integers";
                return false;
            }
        }
        if (!item["supporting_findings"].is_array()) {
            error = where + "supporting_findings must be an array";
            return false;
        }
        for (const auto& f : item["supporting_findings"]) {
            static const std::vector<std::string> f_keys = {"community_id", "finding_id"};
            if (!check_exact_keys(f, f_keys, error)) {
                error = where + "supporting_findings: " + error;
                return false;
            }
            if (!f["community_id"].is_number_integer() || !f["finding_id"].is_string()) {
                error = where + "supporting_findings entries must be {community_id:int, finding_id:string}";
                return false;
            }
        }
        if (!item["supporting_connectors"].is_array()) {
            error = where + "supporting_connectors must be an array";
            return false;
        }
        for (const auto& c : item["supporting_connectors"]) {
            if (!c.is_string()) {
                error = where + "supporting_connectors entries must be strings";
                return false;
            }
        }
    }
    return true;
}

bool validate_judge_object(const json& doc, std::string& error) {
    std::vector<std::string> keys;
    for (const auto& name : judge_criteria()) {
        keys.push_back(name + "_flag");
        keys.push_back(name + "_reasoning");
    }
    if (!check_exact_keys(doc, keys, error)) return false;
    for (const auto& name : judge_criteria()) {
        const json& flag = doc[name + "_flag"];
        const json& reason = doc[name + "_reasoning"];
        if (!flag.is_boolean()) {
            error = name + "_flag must be a boolean";
            return false;
        }
        if (!reason.is_string() || reason.get<std::string>().empty()) {
            error = name + "_reasoning must be a non-empty string";
            return false;
        }
    }
    return true;
}

bool validate_grade_object(const json& doc, std::string& error) {
    static const std::vector<std::string> keys = {"label", "reasoning"};
    if (!check_exact_keys(doc, keys, error)) return false;
    if (!doc["label"].is_string() || !doc["reasoning"].is_string()) {
        error = "label and reasoning must be strings";
        return false;
    }
    const std::string label = doc["label"].get<std::string>();
    if (label != "CORRECT" && label != "INCORRECT" && label != "NOT_ATTEMPTED") {
        error = "label must be CORRECT, INCORRECT, or NOT_ATTEMPTED";
        return false;
    }
    return true;
}

bool validate_extraction_array(const json& doc, std::string& error) {
    if (!doc.is_array()) {
        error = "expected a JSON array of assertions";
        return false;
    }
    static const std::vector<std::string> keys = {"subject", "relation", "object"};
    for (size_t i = 0; i < doc.size(); ++i) {
        if (!check_exact_keys(doc[i], keys, error)) {
            error = "item " + std::to_string(i) + ": " + error;
            return false;
        }
        for (const auto& k : keys) {
            if (!doc[i][k].is_string()) {
                error = "item " + std::to_string(i) + ": " + k + " must be a string";
                return false;
            }
        }
    }
    return true;
}

} // namespace

std::optional<json> parse_json_payload(const std::string& text, const std::string& schema_id,
                                       std::string& error) {
    json doc;
    try {
        doc = json::parse(strip_fence(text));
    } catch (const json::exception& e) {
        error = std::string("invalid JSON: ") + e.what();
        return std::nullopt;
    }

    bool ok = false;
    if (schema_id == "qa_array") {
        ok = validate_qa_array(doc, error);
    } else if (schema_id == "judge_object") {
        ok = validate_judge_object(doc, error);
    } else if (schema_id == "grade_object") {
        ok = validate_grade_object(doc, error);
    } else if (schema_id == "extraction_array") {
        ok = validate_extraction_array(doc, error);
    } else {
        throw PipelineError("unknown payload schema: " + schema_id);
    }
    if (!ok) return std::nullopt;
    return doc;
}

std::optional<json> complete_json(Gateway& gw, const ChatRequest& req,
                                  const std::string& schema_id, std::string& error) {
    ChatResponse resp = gw.complete(req);
    if (auto parsed = parse_json_payload(resp.text, schema_id, error)) return parsed;

    ChatRequest repair = req;
    repair.messages.push_back(
        {"user", "Your previous reply was rejected: " + error +
                     ". Return ONLY valid JSON matching the required schema, with no extra text."});
    resp = gw.complete(repair);
    return parse_json_payload(resp.text, schema_id, error);
}

} // namespace iab::gateway
