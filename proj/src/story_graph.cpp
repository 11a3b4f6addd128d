#include "iab/story_graph.hpp"

#include <cstring>
#include <map>
#include <tuple>

namespace iab::story_graph {

std::string normalize_entity(const std::string& raw) {
    std::string s = to_lower(normalize_ws(raw));
    while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.erase(0, 1);
    while (!s.empty() &&
           (s.back() == '"' || s.back() == '\'' || s.back() == '.' || s.back() == ','))
        s.pop_back();

    static const char* honorifics[] = {"mr",   "mrs",  "ms",        "dr",      "prof",
                                       "sir",  "dame", "president", "senator", "governor",
                                       "rev",  "gen",  "col",       "lt"};
    bool changed = true;
    while (changed) {
        changed = false;
        for (const char* art : {"the ", "a ", "an "}) {
            if (s.rfind(art, 0) == 0) {
                s.erase(0, std::strlen(art));
                changed = true;
            }
        }
        for (const char* h : honorifics) {
            size_t len = std::strlen(h);
            if (s.size() > len && s.compare(0, len, h) == 0 &&
                (s[len] == ' ' || (s[len] == '.' && len + 1 < s.size() && s[len + 1] == ' '))) {
                s.erase(0, len + (s[len] == '.' ? 2 : 1));
                changed = true;
            }
        }
    }
    return trim(s);
}

std::string normalize_relation(const std::string& raw) {
    return to_lower(normalize_ws(raw));
}

std::vector<Assertion> extract_assertions(const corpus::TextUnit& unit, gateway::Gateway& gw,
                                          const std::string& model_id, bool* schema_failed) {
    if (trim(unit.text).empty()) throw PipelineError("cannot extract from an empty text unit");
    if (schema_failed) *schema_failed = false;

    gateway::ChatRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = 2048;
    req.messages = {
        {"system",
         "You extract factual relational assertions from news text. Respond with JSON only."},
        {"user",
         "Read the passage and list the relational assertions it makes between named "
         "entities. Each assertion has a subject entity, a short natural-language relation "
         "(a verb phrase or claim of 3 to 200 characters), and an object entity. Return "
         "ONLY a JSON array of objects with exactly the keys \"subject\", \"relation\", "
         "\"object\". Return [] if the passage makes no such assertions.\n\nPassage:\n" +
             unit.text}};

    std::string err;
    auto parsed = gateway::complete_json(gw, req, "extraction_array", err);
    if (!parsed) {
        if (schema_failed) *schema_failed = true;
        return {};
    }

    std::vector<Assertion> out;
    for (const auto& item : *parsed) {
        Assertion a;
        a.subject = normalize_ws(item.at("subject").get<std::string>());
        a.relation_text = normalize_ws(item.at("relation").get<std::string>());
        a.object = normalize_ws(item.at("object").get<std::string>());
        a.evidence = {unit.unit_id};
        if (a.subject.empty() || a.object.empty()) continue;
        if (a.relation_text.size() < 3 || a.relation_text.size() > 200) continue;
        if (normalize_entity(a.subject) == normalize_entity(a.object)) continue;
        if (normalize_entity(a.subject).empty() || normalize_entity(a.object).empty()) continue;
        out.push_back(std::move(a));
    }
    return out;
}

StoryGraph build_graph(const std::vector<Assertion>& assertions, const std::string& query_id) {
    StoryGraph g;
    g.query_id = query_id;

    std::map<std::tuple<std::string, std::string, std::string>, Edge> merged;
    for (const auto& a : assertions) {
        std::string s = normalize_entity(a.subject);
        std::string o = normalize_entity(a.object);
        std::string r = normalize_relation(a.relation_text);
        if (s.empty() || o.empty() || s == o || a.evidence.empty()) continue;

        auto key = std::make_tuple(s, r, o);
        auto it = merged.find(key);
        if (it == merged.end()) {
            Edge e;
            e.subject = s;
            e.relation = r;
            e.object = o;
            e.weight = 1;
            e.evidence = a.evidence;
            merged.emplace(std::move(key), std::move(e));
        } else {
            it->second.weight += 1;
            it->second.evidence.insert(a.evidence.begin(), a.evidence.end());
        }
    }

    std::set<std::string> nodes;
    g.edges.reserve(merged.size());
    for (auto& [key, e] : merged) {
        nodes.insert(e.subject);
        nodes.insert(e.object);
        g.edges.push_back(std::move(e));
    }
    g.nodes.assign(nodes.begin(), nodes.end());
    return g;
}

std::string edge_id(const Edge& e) {
    return "e" + hash_hex(fnv1a64(e.subject + "\x1f" + e.relation + "\x1f" + e.object));
}

json graph_to_json(const StoryGraph& g) {
    json edges = json::array();
    for (const auto& e : g.edges) {
        edges.push_back(json{{"subject", e.subject},
                             {"relation", e.relation},
                             {"object", e.object},
                             {"weight", e.weight},
                             {"evidence", json(e.evidence)}});
    }
    return json{{"query_id", g.query_id}, {"nodes", g.nodes}, {"edges", edges}};
}

StoryGraph graph_from_json(const json& j) {
    StoryGraph g;
    g.query_id = j.at("query_id").get<std::string>();
    g.nodes = j.at("nodes").get<std::vector<std::string>>();
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.subject = je.at("subject").get<std::string>();
        e.relation = je.at("relation").get<std::string>();
        e.object = je.at("object").get<std::string>();
        e.weight = je.at("weight").get<long>();
        e.evidence = je.at("evidence").get<std::set<std::string>>();
        g.edges.push_back(std::move(e));
    }
    return g;
}

json graph_stats(const StoryGraph& g) {
    return json{{"nodes", g.nodes.size()}, {"edges", g.edges.size()}};
}

} // namespace iab::story_graph
