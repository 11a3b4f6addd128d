#pragma once

#include <set>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/corpus.hpp"
#include "iab/gateway.hpp"

namespace iab::story_graph {

struct Assertion {
    std::string subject;
    std::string relation_text; // short natural-language claim, 3..200 chars
    std::string object;
    std::set<std::string> evidence; // unit_ids, non-empty
};

struct Edge {
    std::string subject;  // normalized entity
    std::string relation; // normalized relation key
    std::string object;   // normalized entity
    long weight = 1;      // merged assertion count
    std::set<std::string> evidence;
};

struct StoryGraph {
    std::string query_id;
    std::vector<std::string> nodes; // sorted unique normalized entities
    std::vector<Edge> edges;        // sorted by (subject, relation, object)
};

// Case-fold, collapse whitespace, strip leading articles and honorific
// titles, trim stray quotes and trailing punctuation. String-level only; no
// coreference.
std::string normalize_entity(const std::string& raw);

// Case-fold and whitespace collapse only; claims keep their granularity.
std::string normalize_relation(const std::string& raw);

// One LLM call per unit (plus at most one repair reprompt). A rejected output
// contributes no assertions; *schema_failed reports that so callers can log
// drop counts. Assertions failing the local invariants (empty endpoint,
// self-loop, relation length) are dropped silently.
std::vector<Assertion> extract_assertions(const corpus::TextUnit& unit, gateway::Gateway& gw,
                                          const std::string& model_id,
                                          bool* schema_failed = nullptr);

// Merge duplicate (subject, relation, object) assertions after normalization;
// weight counts merged assertions, evidence is the union. Output is
// canonically sorted so construction is order-independent.
StoryGraph build_graph(const std::vector<Assertion>& assertions, const std::string& query_id);

// Stable id derived from the normalized (subject, relation, object) triple.
std::string edge_id(const Edge& e);

json graph_to_json(const StoryGraph& g);
StoryGraph graph_from_json(const json& j);

// {"nodes": n, "edges": m} for the instance audit field.
json graph_stats(const StoryGraph& g);

} // namespace iab::story_graph
