#pragma once

#include <map>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/gateway.hpp"
#include "iab/story_graph.hpp"

namespace iab::theme_engine {

struct Partition {
    std::map<std::string, int> membership;               // node -> community
    std::map<int, std::vector<std::string>> communities; // dense ids from 0, members sorted
};

struct MetaEdge {
    int source = 0;
    int target = 0;
    double weight = 0.0;
    std::vector<std::string> edge_ids; // supporting story-edge ids, sorted
};

// Directed community-level graph; weight aggregates story edges crossing from
// source to target. No self loops.
struct MetaGraph {
    int community_count = 0;
    std::vector<MetaEdge> edges; // sorted by (source, target)
};

struct InfluenceBreakdown {
    double size_term = 0.0;     // log(1 + members)
    double pagerank_term = 0.0; // on the meta-graph
    double betweenness_term = 0.0;
    double evidence_term = 0.0; // unique evidence units over incident edges
    double z_size = 0.0;
    double z_pagerank = 0.0;
    double z_betweenness = 0.0;
    double z_evidence = 0.0;
    double influence = 0.0; // mean of the four z terms
};

enum class Role { Core, Bridge, Satellite, Peripheral };
std::string role_name(Role role);
Role role_from_name(const std::string& name);

struct RoleAssignment {
    std::map<int, Role> role;
    int k_core = 0;
    int k_bridge = 0;
    double tau_q = 0.0; // median meta-edge weight; +inf when there are no edges
};

struct Finding {
    std::string finding_id;
    std::string statement;
    std::vector<std::string> evidence; // unit_ids, sorted
};

struct CommunityCard {
    int community_id = 0;
    std::string role;
    double influence = 0.0;
    std::string summary;
    std::vector<Finding> findings;
};

// Leiden over the undirected weighted projection of the story graph.
// Community ids are dense from 0, ordered by each community's first node in
// the graph's sorted node list. Throws on an empty graph.
Partition detect_communities(const story_graph::StoryGraph& g, double resolution,
                             std::uint64_t rng_seed);

MetaGraph build_meta_graph(const story_graph::StoryGraph& g, const Partition& p);

// Population z-scores; a vector with no spread standardizes to all zeros.
std::vector<double> standardize(const std::vector<double>& raw);

std::map<int, InfluenceBreakdown> compute_influence(const MetaGraph& meta, const Partition& p,
                                                    const story_graph::StoryGraph& g);

// k_core = max(5, ceil(0.3 n)) and k_bridge = max(3, ceil(0.2 n)), both
// clamped to n. Integer arithmetic so the ceilings are exact.
std::pair<int, int> core_bridge_counts(int n_communities);

// Core by influence, Bridge by betweenness among the rest (ties go to the
// lower community id), Satellite = adjacent to Core/Bridge with a meta-edge
// weight at or above the median, Peripheral otherwise.
RoleAssignment assign_roles(const MetaGraph& meta,
                            const std::map<int, InfluenceBreakdown>& influence);

// Extractive findings from intra-community edges (ranked by evidence mass,
// then weight, then finding id), polished by one LLM call that must preserve
// the finding ids. On a second schema failure *failed is set and the raw
// extractive card is returned so the caller can exclude it.
CommunityCard build_community_card(int community_id, const Partition& p,
                                   const story_graph::StoryGraph& g, gateway::Gateway& gw,
                                   const std::string& model_id, int max_findings,
                                   bool* failed = nullptr);

json card_to_json(const CommunityCard& card);
CommunityCard card_from_json(const json& j);

// communities/<query_id>.json payload: partition + roles + influence.
json communities_artifact_json(const std::string& query_id, const Partition& p,
                               const std::map<int, InfluenceBreakdown>& influence,
                               const RoleAssignment& roles);

} // namespace iab::theme_engine
