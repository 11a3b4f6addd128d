#pragma once

#include <map>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/story_graph.hpp"
#include "iab/theme_engine.hpp"

namespace iab::packet_forge {

// A story edge whose endpoints sit in different communities.
struct Connector {
    std::string connector_id;
    std::string subject;
    std::string relation;
    std::string object;
    int source_community = 0;
    int target_community = 0;
    long weight = 1;
    long evidence_mass = 0;
    std::vector<std::string> evidence; // unit_ids, sorted
};

// 2 themes (Core, Bridge) or 3 (Core, Bridge, Core), joined by the listed
// connectors between adjacent themes.
struct Bundle {
    std::vector<int> themes;
    std::vector<std::string> roles; // parallel to themes
    std::vector<std::string> connector_ids;
};

struct Packet {
    std::string packet_id;
    Bundle bundle;
    std::vector<theme_engine::CommunityCard> cards; // one per theme, bundle order
    std::vector<Connector> connectors;              // full records for the bundle's links
};

std::vector<Connector> find_connectors(const story_graph::StoryGraph& g,
                                       const theme_engine::Partition& p);

// Ranked by (weight desc, evidence mass desc, connector_id asc).
std::vector<Connector> select_top_connectors(std::vector<Connector> connectors, int k);

// Core communities in influence order pair with Bridges they share a selected
// connector with; a second linked Core extends the pair to a triple. Bundles
// with an already-seen theme set are dropped, then the list is truncated.
std::vector<Bundle> build_bundles(const theme_engine::RoleAssignment& roles,
                                  const std::map<int, theme_engine::InfluenceBreakdown>& influence,
                                  const std::vector<Connector>& selected, int max_bundles);

// Packs the bundle's cards and connectors; estimated tokens = serialized
// chars / 4. Over budget, findings are dropped lowest evidence mass first,
// never below one per card; throws when the floor still does not fit.
Packet assemble_packet(const Bundle& bundle,
                       const std::map<int, theme_engine::CommunityCard>& cards,
                       const std::vector<Connector>& selected, long token_budget);

long estimate_tokens(const Packet& packet);

json connector_to_json(const Connector& c);
Connector connector_from_json(const json& j);
json packet_to_json(const Packet& p);
Packet packet_from_json(const json& j);

} // namespace iab::packet_forge
