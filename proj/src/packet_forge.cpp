#include "iab/packet_forge.hpp"

#include <algorithm>
#include <set>

namespace iab::packet_forge {

std::vector<Connector> find_connectors(const story_graph::StoryGraph& g,
                                       const theme_engine::Partition& p) {
    std::vector<Connector> out;
    for (const auto& e : g.edges) {
        int cs = p.membership.at(e.subject);
        int co = p.membership.at(e.object);
        if (cs == co) continue;
        Connector c;
        c.connector_id = "c" + story_graph::edge_id(e).substr(1);
        c.subject = e.subject;
        c.relation = e.relation;
        c.object = e.object;
        c.source_community = cs;
        c.target_community = co;
        c.weight = e.weight;
        c.evidence_mass = static_cast<long>(e.evidence.size());
        c.evidence.assign(e.evidence.begin(), e.evidence.end());
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Connector> select_top_connectors(std::vector<Connector> connectors, int k) {
    if (k < 1) throw PipelineError("connector top-k must be positive");
    std::stable_sort(connectors.begin(), connectors.end(),
                     [](const Connector& a, const Connector& b) {
                         if (a.weight != b.weight) return a.weight > b.weight;
                         if (a.evidence_mass != b.evidence_mass)
                             return a.evidence_mass > b.evidence_mass;
                         return a.connector_id < b.connector_id;
                     });
    if (static_cast<int>(connectors.size()) > k) connectors.resize(k);
    return connectors;
}

std::vector<Bundle> build_bundles(const theme_engine::RoleAssignment& roles,
                                  const std::map<int, theme_engine::InfluenceBreakdown>& influence,
                                  const std::vector<Connector>& selected, int max_bundles) {
    if (max_bundles < 1) return {};

    auto by_influence_desc = [&](int a, int b) {
        double ia = influence.count(a) ? influence.at(a).influence : 0.0;
        double ib = influence.count(b) ? influence.at(b).influence : 0.0;
        if (ia != ib) return ia > ib;
        return a < b;
    };

    std::vector<int> cores, bridges;
    for (const auto& [cid, role] : roles.role) {
        if (role == theme_engine::Role::Core) cores.push_back(cid);
        if (role == theme_engine::Role::Bridge) bridges.push_back(cid);
    }
    std::sort(cores.begin(), cores.end(), by_influence_desc);
    std::sort(bridges.begin(), bridges.end(), by_influence_desc);

    // connectors linking an unordered community pair
    std::map<std::pair<int, int>, std::vector<std::string>> links;
    for (const auto& c : selected) {
        auto key = std::minmax(c.source_community, c.target_community);
        links[{key.first, key.second}].push_back(c.connector_id);
    }
    for (auto& [key, ids] : links) std::sort(ids.begin(), ids.end());
    auto linking = [&](int a, int b) -> const std::vector<std::string>* {
        auto key = std::minmax(a, b);
        auto it = links.find({key.first, key.second});
        return it == links.end() ? nullptr : &it->second;
    };

    std::vector<Bundle> out;
    std::set<std::set<int>> seen;
    auto emit = [&](Bundle b) {
        std::set<int> key(b.themes.begin(), b.themes.end());
        if (!seen.insert(std::move(key)).second) return;
        out.push_back(std::move(b));
    };

    for (int c : cores) {
        for (int b : bridges) {
            const auto* cb = linking(c, b);
            if (!cb) continue;
            Bundle pair;
            pair.themes = {c, b};
            pair.roles = {"Core", "Bridge"};
            pair.connector_ids = *cb;
            emit(std::move(pair));
            for (int c2 : cores) {
                if (c2 == c) continue;
                const auto* bc2 = linking(b, c2);
                if (!bc2) continue;
                Bundle triple;
                triple.themes = {c, b, c2};
                triple.roles = {"Core", "Bridge", "Core"};
                triple.connector_ids = *cb;
                triple.connector_ids.insert(triple.connector_ids.end(), bc2->begin(),
                                            bc2->end());
                std::sort(triple.connector_ids.begin(), triple.connector_ids.end());
                triple.connector_ids.erase(std::unique(triple.connector_ids.begin(),
                                                       triple.connector_ids.end()),
                                           triple.connector_ids.end());
                emit(std::move(triple));
            }
        }
    }
    if (static_cast<int>(out.size()) > max_bundles) out.resize(max_bundles);
    return out;
}

long estimate_tokens(const Packet& packet) {
    return static_cast<long>(dump_line(packet_to_json(packet)).size()) / 4;
}

Packet assemble_packet(const Bundle& bundle,
                       const std::map<int, theme_engine::CommunityCard>& cards,
                       const std::vector<Connector>& selected, long token_budget) {
    Packet p;
    p.bundle = bundle;
    std::string theme_key;
    for (int t : bundle.themes) theme_key += std::to_string(t) + ",";
    p.packet_id = "p" + hash_hex(fnv1a64(theme_key));

    for (int t : bundle.themes) {
        auto it = cards.find(t);
        if (it == cards.end())
            throw PipelineError("bundle theme " + std::to_string(t) + " has no card");
        p.cards.push_back(it->second);
    }

    std::set<std::string> wanted(bundle.connector_ids.begin(), bundle.connector_ids.end());
    for (const auto& c : selected)
        if (wanted.count(c.connector_id)) p.connectors.push_back(c);
    if (p.connectors.size() != wanted.size())
        throw PipelineError("bundle references a connector outside the selected set");

    while (estimate_tokens(p) > token_budget) {
        // cards keep findings ranked by evidence mass, so each card's last
        // finding is its weakest
        int victim = -1;
        size_t victim_mass = 0;
        for (size_t i = 0; i < p.cards.size(); ++i) {
            const auto& f = p.cards[i].findings;
            if (f.size() <= 1) continue;
            size_t mass = f.back().evidence.size();
            if (victim == -1 || mass < victim_mass) {
                victim = static_cast<int>(i);
                victim_mass = mass;
            }
        }
        if (victim == -1)
            throw PipelineError("packet " + p.packet_id + " cannot fit the token budget");
        p.cards[victim].findings.pop_back();
    }
    return p;
}

// ---------------------------------------------------------------------------
// Serialization

json connector_to_json(const Connector& c) {
    return json{{"connector_id", c.connector_id},
                {"subject", c.subject},
                {"relation", c.relation},
                {"object", c.object},
                {"source_community", c.source_community},
                {"target_community", c.target_community},
                {"weight", c.weight},
                {"evidence_mass", c.evidence_mass},
                {"evidence", c.evidence}};
}

Connector connector_from_json(const json& j) {
    Connector c;
    c.connector_id = j.at("connector_id").get<std::string>();
    c.subject = j.at("subject").get<std::string>();
    c.relation = j.at("relation").get<std::string>();
    c.object = j.at("object").get<std::string>();
    c.source_community = j.at("source_community").get<int>();
    c.target_community = j.at("target_community").get<int>();
    c.weight = j.at("weight").get<long>();
    c.evidence_mass = j.at("evidence_mass").get<long>();
    c.evidence = j.at("evidence").get<std::vector<std::string>>();
    return c;
}

json packet_to_json(const Packet& p) {
    json cards = json::array();
    for (const auto& c : p.cards) cards.push_back(theme_engine::card_to_json(c));
    json connectors = json::array();
    for (const auto& c : p.connectors) connectors.push_back(connector_to_json(c));
    return json{{"packet_id", p.packet_id},
                {"bundle", json{{"themes", p.bundle.themes},
                                {"roles", p.bundle.roles},
                                {"connector_ids", p.bundle.connector_ids}}},
                {"cards", cards},
                {"connectors", connectors}};
}

Packet packet_from_json(const json& j) {
    Packet p;
    p.packet_id = j.at("packet_id").get<std::string>();
    p.bundle.themes = j.at("bundle").at("themes").get<std::vector<int>>();
    p.bundle.roles = j.at("bundle").at("roles").get<std::vector<std::string>>();
    p.bundle.connector_ids = j.at("bundle").at("connector_ids").get<std::vector<std::string>>();
    for (const auto& jc : j.at("cards")) p.cards.push_back(theme_engine::card_from_json(jc));
    for (const auto& jc : j.at("connectors")) p.connectors.push_back(connector_from_json(jc));
    return p;
}

} // namespace iab::packet_forge
