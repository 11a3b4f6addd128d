#include "iab/theme_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "iab/graph_metrics.hpp"

namespace iab::theme_engine {

std::string role_name(Role role) {
    switch (role) {
        case Role::Core: return "Core";
        case Role::Bridge: return "Bridge";
        case Role::Satellite: return "Satellite";
        case Role::Peripheral: return "Peripheral";
    }
    throw PipelineError("unknown role");
}

Role role_from_name(const std::string& name) {
    if (name == "Core") return Role::Core;
    if (name == "Bridge") return Role::Bridge;
    if (name == "Satellite") return Role::Satellite;
    if (name == "Peripheral") return Role::Peripheral;
    throw PipelineError("unknown role name: " + name);
}

Partition detect_communities(const story_graph::StoryGraph& g, double resolution,
                             std::uint64_t rng_seed) {
    if (g.nodes.empty()) throw PipelineError("cannot partition an empty story graph");

    std::map<std::string, int> index;
    for (size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i]] = static_cast<int>(i);

    std::vector<std::tuple<int, int, double>> edges;
    edges.reserve(g.edges.size());
    for (const auto& e : g.edges)
        edges.emplace_back(index.at(e.subject), index.at(e.object),
                           static_cast<double>(e.weight));

    std::vector<int> membership = graph_metrics::leiden_communities(
        static_cast<int>(g.nodes.size()), edges, resolution, rng_seed);

    Partition p;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        p.membership[g.nodes[i]] = membership[i];
        p.communities[membership[i]].push_back(g.nodes[i]);
    }
    for (auto& [cid, members] : p.communities) std::sort(members.begin(), members.end());
    return p;
}

MetaGraph build_meta_graph(const story_graph::StoryGraph& g, const Partition& p) {
    for (const auto& n : g.nodes)
        if (!p.membership.count(n))
            throw PipelineError("partition does not cover node: " + n);

    std::map<std::pair<int, int>, MetaEdge> agg;
    for (const auto& e : g.edges) {
        int cs = p.membership.at(e.subject);
        int co = p.membership.at(e.object);
        if (cs == co) continue;
        MetaEdge& me = agg[{cs, co}];
        me.source = cs;
        me.target = co;
        me.weight += static_cast<double>(e.weight);
        me.edge_ids.push_back(story_graph::edge_id(e));
    }

    MetaGraph meta;
    meta.community_count = static_cast<int>(p.communities.size());
    for (auto& [key, me] : agg) {
        std::sort(me.edge_ids.begin(), me.edge_ids.end());
        meta.edges.push_back(std::move(me));
    }
    return meta;
}

std::vector<double> standardize(const std::vector<double>& raw) {
    const size_t n = raw.size();
    std::vector<double> z(n, 0.0);
    if (n == 0) return z;
    auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    if (*mn == *mx) return z; // no spread

    double mean = 0.0;
    for (double x : raw) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : raw) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    double sd = std::sqrt(var);
    if (sd == 0.0) return z;
    for (size_t i = 0; i < n; ++i) z[i] = (raw[i] - mean) / sd;
    return z;
}

std::map<int, InfluenceBreakdown> compute_influence(const MetaGraph& meta, const Partition& p,
                                                    const story_graph::StoryGraph& g) {
    const int C = static_cast<int>(p.communities.size());
    if (C == 0) throw PipelineError("influence needs at least one community");

    graph_metrics::WeightedDigraph h;
    h.n = C;
    for (const auto& e : meta.edges) h.edges.emplace_back(e.source, e.target, e.weight);
    std::vector<double> pr = graph_metrics::pagerank(h);
    std::vector<double> bc = graph_metrics::betweenness(h);

    // unique evidence units over every story edge incident to the community
    std::vector<std::set<std::string>> evidence(C);
    for (const auto& e : g.edges) {
        int cs = p.membership.at(e.subject);
        int co = p.membership.at(e.object);
        evidence[cs].insert(e.evidence.begin(), e.evidence.end());
        if (co != cs) evidence[co].insert(e.evidence.begin(), e.evidence.end());
    }

    std::vector<double> size_raw(C), ev_raw(C);
    for (const auto& [cid, members] : p.communities) {
        size_raw[cid] = std::log1p(static_cast<double>(members.size()));
        ev_raw[cid] = static_cast<double>(evidence[cid].size());
    }

    std::vector<double> z_size = standardize(size_raw);
    std::vector<double> z_pr = standardize(pr);
    std::vector<double> z_bc = standardize(bc);
    std::vector<double> z_ev = standardize(ev_raw);

    std::map<int, InfluenceBreakdown> out;
    for (int c = 0; c < C; ++c) {
        InfluenceBreakdown b;
        b.size_term = size_raw[c];
        b.pagerank_term = pr[c];
        b.betweenness_term = bc[c];
        b.evidence_term = ev_raw[c];
        b.z_size = z_size[c];
        b.z_pagerank = z_pr[c];
        b.z_betweenness = z_bc[c];
        b.z_evidence = z_ev[c];
        b.influence = (b.z_size + b.z_pagerank + b.z_betweenness + b.z_evidence) / 4.0;
        out[c] = b;
    }
    return out;
}

std::pair<int, int> core_bridge_counts(int n_communities) {
    int n = n_communities;
    int k_core = std::min(n, std::max(5, (3 * n + 9) / 10));
    int k_bridge = std::min(n, std::max(3, (n + 4) / 5));
    return {k_core, k_bridge};
}

RoleAssignment assign_roles(const MetaGraph& meta,
                            const std::map<int, InfluenceBreakdown>& influence) {
    RoleAssignment out;
    const int C = static_cast<int>(influence.size());
    if (C == 0) return out;
    auto [k_core, k_bridge] = core_bridge_counts(C);
    out.k_core = k_core;
    out.k_bridge = k_bridge;

    std::vector<int> by_influence;
    for (const auto& [cid, b] : influence) by_influence.push_back(cid);
    std::stable_sort(by_influence.begin(), by_influence.end(), [&](int a, int b) {
        double ia = influence.at(a).influence, ib = influence.at(b).influence;
        if (ia != ib) return ia > ib;
        return a < b;
    });
    std::set<int> core(by_influence.begin(), by_influence.begin() + k_core);

    std::vector<int> rest;
    for (int cid : by_influence)
        if (!core.count(cid)) rest.push_back(cid);
    std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
        double ba = influence.at(a).betweenness_term, bb = influence.at(b).betweenness_term;
        if (ba != bb) return ba > bb;
        return a < b;
    });
    std::set<int> bridge(rest.begin(),
                         rest.begin() + std::min<size_t>(rest.size(), (size_t)k_bridge));

    std::vector<double> weights;
    for (const auto& e : meta.edges) weights.push_back(e.weight);
    if (weights.empty()) {
        out.tau_q = std::numeric_limits<double>::infinity();
    } else {
        std::sort(weights.begin(), weights.end());
        size_t m = weights.size();
        out.tau_q = m % 2 ? weights[m / 2] : (weights[m / 2 - 1] + weights[m / 2]) / 2.0;
    }

    std::map<std::pair<int, int>, double> w;
    for (const auto& e : meta.edges) w[{e.source, e.target}] = e.weight;
    auto pair_max = [&](int a, int b) {
        double ab = 0.0, ba = 0.0;
        if (auto it = w.find({a, b}); it != w.end()) ab = it->second;
        if (auto it = w.find({b, a}); it != w.end()) ba = it->second;
        return std::max(ab, ba);
    };

    for (const auto& [cid, b] : influence) {
        (void)b;
        if (core.count(cid)) {
            out.role[cid] = Role::Core;
        } else if (bridge.count(cid)) {
            out.role[cid] = Role::Bridge;
        } else {
            bool satellite = false;
            for (int hub : core)
                if (pair_max(cid, hub) >= out.tau_q) { satellite = true; break; }
            if (!satellite)
                for (int hub : bridge)
                    if (pair_max(cid, hub) >= out.tau_q) { satellite = true; break; }
            out.role[cid] = satellite ? Role::Satellite : Role::Peripheral;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Community cards

namespace {

std::string truncate_words(const std::string& text, size_t max_words) {
    auto words = split(normalize_ws(text), ' ');
    if (words.size() <= max_words) return normalize_ws(text);
    words.resize(max_words);
    return join(words, " ");
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::optional<json> parse_card_payload(const std::string& text,
                                       const std::set<std::string>& expected_ids,
                                       std::string* error) {
    json j;
    try {
        j = json::parse(gateway::strip_fence(text));
    } catch (const json::exception& e) {
        if (error) *error = std::string("invalid JSON: ") + e.what();
        return std::nullopt;
    }
    if (!j.is_object() || !j.contains("summary") || !j.contains("findings") ||
        !j["summary"].is_string() || !j["findings"].is_array()) {
        if (error) *error = "expected object with summary string and findings array";
        return std::nullopt;
    }
    std::set<std::string> seen;
    for (const auto& f : j["findings"]) {
        if (!f.is_object() || !f.contains("finding_id") || !f.contains("statement") ||
            !f["finding_id"].is_string() || !f["statement"].is_string() ||
            trim(f["statement"].get<std::string>()).empty()) {
            if (error) *error = "each finding needs finding_id and a non-empty statement";
            return std::nullopt;
        }
        seen.insert(f["finding_id"].get<std::string>());
    }
    if (seen != expected_ids) {
        if (error) *error = "finding ids must match the draft exactly";
        return std::nullopt;
    }
    return j;
}

} // namespace

CommunityCard build_community_card(int community_id, const Partition& p,
                                   const story_graph::StoryGraph& g, gateway::Gateway& gw,
                                   const std::string& model_id, int max_findings,
                                   bool* failed) {
    if (failed) *failed = false;
    auto mit = p.communities.find(community_id);
    if (mit == p.communities.end() || mit->second.empty())
        throw PipelineError("community " + std::to_string(community_id) + " is empty");
    const auto& members = mit->second;
    std::set<std::string> member_set(members.begin(), members.end());

    struct Candidate {
        const story_graph::Edge* edge;
        std::string id;
    };
    std::vector<Candidate> candidates;
    for (const auto& e : g.edges)
        if (member_set.count(e.subject) && member_set.count(e.object))
            candidates.push_back({&e, story_graph::edge_id(e)});
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a,
                                                              const Candidate& b) {
        if (a.edge->evidence.size() != b.edge->evidence.size())
            return a.edge->evidence.size() > b.edge->evidence.size();
        if (a.edge->weight != b.edge->weight) return a.edge->weight > b.edge->weight;
        return a.id < b.id;
    });
    if (static_cast<int>(candidates.size()) > max_findings) candidates.resize(max_findings);

    CommunityCard card;
    card.community_id = community_id;
    std::set<std::string> ids;
    for (const auto& c : candidates) {
        Finding f;
        f.finding_id = "f" + c.id.substr(1);
        f.statement =
            capitalize(c.edge->subject + " " + c.edge->relation + " " + c.edge->object + ".");
        f.evidence.assign(c.edge->evidence.begin(), c.edge->evidence.end());
        ids.insert(f.finding_id);
        card.findings.push_back(std::move(f));
    }

    std::string entity_list = join(std::vector<std::string>(
                                       members.begin(),
                                       members.begin() + std::min<size_t>(members.size(), 8)),
                                   ", ");
    card.summary = truncate_words(
        "Theme covering " + entity_list +
            (card.findings.empty() ? "" : ". Key claim: " + card.findings[0].statement),
        120);

    if (card.findings.empty()) return card; // nothing to polish

    json draft = json::object();
    draft["entities"] = members;
    draft["draft_summary"] = card.summary;
    draft["findings"] = json::array();
    for (const auto& f : card.findings)
        draft["findings"].push_back(json{{"finding_id", f.finding_id}, {"statement", f.statement}});

    gateway::ChatRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = 2048;
    req.messages = {
        {"system",
         "You polish theme summaries and findings for readability. You never invent facts "
         "and never change finding ids. Respond with JSON only."},
        {"user",
         "Rewrite the draft summary (at most 120 words) and each finding statement for "
         "fluency, keeping every fact and every finding_id exactly as given. Return ONLY a "
         "JSON object {\"summary\": string, \"findings\": [{\"finding_id\": string, "
         "\"statement\": string}]} covering exactly the same finding ids.\n\nDraft:\n" +
             dump_pretty(draft)}};

    for (int attempt = 0; attempt < 2; ++attempt) {
        gateway::ChatResponse resp = gw.complete(req);
        std::string err;
        auto parsed = parse_card_payload(resp.text, ids, &err);
        if (parsed) {
            card.summary = truncate_words((*parsed)["summary"].get<std::string>(), 120);
            std::map<std::string, std::string> polished;
            for (const auto& f : (*parsed)["findings"])
                polished[f["finding_id"].get<std::string>()] =
                    normalize_ws(f["statement"].get<std::string>());
            for (auto& f : card.findings) f.statement = polished.at(f.finding_id);
            return card;
        }
        req.messages.push_back({"user", "Your previous reply was rejected: " + err +
                                            ". Return ONLY valid JSON matching the required "
                                            "schema, with no extra text."});
    }
    if (failed) *failed = true;
    return card;
}

// ---------------------------------------------------------------------------
// Serialization

json card_to_json(const CommunityCard& card) {
    json findings = json::array();
    for (const auto& f : card.findings)
        findings.push_back(json{{"finding_id", f.finding_id},
                                {"statement", f.statement},
                                {"evidence", f.evidence}});
    return json{{"community_id", card.community_id},
                {"role", card.role},
                {"influence", card.influence},
                {"summary", card.summary},
                {"findings", findings}};
}

CommunityCard card_from_json(const json& j) {
    CommunityCard card;
    card.community_id = j.at("community_id").get<int>();
    card.role = j.at("role").get<std::string>();
    card.influence = j.at("influence").get<double>();
    card.summary = j.at("summary").get<std::string>();
    for (const auto& jf : j.at("findings")) {
        Finding f;
        f.finding_id = jf.at("finding_id").get<std::string>();
        f.statement = jf.at("statement").get<std::string>();
        f.evidence = jf.at("evidence").get<std::vector<std::string>>();
        card.findings.push_back(std::move(f));
    }
    return card;
}

json communities_artifact_json(const std::string& query_id, const Partition& p,
                               const std::map<int, InfluenceBreakdown>& influence,
                               const RoleAssignment& roles) {
    json membership = json::object();
    for (const auto& [node, cid] : p.membership) membership[node] = cid;

    json communities = json::object();
    for (const auto& [cid, members] : p.communities)
        communities[std::to_string(cid)] = members;

    json infl = json::object();
    for (const auto& [cid, b] : influence) {
        infl[std::to_string(cid)] = json{
            {"size_term", b.size_term},         {"pagerank_term", b.pagerank_term},
            {"betweenness_term", b.betweenness_term}, {"evidence_term", b.evidence_term},
            {"z_size", b.z_size},               {"z_pagerank", b.z_pagerank},
            {"z_betweenness", b.z_betweenness}, {"z_evidence", b.z_evidence},
            {"influence", b.influence}};
    }

    json role = json::object();
    for (const auto& [cid, r] : roles.role) role[std::to_string(cid)] = role_name(r);

    json out{{"query_id", query_id},
             {"membership", membership},
             {"communities", communities},
             {"influence", infl},
             {"roles", role},
             {"k_core", roles.k_core},
             {"k_bridge", roles.k_bridge}};
    if (std::isinf(roles.tau_q))
        out["tau_q"] = nullptr;
    else
        out["tau_q"] = roles.tau_q;
    return out;
}

} // namespace iab::theme_engine
