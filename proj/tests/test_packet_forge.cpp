#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "iab/packet_forge.hpp"

using namespace iab;
using namespace iab::packet_forge;

namespace {

story_graph::StoryGraph graph_from(
    const std::vector<std::tuple<std::string, std::string, std::string, int>>& triples) {
    std::vector<story_graph::Assertion> assertions;
    int unit = 0;
    for (const auto& [s, r, o, copies] : triples)
        for (int i = 0; i < copies; ++i)
            assertions.push_back({s, r, o, {"u:" + std::to_string(unit++)}});
    return story_graph::build_graph(assertions, "qp");
}

theme_engine::Partition partition_of(const story_graph::StoryGraph& g,
                                     const std::map<std::string, int>& membership) {
    theme_engine::Partition p;
    for (const auto& n : g.nodes) {
        p.membership[n] = membership.at(n);
        p.communities[membership.at(n)].push_back(n);
    }
    for (auto& [cid, members] : p.communities) std::sort(members.begin(), members.end());
    return p;
}

Connector mk_conn(const std::string& id, long weight, long mass, int src = 0, int tgt = 1) {
    Connector c;
    c.connector_id = id;
    c.subject = "s of " + id;
    c.relation = "links";
    c.object = "o of " + id;
    c.source_community = src;
    c.target_community = tgt;
    c.weight = weight;
    c.evidence_mass = mass;
    for (long i = 0; i < mass; ++i) c.evidence.push_back(id + ":" + std::to_string(i));
    return c;
}

theme_engine::RoleAssignment roles_of(const std::map<int, theme_engine::Role>& role) {
    theme_engine::RoleAssignment out;
    out.role = role;
    return out;
}

std::map<int, theme_engine::InfluenceBreakdown> influence_of(
    const std::map<int, double>& values) {
    std::map<int, theme_engine::InfluenceBreakdown> out;
    for (const auto& [cid, v] : values) {
        theme_engine::InfluenceBreakdown b;
        b.influence = v;
        out[cid] = b;
    }
    return out;
}

theme_engine::CommunityCard mk_card(int cid, const std::vector<int>& evidence_sizes) {
    theme_engine::CommunityCard card;
    card.community_id = cid;
    card.role = "Core";
    card.summary = "Theme " + std::to_string(cid) + " summary.";
    for (size_t i = 0; i < evidence_sizes.size(); ++i) {
        theme_engine::Finding f;
        f.finding_id = "f" + std::to_string(cid) + "_" + std::to_string(i);
        f.statement = "Finding " + std::to_string(i) + " of theme " + std::to_string(cid) + ".";
        for (int e = 0; e < evidence_sizes[i]; ++e)
            f.evidence.push_back("u:" + std::to_string(cid) + ":" + std::to_string(e));
        card.findings.push_back(std::move(f));
    }
    return card;
}

} // namespace

TEST_CASE("connectors are exactly the cross-community story edges") {
    auto g = graph_from({{"a1", "sued", "b1", 2},
                         {"a1", "works with", "a2", 3},
                         {"b1", "answered", "a1", 1}});
    auto p = partition_of(g, {{"a1", 0}, {"a2", 0}, {"b1", 1}});

    auto connectors = find_connectors(g, p);
    REQUIRE(connectors.size() == 2);
    const Connector& sued = connectors[0];
    CHECK(sued.subject == "a1");
    CHECK(sued.relation == "sued");
    CHECK(sued.object == "b1");
    CHECK(sued.source_community == 0);
    CHECK(sued.target_community == 1);
    CHECK(sued.weight == 2);
    CHECK(sued.evidence_mass == 2);
    CHECK(sued.evidence.size() == 2);
    CHECK(std::is_sorted(sued.evidence.begin(), sued.evidence.end()));

    story_graph::Edge e;
    e.subject = "a1";
    e.relation = "sued";
    e.object = "b1";
    CHECK(sued.connector_id == "c" + story_graph::edge_id(e).substr(1));

    auto lumped = partition_of(g, {{"a1", 0}, {"a2", 0}, {"b1", 0}});
    CHECK(find_connectors(g, lumped).empty());
}

TEST_CASE("connector discovery matches a membership-scan oracle") {
    std::mt19937 rng(553);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::tuple<std::string, std::string, std::string, int>> triples;
        for (int i = 0; i < 40; ++i) {
            int u = static_cast<int>(rng() % 9), v = static_cast<int>(rng() % 9);
            if (u == v) continue;
            triples.push_back({"n" + std::to_string(u), "rel" + std::to_string(rng() % 4),
                               "n" + std::to_string(v), 1});
        }
        if (triples.empty()) continue;
        auto g = graph_from(triples);
        std::map<std::string, int> member;
        for (const auto& n : g.nodes) member[n] = n[1] % 3;
        auto p = partition_of(g, member);

        auto got = find_connectors(g, p);
        std::set<std::string> got_ids;
        for (const auto& c : got) got_ids.insert(c.connector_id);

        std::set<std::string> want_ids;
        size_t want_count = 0;
        for (const auto& e : g.edges) {
            if (p.membership.at(e.subject) == p.membership.at(e.object)) continue;
            ++want_count;
            want_ids.insert("c" + story_graph::edge_id(e).substr(1));
        }
        CHECK(got.size() == want_count);
        CHECK(got_ids == want_ids);
    }
}

TEST_CASE("connector selection ranks by weight, evidence mass, then id") {
    std::vector<Connector> pool = {mk_conn("c3", 2, 5), mk_conn("c1", 4, 1), mk_conn("c4", 2, 5),
                                   mk_conn("c2", 2, 9), mk_conn("c5", 1, 9)};

    auto top = select_top_connectors(pool, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].connector_id == "c1"); // heaviest wins
    CHECK(top[1].connector_id == "c2"); // more evidence breaks the weight tie
    CHECK(top[2].connector_id == "c3"); // id breaks the full tie

    auto all = select_top_connectors(pool, 99);
    REQUIRE(all.size() == pool.size());
    CHECK(all[3].connector_id == "c4");
    CHECK(all[4].connector_id == "c5");

    CHECK_THROWS_AS((void)select_top_connectors(pool, 0), PipelineError);

    std::mt19937 rng(19);
    std::vector<Connector> random_pool;
    for (int i = 0; i < 20; ++i)
        random_pool.push_back(mk_conn("c" + std::to_string(i), 1 + rng() % 4, 1 + rng() % 4));
    auto sorted = random_pool;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Connector& a, const Connector& b) {
        return std::make_tuple(-a.weight, -a.evidence_mass, a.connector_id) <
               std::make_tuple(-b.weight, -b.evidence_mass, b.connector_id);
    });
    sorted.resize(7);
    auto picked = select_top_connectors(random_pool, 7);
    REQUIRE(picked.size() == 7);
    for (size_t i = 0; i < picked.size(); ++i)
        CHECK(picked[i].connector_id == sorted[i].connector_id);
}

TEST_CASE("bundles pair cores with linked bridges and extend to triples") {
    auto roles = roles_of({{0, theme_engine::Role::Core},
                           {1, theme_engine::Role::Bridge},
                           {2, theme_engine::Role::Core},
                           {3, theme_engine::Role::Satellite}});
    auto influence = influence_of({{0, 3.0}, {1, 1.0}, {2, 2.0}, {3, 0.0}});

    std::vector<Connector> selected = {mk_conn("c01b", 3, 1, 0, 1), mk_conn("c01a", 2, 1, 1, 0),
                                       mk_conn("c12", 2, 1, 1, 2), mk_conn("c13", 5, 1, 1, 3),
                                       mk_conn("c02", 4, 1, 0, 2)};

    auto bundles = build_bundles(roles, influence, selected, 8);
    REQUIRE(bundles.size() == 3);

    CHECK(bundles[0].themes == std::vector<int>{0, 1});
    CHECK(bundles[0].roles == std::vector<std::string>{"Core", "Bridge"});
    CHECK(bundles[0].connector_ids == std::vector<std::string>{"c01a", "c01b"});

    CHECK(bundles[1].themes == std::vector<int>{0, 1, 2});
    CHECK(bundles[1].roles == std::vector<std::string>{"Core", "Bridge", "Core"});
    CHECK(bundles[1].connector_ids == std::vector<std::string>{"c01a", "c01b", "c12"});

    // the reverse triple {2,1,0} duplicates the theme set and is dropped
    CHECK(bundles[2].themes == std::vector<int>{2, 1});
    CHECK(bundles[2].connector_ids == std::vector<std::string>{"c12"});

    SUBCASE("truncation and the empty cases") {
        CHECK(build_bundles(roles, influence, selected, 2).size() == 2);
        CHECK(build_bundles(roles, influence, selected, 0).empty());
        CHECK(build_bundles(roles, influence, {mk_conn("c02", 4, 1, 0, 2)}, 8).empty());
        CHECK(build_bundles(roles_of({{0, theme_engine::Role::Core}}), influence, selected, 8)
                  .empty());
    }
}

TEST_CASE("packets carry cards and connectors under a token budget") {
    Bundle bundle;
    bundle.themes = {0, 1};
    bundle.roles = {"Core", "Bridge"};
    bundle.connector_ids = {"c01"};

    std::map<int, theme_engine::CommunityCard> cards;
    cards[0] = mk_card(0, {3, 2, 1});
    cards[1] = mk_card(1, {4, 2});
    std::vector<Connector> selected = {mk_conn("c01", 2, 2, 0, 1), mk_conn("c99", 1, 1, 2, 3)};

    SUBCASE("a generous budget keeps everything") {
        Packet p = assemble_packet(bundle, cards, selected, 100000);
        CHECK(p.packet_id == "p" + hash_hex(fnv1a64("0,1,")));
        REQUIRE(p.cards.size() == 2);
        CHECK(p.cards[0].community_id == 0);
        CHECK(p.cards[0].findings.size() == 3);
        CHECK(p.cards[1].findings.size() == 2);
        REQUIRE(p.connectors.size() == 1);
        CHECK(p.connectors[0].connector_id == "c01");
        CHECK(estimate_tokens(p) ==
              static_cast<long>(dump_line(packet_to_json(p)).size()) / 4);
    }

    SUBCASE("over budget, the weakest last finding goes first") {
        Packet full = assemble_packet(bundle, cards, selected, 100000);
        Packet expect = full;
        expect.cards[0].findings.pop_back(); // card 0 ends in the 1-unit finding
        long budget = estimate_tokens(expect);
        REQUIRE(budget < estimate_tokens(full));

        Packet trimmed = assemble_packet(bundle, cards, selected, budget);
        CHECK(packet_to_json(trimmed) == packet_to_json(expect));
        CHECK(trimmed.cards[0].findings.size() == 2);
        CHECK(trimmed.cards[1].findings.size() == 2);
    }

    SUBCASE("cards never drop below one finding") {
        CHECK_THROWS_WITH_AS((void)assemble_packet(bundle, cards, selected, 10),
                             doctest::Contains("cannot fit the token budget"), PipelineError);
    }

    SUBCASE("a missing card is an error") {
        std::map<int, theme_engine::CommunityCard> partial;
        partial[0] = cards[0];
        CHECK_THROWS_WITH_AS((void)assemble_packet(bundle, partial, selected, 100000),
                             doctest::Contains("has no card"), PipelineError);
    }

    SUBCASE("bundle connectors must come from the selected set") {
        Bundle bad = bundle;
        bad.connector_ids = {"c01", "c-unknown"};
        CHECK_THROWS_WITH_AS((void)assemble_packet(bad, cards, selected, 100000),
                             doctest::Contains("outside the selected set"), PipelineError);
    }
}

TEST_CASE("connectors and packets round trip through json") {
    Connector c = mk_conn("c7", 3, 2, 1, 4);
    Connector c2 = connector_from_json(connector_to_json(c));
    CHECK(c2.connector_id == c.connector_id);
    CHECK(c2.subject == c.subject);
    CHECK(c2.relation == c.relation);
    CHECK(c2.object == c.object);
    CHECK(c2.source_community == 1);
    CHECK(c2.target_community == 4);
    CHECK(c2.weight == 3);
    CHECK(c2.evidence_mass == 2);
    CHECK(c2.evidence == c.evidence);

    Bundle bundle;
    bundle.themes = {0, 1};
    bundle.roles = {"Core", "Bridge"};
    bundle.connector_ids = {"c7"};
    std::map<int, theme_engine::CommunityCard> cards;
    cards[0] = mk_card(0, {2, 1});
    cards[1] = mk_card(1, {1});
    Packet p = assemble_packet(bundle, cards, {c}, 100000);

    Packet back = packet_from_json(packet_to_json(p));
    CHECK(back.packet_id == p.packet_id);
    CHECK(back.bundle.themes == p.bundle.themes);
    CHECK(back.bundle.roles == p.bundle.roles);
    CHECK(back.bundle.connector_ids == p.bundle.connector_ids);
    REQUIRE(back.cards.size() == 2);
    CHECK(back.cards[0].findings.size() == 2);
    REQUIRE(back.connectors.size() == 1);
    CHECK(back.connectors[0].evidence == c.evidence);
    CHECK(packet_to_json(back) == packet_to_json(p));
}
