#include "iab/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <set>

#include "iab/corpus.hpp"
#include "iab/packet_forge.hpp"
#include "iab/qa_factory.hpp"
#include "iab/story_graph.hpp"
#include "iab/theme_engine.hpp"

namespace iab::pipeline {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ConfigError("unknown " + where + " key: " + key);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

fs::path seeds_path(const PipelineConfig& c) {
    return c.artifact_root / "seeds" / (c.window.to_string() + ".json");
}
fs::path corpus_dir(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "corpus" / qid;
}
fs::path graph_path(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "graph" / (qid + ".json");
}
fs::path communities_path(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "communities" / (qid + ".json");
}
fs::path cards_path(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "cards" / (qid + ".json");
}
fs::path connectors_path(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "connectors" / (qid + ".json");
}
fs::path instances_path(const PipelineConfig& c) {
    return c.artifact_root / "instances" / (c.window.to_string() + ".jsonl");
}
fs::path packets_path(const PipelineConfig& c, const std::string& qid) {
    return c.artifact_root / "packets" / (qid + ".json");
}

gateway::ChatTransport chat_transport(const PipelineConfig& c) {
    if (c.mode == gateway::Mode::replay) return nullptr;
    return gateway::make_http_chat_transport(c.endpoints.chat_base);
}
gateway::SearchTransport search_transport(const PipelineConfig& c) {
    if (c.mode == gateway::Mode::replay) return nullptr;
    return gateway::make_http_search_transport(c.endpoints.search_base);
}
corpus::FetchTransport fetch_transport(const PipelineConfig& c) {
    if (c.mode == gateway::Mode::replay) return nullptr;
    return corpus::make_http_fetch_transport();
}

std::vector<seed_miner::ScoredSeed> load_seeds_artifact(const PipelineConfig& c) {
    fs::path path = seeds_path(c);
    if (!fs::exists(path))
        throw PipelineError("seeds artifact missing, run the seeds stage first: " + path.string());
    std::vector<seed_miner::ScoredSeed> out;
    json doc = load_json_file(path);
    for (const auto& s : doc.at("seeds")) out.push_back(seed_miner::scored_seed_from_json(s));
    return out;
}

struct CommunitiesArtifact {
    theme_engine::Partition partition;
    std::map<int, theme_engine::InfluenceBreakdown> influence;
    theme_engine::RoleAssignment roles;
};

CommunitiesArtifact load_communities_artifact(const json& doc) {
    CommunitiesArtifact a;
    for (const auto& [node, cid] : doc.at("membership").items())
        a.partition.membership[node] = cid.get<int>();
    for (const auto& [cid, members] : doc.at("communities").items())
        a.partition.communities[std::stoi(cid)] = members.get<std::vector<std::string>>();
    for (const auto& [cid, b] : doc.at("influence").items()) {
        theme_engine::InfluenceBreakdown ib;
        ib.size_term = b.at("size_term").get<double>();
        ib.pagerank_term = b.at("pagerank_term").get<double>();
        ib.betweenness_term = b.at("betweenness_term").get<double>();
        ib.evidence_term = b.at("evidence_term").get<double>();
        ib.z_size = b.at("z_size").get<double>();
        ib.z_pagerank = b.at("z_pagerank").get<double>();
        ib.z_betweenness = b.at("z_betweenness").get<double>();
        ib.z_evidence = b.at("z_evidence").get<double>();
        ib.influence = b.at("influence").get<double>();
        a.influence[std::stoi(cid)] = ib;
    }
    for (const auto& [cid, name] : doc.at("roles").items())
        a.roles.role[std::stoi(cid)] = theme_engine::role_from_name(name.get<std::string>());
    a.roles.k_core = doc.at("k_core").get<int>();
    a.roles.k_bridge = doc.at("k_bridge").get<int>();
    a.roles.tau_q = doc.at("tau_q").is_null() ? std::numeric_limits<double>::infinity()
                                              : doc.at("tau_q").get<double>();
    return a;
}

bool checksums_match(const PipelineConfig& c, const StageRecord& rec) {
    for (const auto& [rel, sum] : rec.checksums) {
        fs::path file = c.artifact_root / rel;
        if (!fs::exists(file) || file_checksum(file) != sum) return false;
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig load_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> top_keys = {
        "window",       "seed_count",    "mode",          "artifact_root", "gkg_dir",
        "cassette_dir", "page_store_dir", "weights",      "search_results", "min_doc_chars",
        "chunk_target", "chunk_overlap", "resolution",    "rng_seed",      "max_findings",
        "top_connectors", "max_bundles", "token_budget",  "qa_per_packet", "models",
        "endpoints"};
    check_keys(doc, top_keys, "config");

    PipelineConfig c;
    try {
        if (!doc.contains("window")) throw ConfigError("config needs a window");
        std::string wtag = doc.at("window").get<std::string>();
        auto window = DayRange::parse(wtag);
        if (!window) throw ConfigError("bad window: " + wtag);
        c.window = *window;

        c.seed_count = get_or(doc, "seed_count", c.seed_count);
        if (doc.contains("mode"))
            c.mode = gateway::mode_from_string(doc.at("mode").get<std::string>());
        if (doc.contains("artifact_root"))
            c.artifact_root = doc.at("artifact_root").get<std::string>();
        if (doc.contains("gkg_dir")) c.gkg_dir = doc.at("gkg_dir").get<std::string>();
        if (doc.contains("cassette_dir"))
            c.cassette_dir = doc.at("cassette_dir").get<std::string>();
        if (doc.contains("page_store_dir"))
            c.page_store_dir = doc.at("page_store_dir").get<std::string>();

        if (doc.contains("weights")) {
            const json& w = doc.at("weights");
            check_keys(w, {"alpha", "beta", "gamma", "delta", "eta"}, "weights");
            c.weights.alpha = get_or(w, "alpha", c.weights.alpha);
            c.weights.beta = get_or(w, "beta", c.weights.beta);
            c.weights.gamma = get_or(w, "gamma", c.weights.gamma);
            c.weights.delta = get_or(w, "delta", c.weights.delta);
            c.weights.eta = get_or(w, "eta", c.weights.eta);
        }

        c.search_results = get_or(doc, "search_results", c.search_results);
        c.min_doc_chars = get_or(doc, "min_doc_chars", c.min_doc_chars);
        c.chunk_target = get_or(doc, "chunk_target", c.chunk_target);
        c.chunk_overlap = get_or(doc, "chunk_overlap", c.chunk_overlap);
        c.resolution = get_or(doc, "resolution", c.resolution);
        c.rng_seed = get_or(doc, "rng_seed", c.rng_seed);
        c.max_findings = get_or(doc, "max_findings", c.max_findings);
        c.top_connectors = get_or(doc, "top_connectors", c.top_connectors);
        c.max_bundles = get_or(doc, "max_bundles", c.max_bundles);
        c.token_budget = get_or(doc, "token_budget", c.token_budget);
        c.qa_per_packet = get_or(doc, "qa_per_packet", c.qa_per_packet);

        if (doc.contains("models")) {
            const json& m = doc.at("models");
            check_keys(m, {"extraction", "cards", "generator", "judges"}, "models");
            c.models.extraction = get_or(m, "extraction", c.models.extraction);
            c.models.cards = get_or(m, "cards", c.models.cards);
            c.models.generator = get_or(m, "generator", c.models.generator);
            if (m.contains("judges"))
                c.models.judges = m.at("judges").get<std::vector<std::string>>();
        }
        if (doc.contains("endpoints")) {
            const json& e = doc.at("endpoints");
            check_keys(e, {"chat_base", "search_base"}, "endpoints");
            c.endpoints.chat_base = get_or(e, "chat_base", c.endpoints.chat_base);
            c.endpoints.search_base = get_or(e, "search_base", c.endpoints.search_base);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    if (c.seed_count < 1) throw ConfigError("seed_count must be at least 1");
    if (c.search_results < 1) throw ConfigError("search_results must be at least 1");
    if (c.chunk_target == 0) throw ConfigError("chunk_target must be positive");
    if (c.chunk_overlap >= c.chunk_target)
        throw ConfigError("chunk_overlap must be smaller than chunk_target");
    if (!(c.resolution > 0.0)) throw ConfigError("resolution must be positive");
    if (c.max_findings < 1) throw ConfigError("max_findings must be at least 1");
    if (c.top_connectors < 1) throw ConfigError("top_connectors must be at least 1");
    if (c.max_bundles < 1) throw ConfigError("max_bundles must be at least 1");
    if (c.token_budget < 1) throw ConfigError("token_budget must be positive");
    if (c.qa_per_packet < 1) throw ConfigError("qa_per_packet must be at least 1");
    if (c.models.extraction.empty() || c.models.cards.empty() || c.models.generator.empty())
        throw ConfigError("model ids must be non-empty");
    std::set<std::string> panel(c.models.judges.begin(), c.models.judges.end());
    if (c.models.judges.size() != 3 || panel.size() != 3 || panel.count(""))
        throw ConfigError("judge panel must list exactly 3 distinct models");

    if (c.cassette_dir.empty()) c.cassette_dir = c.artifact_root / "cassettes";
    if (c.page_store_dir.empty()) c.page_store_dir = c.artifact_root / "pages";
    return c;
}

PipelineConfig load_config_file(const fs::path& path) {
    json doc;
    try {
        doc = load_json_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return load_config(doc);
}

json config_to_json(const PipelineConfig& c) {
    return json{{"window", c.window.to_string()},
                {"seed_count", c.seed_count},
                {"mode", gateway::mode_to_string(c.mode)},
                {"artifact_root", c.artifact_root.generic_string()},
                {"gkg_dir", c.gkg_dir.generic_string()},
                {"cassette_dir", c.cassette_dir.generic_string()},
                {"page_store_dir", c.page_store_dir.generic_string()},
                {"weights",
                 {{"alpha", c.weights.alpha},
                  {"beta", c.weights.beta},
                  {"gamma", c.weights.gamma},
                  {"delta", c.weights.delta},
                  {"eta", c.weights.eta}}},
                {"search_results", c.search_results},
                {"min_doc_chars", c.min_doc_chars},
                {"chunk_target", c.chunk_target},
                {"chunk_overlap", c.chunk_overlap},
                {"resolution", c.resolution},
                {"rng_seed", c.rng_seed},
                {"max_findings", c.max_findings},
                {"top_connectors", c.top_connectors},
                {"max_bundles", c.max_bundles},
                {"token_budget", c.token_budget},
                {"qa_per_packet", c.qa_per_packet},
                {"models",
                 {{"extraction", c.models.extraction},
                  {"cards", c.models.cards},
                  {"generator", c.models.generator},
                  {"judges", c.models.judges}}},
                {"endpoints",
                 {{"chat_base", c.endpoints.chat_base},
                  {"search_base", c.endpoints.search_base}}}};
}

std::string config_hash(const PipelineConfig& c) {
    json doc = config_to_json(c);
    doc.erase("artifact_root");
    doc.erase("gkg_dir");
    doc.erase("cassette_dir");
    doc.erase("page_store_dir");
    return stable_json_hash(doc);
}

// ---------------------------------------------------------------------------
// Run manifest

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"seeds",  "corpus",  "graph",
                                                   "themes", "packets", "qa"};
    return names;
}

json manifest_to_json(const RunManifest& m) {
    json stages = json::array();
    for (const auto& s : m.stages) {
        json sums = json::object();
        for (const auto& [path, sum] : s.checksums) sums[path] = sum;
        stages.push_back(json{{"name", s.name}, {"status", s.status}, {"checksums", sums}});
    }
    return json{{"run_id", m.run_id}, {"config_hash", m.config_hash}, {"stages", stages}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& s : j.at("stages")) {
        StageRecord rec;
        rec.name = s.at("name").get<std::string>();
        rec.status = s.at("status").get<std::string>();
        for (const auto& [path, sum] : s.at("checksums").items())
            rec.checksums[path] = sum.get<std::string>();
        m.stages.push_back(std::move(rec));
    }
    return m;
}

std::string file_checksum(const fs::path& path) { return hash_hex(fnv1a64(read_file(path))); }

// ---------------------------------------------------------------------------
// Stages

std::string query_id_for(const std::string& window_tag, const std::string& seed_text) {
    return "q" + hash_hex(fnv1a64(window_tag + "|" + seed_text));
}

std::vector<fs::path> stage_seeds(const PipelineConfig& c) {
    if (!fs::is_directory(c.gkg_dir))
        throw PipelineError("GKG directory missing: " + c.gkg_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(c.gkg_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = to_lower(entry.path().extension().string());
        if (ext == ".csv" || ext == ".zip") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw PipelineError("no GKG snapshots under " + c.gkg_dir.string());

    std::vector<seed_miner::GkgRecord> records;
    size_t skipped = 0;
    for (const auto& file : files) {
        seed_miner::ParseStats stats;
        auto part = seed_miner::parse_gkg_snapshot(read_file(file), &stats);
        skipped += stats.skipped;
        records.insert(records.end(), part.begin(), part.end());
    }
    std::cerr << "[seeds] " << records.size() << " rows from " << files.size() << " snapshots, "
              << skipped << " skipped\n";

    auto candidates = seed_miner::extract_candidates(records, c.window);
    std::vector<seed_miner::ScoredSeed> scored;
    scored.reserve(candidates.size());
    for (auto& cand : candidates) {
        seed_miner::ScoredSeed s;
        s.features = seed_miner::compute_features(cand, c.window);
        s.score = seed_miner::score_seed(s.features, c.weights);
        s.candidate = std::move(cand);
        scored.push_back(std::move(s));
    }
    auto selected = seed_miner::select_seeds(std::move(scored), c.seed_count);

    json seeds = json::array();
    for (const auto& s : selected) seeds.push_back(seed_miner::scored_seed_to_json(s));
    fs::path out = seeds_path(c);
    write_file(out, dump_pretty(json{{"window", c.window.to_string()}, {"seeds", seeds}}));
    std::cerr << "[seeds] kept " << selected.size() << " of " << candidates.size()
              << " candidates\n";
    return {out};
}

std::vector<fs::path> stage_corpus(const PipelineConfig& c) {
    auto seeds = load_seeds_artifact(c);
    gateway::Gateway gw(c.mode, c.cassette_dir / "search.json", nullptr, search_transport(c));
    corpus::PageStore store(c.mode, c.page_store_dir, fetch_transport(c));
    std::string wtag = c.window.to_string();
    std::vector<fs::path> written;
    for (const auto& seed : seeds) {
        std::string qid = query_id_for(wtag, seed.candidate.text);
        auto refs = corpus::search(gw, seed.candidate.text, c.search_results);
        std::string docs_lines, unit_lines;
        json skips = json::array();
        long docs = 0, units = 0;
        for (const auto& ref : refs) {
            auto outcome = corpus::fetch_and_extract(ref, store, c.min_doc_chars);
            if (!outcome.doc) {
                skips.push_back(json{{"url", ref.url}, {"reason", outcome.skip_reason}});
                continue;
            }
            docs_lines += dump_line(corpus::document_to_json(*outcome.doc)) + "\n";
            ++docs;
            for (const auto& unit : corpus::chunk(*outcome.doc, c.chunk_target, c.chunk_overlap)) {
                unit_lines += dump_line(corpus::unit_to_json(unit)) + "\n";
                ++units;
            }
        }
        fs::path dir = corpus_dir(c, qid);
        write_file(dir / "docs.jsonl", docs_lines);
        write_file(dir / "units.jsonl", unit_lines);
        write_file(dir / "skips.json", dump_pretty(json{{"query_id", qid}, {"skips", skips}}));
        written.push_back(dir / "docs.jsonl");
        written.push_back(dir / "units.jsonl");
        written.push_back(dir / "skips.json");
        std::cerr << "[corpus] " << qid << ": " << docs << " docs, " << units << " units, "
                  << skips.size() << " skipped\n";
    }
    return written;
}

std::vector<fs::path> stage_graph(const PipelineConfig& c) {
    auto seeds = load_seeds_artifact(c);
    gateway::Gateway gw(c.mode, c.cassette_dir / "extraction.json", chat_transport(c), nullptr);
    std::string wtag = c.window.to_string();
    std::vector<fs::path> written;
    for (const auto& seed : seeds) {
        std::string qid = query_id_for(wtag, seed.candidate.text);
        fs::path units_file = corpus_dir(c, qid) / "units.jsonl";
        if (!fs::exists(units_file))
            throw PipelineError("corpus artifact missing, run the corpus stage first: " +
                                units_file.string());
        std::vector<story_graph::Assertion> assertions;
        long rejected = 0;
        for (const auto& j : load_jsonl_file(units_file)) {
            bool failed = false;
            auto part =
                story_graph::extract_assertions(corpus::unit_from_json(j), gw,
                                                c.models.extraction, &failed);
            if (failed) ++rejected;
            assertions.insert(assertions.end(), part.begin(), part.end());
        }
        auto g = story_graph::build_graph(assertions, qid);
        fs::path out = graph_path(c, qid);
        write_file(out, dump_pretty(story_graph::graph_to_json(g)));
        written.push_back(out);
        std::cerr << "[graph] " << qid << ": " << g.nodes.size() << " nodes, " << g.edges.size()
                  << " edges, " << rejected << " units rejected\n";
    }
    return written;
}

std::vector<fs::path> stage_themes(const PipelineConfig& c) {
    auto seeds = load_seeds_artifact(c);
    gateway::Gateway gw(c.mode, c.cassette_dir / "cards.json", chat_transport(c), nullptr);
    std::string wtag = c.window.to_string();
    std::vector<fs::path> written;
    for (const auto& seed : seeds) {
        std::string qid = query_id_for(wtag, seed.candidate.text);
        fs::path gp = graph_path(c, qid);
        if (!fs::exists(gp))
            throw PipelineError("graph artifact missing, run the graph stage first: " +
                                gp.string());
        auto g = story_graph::graph_from_json(load_json_file(gp));
        if (g.nodes.empty()) {
            std::cerr << "[themes] " << qid << ": empty graph, skipped\n";
            continue;
        }
        auto partition = theme_engine::detect_communities(g, c.resolution, c.rng_seed);
        auto meta = theme_engine::build_meta_graph(g, partition);
        auto influence = theme_engine::compute_influence(meta, partition, g);
        auto roles = theme_engine::assign_roles(meta, influence);

        json artifact = theme_engine::communities_artifact_json(qid, partition, influence, roles);
        json meta_edges = json::array();
        for (const auto& e : meta.edges)
            meta_edges.push_back(json{{"source", e.source},
                                      {"target", e.target},
                                      {"weight", e.weight},
                                      {"edge_ids", e.edge_ids}});
        artifact["meta_edges"] = meta_edges;
        fs::path cp = communities_path(c, qid);
        write_file(cp, dump_pretty(artifact));
        written.push_back(cp);

        json cards = json::array();
        json excluded = json::array();
        for (const auto& [cid, members] : partition.communities) {
            (void)members;
            bool failed = false;
            auto card = theme_engine::build_community_card(cid, partition, g, gw, c.models.cards,
                                                           c.max_findings, &failed);
            if (failed) {
                excluded.push_back(cid);
                continue;
            }
            cards.push_back(theme_engine::card_to_json(card));
        }
        fs::path kp = cards_path(c, qid);
        write_file(kp,
                   dump_pretty(json{{"query_id", qid}, {"cards", cards}, {"excluded", excluded}}));
        written.push_back(kp);
        std::cerr << "[themes] " << qid << ": " << partition.communities.size()
                  << " communities, " << cards.size() << " cards\n";
    }
    return written;
}

std::vector<fs::path> stage_packets(const PipelineConfig& c) {
    auto seeds = load_seeds_artifact(c);
    std::string wtag = c.window.to_string();
    std::vector<fs::path> written;
    for (const auto& seed : seeds) {
        std::string qid = query_id_for(wtag, seed.candidate.text);
        fs::path cp = communities_path(c, qid);
        if (!fs::exists(cp)) {
            std::cerr << "[packets] " << qid << ": no communities, skipped\n";
            continue;
        }
        auto art = load_communities_artifact(load_json_file(cp));
        auto g = story_graph::graph_from_json(load_json_file(graph_path(c, qid)));
        std::map<int, theme_engine::CommunityCard> cards;
        json cards_doc = load_json_file(cards_path(c, qid));
        for (const auto& cj : cards_doc.at("cards")) {
            auto card = theme_engine::card_from_json(cj);
            cards[card.community_id] = std::move(card);
        }

        auto found = packet_forge::find_connectors(g, art.partition);
        auto selected = packet_forge::select_top_connectors(found, c.top_connectors);
        json found_json = json::array();
        for (const auto& con : found) found_json.push_back(packet_forge::connector_to_json(con));
        json selected_json = json::array();
        for (const auto& con : selected)
            selected_json.push_back(packet_forge::connector_to_json(con));
        fs::path xp = connectors_path(c, qid);
        write_file(xp, dump_pretty(json{{"query_id", qid},
                                        {"found", found_json},
                                        {"selected", selected_json}}));
        written.push_back(xp);

        auto bundles = packet_forge::build_bundles(art.roles, art.influence, selected,
                                                   c.max_bundles);
        json packets = json::array();
        for (const auto& bundle : bundles) {
            bool card_missing = false;
            for (int cid : bundle.themes)
                if (!cards.count(cid)) card_missing = true;
            if (card_missing) {
                std::cerr << "[packets] " << qid << ": bundle dropped, theme card excluded\n";
                continue;
            }
            try {
                auto packet = packet_forge::assemble_packet(bundle, cards, selected,
                                                            c.token_budget);
                packets.push_back(packet_forge::packet_to_json(packet));
            } catch (const PipelineError& e) {
                std::cerr << "[packets] " << qid << ": bundle dropped: " << e.what() << "\n";
            }
        }
        fs::path pp = packets_path(c, qid);
        write_file(pp, dump_pretty(json{{"query_id", qid}, {"packets", packets}}));
        written.push_back(pp);
        std::cerr << "[packets] " << qid << ": " << found.size() << " connectors found, "
                  << packets.size() << " packets\n";
    }
    return written;
}

std::vector<fs::path> stage_qa(const PipelineConfig& c) {
    auto seeds = load_seeds_artifact(c);
    gateway::Gateway gen_gw(c.mode, c.cassette_dir / "qa.json", chat_transport(c), nullptr);
    gateway::Gateway judge_gw(c.mode, c.cassette_dir / "judge.json", chat_transport(c), nullptr);
    std::string wtag = c.window.to_string();
    std::string lines;
    long accepted = 0, produced = 0;
    for (const auto& seed : seeds) {
        std::string qid = query_id_for(wtag, seed.candidate.text);
        fs::path pp = packets_path(c, qid);
        if (!fs::exists(pp)) {
            std::cerr << "[qa] " << qid << ": no packets, skipped\n";
            continue;
        }
        json packets_doc = load_json_file(pp);
        if (packets_doc.at("packets").empty()) {
            std::cerr << "[qa] " << qid << ": no packets, skipped\n";
            continue;
        }

        qa_factory::InstanceContext ctx;
        ctx.query_id = qid;
        ctx.query = seed.candidate.text;
        ctx.time_window = wtag;
        json sources = json::array();
        for (const auto& d : load_jsonl_file(corpus_dir(c, qid) / "docs.jsonl"))
            sources.push_back(json{{"url", d.at("url")},
                                   {"title", d.at("title")},
                                   {"rank", d.at("rank")},
                                   {"retrieved_at", d.at("retrieved_at")}});
        ctx.retrieved_sources = sources;
        auto g = story_graph::graph_from_json(load_json_file(graph_path(c, qid)));
        ctx.story_graph_stats = story_graph::graph_stats(g);
        ctx.communities = load_json_file(communities_path(c, qid));
        ctx.community_cards = load_json_file(cards_path(c, qid)).at("cards");
        ctx.connectors = load_json_file(connectors_path(c, qid)).at("selected");

        auto units = load_jsonl_file(corpus_dir(c, qid) / "units.jsonl");

        for (const auto& pj : packets_doc.at("packets")) {
            auto packet = packet_forge::packet_from_json(pj);
            // an instance ships exactly the units its packet cites
            std::set<std::string> cited;
            for (const auto& card : packet.cards)
                for (const auto& f : card.findings) cited.insert(f.evidence.begin(), f.evidence.end());
            for (const auto& con : packet.connectors)
                cited.insert(con.evidence.begin(), con.evidence.end());
            json text_units = json::array();
            for (const auto& u : units)
                if (cited.count(u.at("unit_id").get<std::string>())) text_units.push_back(u);
            ctx.text_units = text_units;

            std::vector<std::string> drops;
            auto candidates = qa_factory::generate_candidates(packet, gen_gw, c.models.generator,
                                                              c.qa_per_packet, &drops);
            for (const auto& why : drops)
                std::cerr << "[qa] " << qid << ": candidate dropped: " << why << "\n";
            for (const auto& cand : candidates) {
                ++produced;
                auto decisions = qa_factory::judge_candidate(cand, packet, judge_gw,
                                                             c.models.judges);
                auto verdict = qa_factory::aggregate_decisions(decisions);
                if (!verdict.accepted) continue;
                lines += dump_line(qa_factory::assemble_instance(cand, verdict, decisions, packet,
                                                                 ctx)) +
                         "\n";
                ++accepted;
            }
        }
    }
    fs::path out = instances_path(c);
    write_file(out, lines);
    std::cerr << "[qa] accepted " << accepted << " of " << produced << " candidates\n";
    return {out};
}

std::vector<fs::path> run_stage(const PipelineConfig& c, const std::string& stage) {
    if (stage == "seeds") return stage_seeds(c);
    if (stage == "corpus") return stage_corpus(c);
    if (stage == "graph") return stage_graph(c);
    if (stage == "themes") return stage_themes(c);
    if (stage == "packets") return stage_packets(c);
    if (stage == "qa") return stage_qa(c);
    throw ConfigError("unknown stage: " + stage);
}

RunManifest run_window(const PipelineConfig& c) {
    std::string hash = config_hash(c);
    RunManifest m;
    m.run_id = "r" + hash;
    m.config_hash = hash;
    fs::path mp = c.artifact_root / "runs" / (m.run_id + ".json");
    if (fs::exists(mp)) {
        auto previous = manifest_from_json(load_json_file(mp));
        if (previous.config_hash == hash) m = std::move(previous);
    }

    std::vector<StageRecord> stages;
    for (const auto& name : stage_names()) {
        auto it = std::find_if(m.stages.begin(), m.stages.end(),
                               [&](const StageRecord& s) { return s.name == name; });
        stages.push_back(it != m.stages.end() ? *it : StageRecord{name, "pending", {}});
    }
    m.stages = std::move(stages);

    auto save = [&] { write_file(mp, dump_pretty(manifest_to_json(m))); };
    save();

    bool upstream_ran = false;
    for (auto& rec : m.stages) {
        if (!upstream_ran && rec.status == "done" && checksums_match(c, rec)) {
            std::cerr << "[run] " << rec.name << ": up to date\n";
            continue;
        }
        upstream_ran = true;
        std::cerr << "[run] " << rec.name << "\n";
        try {
            auto files = run_stage(c, rec.name);
            rec.checksums.clear();
            for (const auto& file : files) {
                fs::path rel = file.lexically_relative(c.artifact_root);
                rec.checksums[rel.empty() ? file.generic_string() : rel.generic_string()] =
                    file_checksum(file);
            }
            rec.status = "done";
            save();
        } catch (...) {
            rec.status = "failed";
            rec.checksums.clear();
            save();
            throw;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Instance validation

std::string validate_instance_record(const json& record) {
    if (!record.is_object()) return "not a JSON object";
    const auto& fields = qa_factory::instance_fields();
    for (const auto& f : fields)
        if (!record.contains(f)) return "missing field " + f;
    for (const auto& [key, value] : record.items()) {
        if (std::find(fields.begin(), fields.end(), key) == fields.end())
            return "unexpected field " + key;
        if (value.is_null()) return "null field " + key;
    }

    try {
        for (const char* f : {"id", "query", "time_window", "question", "answer",
                              "intent_pattern"}) {
            if (!record.at(f).is_string() || record.at(f).get<std::string>().empty())
                return std::string(f) + " must be a non-empty string";
        }
        for (const char* f : {"retrieved_sources", "text_units", "community_cards", "connectors",
                              "supporting_findings", "supporting_connectors", "judge_decisions"}) {
            if (!record.at(f).is_array()) return std::string(f) + " must be an array";
        }
        for (const char* f : {"story_graph_stats", "communities", "packet"}) {
            if (!record.at(f).is_object()) return std::string(f) + " must be an object";
        }

        if (record.at("id").get<std::string>()[0] != 'i') return "id must start with 'i'";
        if (!DayRange::parse(record.at("time_window").get<std::string>()))
            return "time_window is not a day range";
        if (token_count(record.at("answer").get<std::string>()) > 12)
            return "answer longer than 12 tokens";
        const auto& intents = qa_factory::intent_patterns();
        if (std::find(intents.begin(), intents.end(),
                      record.at("intent_pattern").get<std::string>()) == intents.end())
            return "unknown intent_pattern";

        const json& stats = record.at("story_graph_stats");
        if (!stats.contains("nodes") || !stats.at("nodes").is_number_integer() ||
            !stats.contains("edges") || !stats.at("edges").is_number_integer())
            return "story_graph_stats needs integer nodes and edges";
        const json& communities = record.at("communities");
        if (!communities.contains("membership") || !communities.contains("roles"))
            return "communities needs membership and roles";

        const json& packet = record.at("packet");
        for (const char* f : {"packet_id", "bundle", "cards", "connectors"})
            if (!packet.contains(f)) return std::string("packet missing ") + f;
        const json& bundle = packet.at("bundle");
        if (!bundle.contains("themes") || !bundle.at("themes").is_array())
            return "packet bundle missing themes";
        std::set<int> themes;
        for (const auto& t : bundle.at("themes")) {
            if (!t.is_number_integer()) return "bundle theme is not an integer";
            themes.insert(t.get<int>());
        }
        if (themes.size() < 2) return "packet spans fewer than 2 themes";

        std::map<int, std::set<std::string>> findings;
        std::vector<std::string> evidence;
        for (const auto& card : packet.at("cards")) {
            int cid = card.at("community_id").get<int>();
            if (!themes.count(cid)) return "packet card outside bundle themes";
            for (const auto& f : card.at("findings")) {
                findings[cid].insert(f.at("finding_id").get<std::string>());
                for (const auto& e : f.at("evidence")) evidence.push_back(e.get<std::string>());
            }
        }
        std::set<std::string> connector_ids;
        for (const auto& con : packet.at("connectors")) {
            connector_ids.insert(con.at("connector_id").get<std::string>());
            if (!themes.count(con.at("source_community").get<int>()) ||
                !themes.count(con.at("target_community").get<int>()))
                return "packet connector endpoint outside bundle themes";
            for (const auto& e : con.at("evidence")) evidence.push_back(e.get<std::string>());
        }

        const json& supporting = record.at("supporting_findings");
        if (supporting.empty()) return "no supporting findings";
        std::set<int> covered;
        for (const auto& s : supporting) {
            int cid = s.at("community_id").get<int>();
            std::string fid = s.at("finding_id").get<std::string>();
            if (!findings.count(cid) || !findings.at(cid).count(fid))
                return "supporting finding " + fid + " does not resolve";
            covered.insert(cid);
        }
        if (covered.size() < 2) return "supporting findings cover fewer than 2 communities";

        const json& connectors = record.at("supporting_connectors");
        if (connectors.empty()) return "no supporting connectors";
        for (const auto& s : connectors)
            if (!connector_ids.count(s.get<std::string>()))
                return "supporting connector " + s.get<std::string>() + " does not resolve";

        std::set<std::string> unit_ids;
        for (const auto& u : record.at("text_units"))
            unit_ids.insert(u.at("unit_id").get<std::string>());
        for (const auto& id : evidence)
            if (!unit_ids.count(id)) return "evidence unit " + id + " not shipped";

        const json& decisions = record.at("judge_decisions");
        if (decisions.size() != 3) return "expected 3 judge decisions";
        for (const auto& d : decisions) {
            if (!d.is_object()) return "judge decision is not an object";
            if (!d.contains("judge_model_id") || !d.at("judge_model_id").is_string() ||
                d.at("judge_model_id").get<std::string>().empty())
                return "judge decision needs a judge_model_id";
            if (d.size() != 17) return "judge decision must carry exactly the 16 criterion keys";
            for (const auto& name : gateway::judge_criteria()) {
                if (!d.contains(name + "_flag") || !d.at(name + "_flag").is_boolean())
                    return "judge decision missing " + name + "_flag";
                if (!d.contains(name + "_reasoning") || !d.at(name + "_reasoning").is_string())
                    return "judge decision missing " + name + "_reasoning";
            }
        }
    } catch (const json::exception& e) {
        return std::string("malformed record: ") + e.what();
    }
    return "";
}

ValidationReport validate_instances(const fs::path& path) {
    std::string raw = read_file(path);
    ValidationReport report;
    size_t pos = 0;
    long line_no = 0;
    while (pos < raw.size()) {
        size_t nl = raw.find('\n', pos);
        size_t end = nl == std::string::npos ? raw.size() : nl;
        std::string line = raw.substr(pos, end - pos);
        pos = nl == std::string::npos ? raw.size() : nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        ++report.total;
        std::string why;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            why = "not valid JSON";
        else
            why = validate_instance_record(rec);
        if (why.empty()) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.first_failure.empty())
                report.first_failure = "line " + std::to_string(line_no) + ": " + why;
        }
    }
    return report;
}

} // namespace iab::pipeline
