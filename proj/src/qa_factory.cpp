#include "iab/qa_factory.hpp"

#include <algorithm>
#include <set>

namespace iab::qa_factory {

const std::vector<std::string>& intent_patterns() {
    static const std::vector<std::string> patterns = {"explainer", "connection", "trigger",
                                                      "consequence", "stake"};
    return patterns;
}

bool JudgeDecision::overall() const {
    for (const auto& name : gateway::judge_criteria()) {
        auto it = flags.find(name);
        if (it == flags.end() || !it->second) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Prompts

std::string generation_prompt(const packet_forge::Packet& packet, int k) {
    std::string intents = join(intent_patterns(), ", ");
    return "You are given a packet describing " + std::to_string(packet.bundle.themes.size()) +
           " themes of one evolving news story: each theme's community card (summary plus "
           "findings with ids) and the connector relations that link the themes.\n\n"
           "Write up to " + std::to_string(k) +
           " question-answer pairs that can only be answered by combining at least two of "
           "the themes through at least one connector relation. Requirements for every "
           "pair:\n"
           "- the answer is short (at most 12 tokens) and objectively correct given the "
           "packet;\n"
           "- the question is a natural, self-contained user question;\n"
           "- required_communities lists the 2 or 3 theme ids that are all needed;\n"
           "- supporting_findings cites at least one finding id from every required "
           "theme;\n"
           "- supporting_connectors lists at least one connector id joining required "
           "themes;\n"
           "- intent_pattern is one of: " + intents + ";\n"
           "- why_multi_community is one sentence on why a single theme cannot answer "
           "it.\n\n"
           "Use only ids that appear in the packet. Return ONLY the JSON array of objects "
           "with exactly these keys: \"question\", \"answer\", \"required_communities\", "
           "\"supporting_findings\" (objects with \"community_id\" and \"finding_id\"), "
           "\"supporting_connectors\", \"intent_pattern\", \"why_multi_community\".\n\n"
           "Packet:\n" + dump_pretty(packet_forge::packet_to_json(packet));
}

std::string judge_prompt(const QACandidate& candidate, const packet_forge::Packet& packet) {
    std::string keys;
    for (const auto& name : gateway::judge_criteria())
        keys += "\"" + name + "_flag\" (boolean), \"" + name + "_reasoning\" (string), ";
    keys.resize(keys.size() - 2);

    return "Judge the candidate question-answer pair against the evidence packet. Apply "
           "each criterion strictly:\n"
           "- evidence_only_support: the answer is fully supported by the packet's "
           "findings and connectors alone.\n"
           "- multi_community_necessity: no single theme suffices; removing any required "
           "theme makes the question unanswerable.\n"
           "- connector_necessity: at least one cited connector relation is essential to "
           "the answer.\n"
           "- objective_qa: the question has exactly one objectively correct answer.\n"
           "- natural_user_question: the question reads like something a real user would "
           "ask.\n"
           "- anti_trivia: the pair is anchored in this story, not answerable from general "
           "knowledge.\n"
           "- evidence_presence_consistency: every cited finding and connector id exists "
           "in the packet and states what the candidate relies on.\n"
           "- standalone_clarity: the question is understandable without seeing the "
           "packet.\n\n"
           "Return ONLY a JSON object with EXACTLY these keys: " + keys + ".\n\n"
           "Candidate:\n" + dump_pretty(candidate_to_json(candidate)) +
           "\n\nPacket:\n" + dump_pretty(packet_forge::packet_to_json(packet));
}

// ---------------------------------------------------------------------------
// Generation

std::string candidate_structural_error(const QACandidate& c,
                                       const packet_forge::Packet& packet) {
    if (trim(c.question).empty()) return "empty question";
    if (trim(c.answer).empty()) return "empty answer";
    if (token_count(c.answer) > 12) return "answer longer than 12 tokens";
    const auto& intents = intent_patterns();
    if (std::find(intents.begin(), intents.end(), c.intent_pattern) == intents.end())
        return "unknown intent_pattern: " + c.intent_pattern;
    if (trim(c.why_multi_community).empty()) return "empty why_multi_community";

    std::set<int> required(c.required_communities.begin(), c.required_communities.end());
    if (required.size() != c.required_communities.size())
        return "duplicate required community";
    if (required.size() < 2) return "fewer than 2 required communities";
    std::set<int> themes(packet.bundle.themes.begin(), packet.bundle.themes.end());
    for (int cid : required)
        if (!themes.count(cid))
            return "required community " + std::to_string(cid) + " not in packet";

    std::map<int, std::set<std::string>> card_findings;
    for (const auto& card : packet.cards)
        for (const auto& f : card.findings)
            card_findings[card.community_id].insert(f.finding_id);

    std::set<int> covered;
    if (c.supporting_findings.empty()) return "no supporting findings";
    for (const auto& [cid, fid] : c.supporting_findings) {
        if (!required.count(cid))
            return "finding cites non-required community " + std::to_string(cid);
        auto it = card_findings.find(cid);
        if (it == card_findings.end() || !it->second.count(fid))
            return "unknown finding id " + fid;
        covered.insert(cid);
    }
    for (int cid : required)
        if (!covered.count(cid))
            return "required community " + std::to_string(cid) + " has no supporting finding";

    if (c.supporting_connectors.empty()) return "no supporting connectors";
    std::map<std::string, std::pair<int, int>> conn;
    for (const auto& pc : packet.connectors)
        conn[pc.connector_id] = {pc.source_community, pc.target_community};
    for (const auto& id : c.supporting_connectors) {
        auto it = conn.find(id);
        if (it == conn.end()) return "unknown connector id " + id;
        if (!required.count(it->second.first) || !required.count(it->second.second))
            return "connector " + id + " joins a non-required community";
    }
    return "";
}

std::vector<QACandidate> generate_candidates(const packet_forge::Packet& packet,
                                             gateway::Gateway& gw, const std::string& model_id,
                                             int k, std::vector<std::string>* drop_reasons) {
    if (k < 1) throw PipelineError("candidate count must be positive");

    gateway::ChatRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = 4096;
    req.messages = {{"system",
                     "You write benchmark questions that require combining multiple themes "
                     "of a news story. Respond with JSON only."},
                    {"user", generation_prompt(packet, k)}};

    std::string err;
    auto parsed = gateway::complete_json(gw, req, "qa_array", err);
    if (!parsed) {
        if (drop_reasons) drop_reasons->push_back("generation rejected: " + err);
        return {};
    }

    std::vector<QACandidate> out;
    size_t limit = std::min<size_t>(parsed->size(), static_cast<size_t>(k));
    for (size_t i = 0; i < limit; ++i) {
        QACandidate c = candidate_from_json((*parsed)[i]);
        std::string reason = candidate_structural_error(c, packet);
        if (!reason.empty()) {
            if (drop_reasons)
                drop_reasons->push_back("candidate " + std::to_string(i) + ": " + reason);
            continue;
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Judging

std::vector<JudgeDecision> judge_candidate(const QACandidate& candidate,
                                           const packet_forge::Packet& packet,
                                           gateway::Gateway& gw,
                                           const std::vector<std::string>& panel) {
    if (panel.size() != 3) throw PipelineError("judge panel must have exactly 3 models");
    std::string prompt = judge_prompt(candidate, packet);

    std::vector<JudgeDecision> out;
    for (const auto& model_id : panel) {
        gateway::ChatRequest req;
        req.model_id = model_id;
        req.temperature = 0.0;
        req.max_tokens = 2048;
        req.messages = {{"system",
                         "You are a strict benchmark validator. Respond with JSON only."},
                        {"user", prompt}};

        JudgeDecision d;
        d.judge_model_id = model_id;
        std::string err;
        auto parsed = gateway::complete_json(gw, req, "judge_object", err);
        for (const auto& name : gateway::judge_criteria()) {
            if (parsed) {
                d.flags[name] = (*parsed)[name + "_flag"].get<bool>();
                d.reasonings[name] = (*parsed)[name + "_reasoning"].get<std::string>();
            } else {
                d.flags[name] = false;
                d.reasonings[name] = "schema_failure";
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

Verdict aggregate_decisions(const std::vector<JudgeDecision>& decisions) {
    if (decisions.size() != 3)
        throw PipelineError("aggregation needs exactly 3 judge decisions");

    auto flag = [](const JudgeDecision& d, const std::string& name) {
        auto it = d.flags.find(name);
        return it != d.flags.end() && it->second;
    };

    Verdict v;
    bool missing_evidence = false, non_unique = false, trivia_drift = false;
    for (const auto& d : decisions) {
        if (d.overall()) ++v.votes_for;
        if (!flag(d, "evidence_only_support") || !flag(d, "evidence_presence_consistency"))
            missing_evidence = true;
        if (!flag(d, "objective_qa")) non_unique = true;
        if (!flag(d, "anti_trivia")) trivia_drift = true;
    }
    if (missing_evidence)
        v.veto_category = "missing_evidence";
    else if (non_unique)
        v.veto_category = "non_unique";
    else if (trivia_drift)
        v.veto_category = "trivia_drift";
    v.veto_triggered = v.veto_category != "none";
    v.accepted = v.votes_for >= 2 && !v.veto_triggered;
    return v;
}

// ---------------------------------------------------------------------------
// Instance assembly

const std::vector<std::string>& instance_fields() {
    static const std::vector<std::string> fields = {
        "answer",         "communities",          "community_cards",
        "connectors",     "id",                   "intent_pattern",
        "judge_decisions", "packet",              "query",
        "question",       "retrieved_sources",    "story_graph_stats",
        "supporting_findings", "supporting_connectors", "text_units",
        "time_window"};
    return fields;
}

json assemble_instance(const QACandidate& candidate, const Verdict& verdict,
                       const std::vector<JudgeDecision>& decisions,
                       const packet_forge::Packet& packet, const InstanceContext& ctx) {
    if (!verdict.accepted) throw PipelineError("only accepted candidates become instances");
    std::string structural = candidate_structural_error(candidate, packet);
    if (!structural.empty())
        throw PipelineError("unresolved reference in accepted candidate: " + structural);
    if (decisions.size() != 3) throw PipelineError("instance needs 3 judge decisions");

    // every evidence pointer inside the packet must resolve to a shipped unit
    std::set<std::string> unit_ids;
    for (const auto& u : ctx.text_units) unit_ids.insert(u.at("unit_id").get<std::string>());
    auto check_evidence = [&](const std::vector<std::string>& ev, const std::string& what) {
        for (const auto& id : ev)
            if (!unit_ids.count(id))
                throw PipelineError("unresolved evidence unit " + id + " in " + what);
    };
    for (const auto& card : packet.cards)
        for (const auto& f : card.findings) check_evidence(f.evidence, f.finding_id);
    for (const auto& c : packet.connectors) check_evidence(c.evidence, c.connector_id);

    json supporting = json::array();
    for (const auto& [cid, fid] : candidate.supporting_findings)
        supporting.push_back(json{{"community_id", cid}, {"finding_id", fid}});

    json judges = json::array();
    for (const auto& d : decisions) judges.push_back(decision_to_json(d));

    return json{
        {"id", "i" + hash_hex(fnv1a64(ctx.query_id + "\x1f" + packet.packet_id + "\x1f" +
                                      candidate.question))},
        {"query", ctx.query},
        {"time_window", ctx.time_window},
        {"question", candidate.question},
        {"answer", candidate.answer},
        {"intent_pattern", candidate.intent_pattern},
        {"retrieved_sources", ctx.retrieved_sources},
        {"text_units", ctx.text_units},
        {"story_graph_stats", ctx.story_graph_stats},
        {"communities", ctx.communities},
        {"community_cards", ctx.community_cards},
        {"connectors", ctx.connectors},
        {"packet", packet_forge::packet_to_json(packet)},
        {"supporting_findings", supporting},
        {"supporting_connectors", candidate.supporting_connectors},
        {"judge_decisions", judges}};
}

// ---------------------------------------------------------------------------
// Serialization

json candidate_to_json(const QACandidate& c) {
    json findings = json::array();
    for (const auto& [cid, fid] : c.supporting_findings)
        findings.push_back(json{{"community_id", cid}, {"finding_id", fid}});
    return json{{"question", c.question},
                {"answer", c.answer},
                {"required_communities", c.required_communities},
                {"supporting_findings", findings},
                {"supporting_connectors", c.supporting_connectors},
                {"intent_pattern", c.intent_pattern},
                {"why_multi_community", c.why_multi_community}};
}

QACandidate candidate_from_json(const json& j) {
    QACandidate c;
    c.question = j.at("question").get<std::string>();
    c.answer = j.at("answer").get<std::string>();
    c.required_communities = j.at("required_communities").get<std::vector<int>>();
    for (const auto& f : j.at("supporting_findings"))
        c.supporting_findings.emplace_back(f.at("community_id").get<int>(),
                                           f.at("finding_id").get<std::string>());
    c.supporting_connectors = j.at("supporting_connectors").get<std::vector<std::string>>();
    c.intent_pattern = j.at("intent_pattern").get<std::string>();
    c.why_multi_community = j.at("why_multi_community").get<std::string>();
    return c;
}

json decision_to_json(const JudgeDecision& d) {
    json out{{"judge_model_id", d.judge_model_id}};
    for (const auto& name : gateway::judge_criteria()) {
        out[name + "_flag"] = d.flags.count(name) ? d.flags.at(name) : false;
        out[name + "_reasoning"] = d.reasonings.count(name) ? d.reasonings.at(name) : "";
    }
    return out;
}

JudgeDecision decision_from_json(const json& j) {
    JudgeDecision d;
    d.judge_model_id = j.at("judge_model_id").get<std::string>();
    for (const auto& name : gateway::judge_criteria()) {
        d.flags[name] = j.at(name + "_flag").get<bool>();
        d.reasonings[name] = j.at(name + "_reasoning").get<std::string>();
    }
    return d;
}

} // namespace iab::qa_factory
