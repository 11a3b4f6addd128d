#pragma once

#include <map>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/gateway.hpp"
#include "iab/packet_forge.hpp"

namespace iab::qa_factory {

// {explainer, connection, trigger, consequence, stake}
const std::vector<std::string>& intent_patterns();

struct QACandidate {
    std::string question;
    std::string answer; // at most 12 tokens
    std::vector<int> required_communities;
    std::vector<std::pair<int, std::string>> supporting_findings; // (community, finding)
    std::vector<std::string> supporting_connectors;
    std::string intent_pattern;
    std::string why_multi_community;
};

struct JudgeDecision {
    std::string judge_model_id;
    std::map<std::string, bool> flags;              // criterion -> flag
    std::map<std::string, std::string> reasonings;  // criterion -> reasoning
    bool overall() const;                           // conjunction of all flags
};

struct Verdict {
    bool accepted = false;
    int votes_for = 0;
    bool veto_triggered = false;
    std::string veto_category = "none"; // missing_evidence | non_unique | trivia_drift | none
};

std::string generation_prompt(const packet_forge::Packet& packet, int k);
std::string judge_prompt(const QACandidate& candidate, const packet_forge::Packet& packet);

// One generation call (plus at most one repair). Structurally invalid
// candidates are dropped before judging; reasons land in *drop_reasons.
std::vector<QACandidate> generate_candidates(const packet_forge::Packet& packet,
                                             gateway::Gateway& gw, const std::string& model_id,
                                             int k,
                                             std::vector<std::string>* drop_reasons = nullptr);

// Validation used by generate_candidates, exposed for the instance checker:
// returns an empty string when the candidate is structurally sound against
// the packet, else the reason.
std::string candidate_structural_error(const QACandidate& candidate,
                                       const packet_forge::Packet& packet);

// Exactly one decision per panel member; a judge failing schema twice
// degrades to an all-false decision reasoned "schema_failure".
std::vector<JudgeDecision> judge_candidate(const QACandidate& candidate,
                                           const packet_forge::Packet& packet,
                                           gateway::Gateway& gw,
                                           const std::vector<std::string>& panel);

// Per-judge vote = AND of the 8 flags. Vetoes: missing_evidence when
// evidence_only_support or evidence_presence_consistency is false, non_unique
// when objective_qa is false, trivia_drift when anti_trivia is false.
// Accepted needs >= 2 votes and zero vetoes across the panel.
Verdict aggregate_decisions(const std::vector<JudgeDecision>& decisions);

// Query-level context an instance embeds alongside the packet.
struct InstanceContext {
    std::string query_id;
    std::string query;       // seed text
    std::string time_window; // "YYYY-MM-DD..YYYY-MM-DD"
    json retrieved_sources;  // array of {url, title, rank, retrieved_at}
    json text_units;         // array of unit records covering packet evidence
    json story_graph_stats;  // {"nodes": n, "edges": m}
    json communities;        // partition + roles + influence artifact
    json community_cards;    // all cards for the query
    json connectors;         // selected connector records for the query
};

// Builds the released record (16 fields) and verifies reference closure;
// an unresolved id aborts with an error since it means a pipeline bug.
json assemble_instance(const QACandidate& candidate, const Verdict& verdict,
                       const std::vector<JudgeDecision>& decisions,
                       const packet_forge::Packet& packet, const InstanceContext& ctx);

// The exact released field set, sorted.
const std::vector<std::string>& instance_fields();

json candidate_to_json(const QACandidate& c);
QACandidate candidate_from_json(const json& j);
json decision_to_json(const JudgeDecision& d);
JudgeDecision decision_from_json(const json& j);

} // namespace iab::qa_factory
