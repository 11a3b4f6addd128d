#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/gateway.hpp"

namespace iab::eval_harness {

enum class ConditionKind { Base, RAG, Reflexion };
std::string condition_name(ConditionKind kind);
ConditionKind condition_from_name(const std::string& name);

struct Condition {
    ConditionKind kind = ConditionKind::Base;
    int rag_source_count = 10;     // RAG / Reflexion
    int max_reflection_rounds = 2; // Reflexion; no re-retrieval between rounds
};

// Adapter row: benchmark instances qualify directly (id, question, answer);
// external datasets supply the same three fields.
struct EvalItem {
    std::string id;
    std::string question;
    std::string gold;
};

struct Step {
    std::string kind; // context | answer | critique | revision
    std::string text;
};

struct Transcript {
    std::string instance_id;
    std::string condition;
    std::string model_id;
    std::vector<Step> steps;
    std::string final_answer;
    bool failed = false; // retrieval failure; excluded from accuracy
    double elapsed_ms = 0.0;
};

// Returns up to k context extracts for a question; RAG and Reflexion use it,
// Base never calls it. A throw marks the transcript failed.
using Retriever = std::function<std::vector<std::string>(const std::string& question, int k)>;

// Retriever backed by the gateway's search endpoint (titles + urls as
// extracts); enough for offline cassette runs.
Retriever make_search_retriever(gateway::Gateway& gw);

Transcript run_condition(const EvalItem& item, const std::string& model_id,
                         const Condition& condition, gateway::Gateway& gw,
                         const Retriever& retrieve);

struct Grade {
    std::string label; // CORRECT | INCORRECT | NOT_ATTEMPTED
    std::string reasoning;
};

// Empty or refusal predictions short-circuit to NOT_ATTEMPTED without a
// grader call; a grader schema failure lands INCORRECT / "grader_failure".
Grade grade(const std::string& question, const std::string& gold, const std::string& predicted,
            gateway::Gateway& grader, const std::string& grader_model,
            const std::string& rubric);

bool is_refusal(const std::string& predicted);

struct GradedRun {
    std::string model;
    std::string dataset;
    std::string condition; // Base | RAG | Reflexion
    std::string label;     // grade label; ignored when failed
    bool failed = false;
};

struct ReportRow {
    std::string model;
    std::string dataset;
    double acc_base = 0.0;
    double acc_rag = 0.0;
    double acc_refl = 0.0;
    long graded = 0; // across the three conditions
    long failed = 0;
    double delta_rag() const { return acc_rag - acc_base; }
    double delta_refl() const { return acc_refl - acc_rag; }
};

struct EvalReport {
    std::vector<ReportRow> rows; // sorted by (model, dataset)
};

// accuracy = CORRECT / graded per condition; every (model, dataset) group
// must carry all three conditions with at least one graded run each.
EvalReport compute_report(const std::vector<GradedRun>& runs);

// report.csv: model,dataset,condition,accuracy,n (long format)
std::string report_csv(const EvalReport& report);
// deltas.csv: model,dataset,base,rag,refl,delta_rag,delta_refl
std::string deltas_csv(const EvalReport& report);

// Uniform sample without replacement; deterministic for a fixed seed;
// returned indices are sorted ascending.
std::vector<size_t> sample_indices(size_t dataset_size, size_t n, std::uint64_t seed);

json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const json& j);

} // namespace iab::eval_harness
