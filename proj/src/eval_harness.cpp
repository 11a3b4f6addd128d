#include "iab/eval_harness.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <set>

namespace iab::eval_harness {

std::string condition_name(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Base: return "Base";
        case ConditionKind::RAG: return "RAG";
        case ConditionKind::Reflexion: return "Reflexion";
    }
    throw ConfigError("unknown condition");
}

ConditionKind condition_from_name(const std::string& name) {
    if (name == "Base") return ConditionKind::Base;
    if (name == "RAG") return ConditionKind::RAG;
    if (name == "Reflexion") return ConditionKind::Reflexion;
    throw ConfigError("unknown condition name: " + name);
}

Retriever make_search_retriever(gateway::Gateway& gw) {
    return [&gw](const std::string& question, int k) {
        gateway::SearchResponse resp = gw.search({question, k});
        std::vector<std::string> extracts;
        for (const auto& hit : resp.hits) extracts.push_back(hit.title + " (" + hit.url + ")");
        return extracts;
    };
}

namespace {

std::string ask(gateway::Gateway& gw, const std::string& model_id,
                const std::vector<gateway::Message>& messages) {
    gateway::ChatRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    req.messages = messages;
    return trim(gw.complete(req).text);
}

std::string render_context(const std::vector<std::string>& extracts) {
    std::string out;
    for (size_t i = 0; i < extracts.size(); ++i)
        out += "[" + std::to_string(i + 1) + "] " + extracts[i] + "\n";
    return out;
}

} // namespace

Transcript run_condition(const EvalItem& item, const std::string& model_id,
                         const Condition& condition, gateway::Gateway& gw,
                         const Retriever& retrieve) {
    auto started = std::chrono::steady_clock::now();
    Transcript t;
    t.instance_id = item.id;
    t.condition = condition_name(condition.kind);
    t.model_id = model_id;

    const std::string answer_system =
        "Answer the question with a short, direct answer. If you do not know, say so.";

    if (condition.kind == ConditionKind::Base) {
        t.final_answer = ask(gw, model_id, {{"system", answer_system}, {"user", item.question}});
        t.steps.push_back({"answer", t.final_answer});
    } else {
        std::vector<std::string> extracts;
        try {
            if (!retrieve) throw gateway::TransportError("no retriever configured");
            extracts = retrieve(item.question, condition.rag_source_count);
        } catch (const std::exception&) {
            t.failed = true;
        }
        if (!t.failed && extracts.empty()) t.failed = true;
        if (t.failed) {
            t.elapsed_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
            return t;
        }

        std::string context = render_context(extracts);
        t.steps.push_back({"context", context});
        std::string question_with_context =
            "Context:\n" + context + "\nQuestion: " + item.question;
        std::string answer =
            ask(gw, model_id, {{"system", answer_system}, {"user", question_with_context}});
        t.steps.push_back({"answer", answer});

        if (condition.kind == ConditionKind::Reflexion) {
            for (int round = 0; round < condition.max_reflection_rounds; ++round) {
                std::string critique = ask(
                    gw, model_id,
                    {{"system",
                      "You check answers against retrieved context. If the answer is "
                      "correct, reply with the single word: correct. Otherwise explain "
                      "what is wrong."},
                     {"user", "Context:\n" + context + "\nQuestion: " + item.question +
                                  "\nAnswer: " + answer}});
                t.steps.push_back({"critique", critique});
                if (starts_with_ci(trim(critique), "correct")) break;
                answer = ask(gw, model_id,
                             {{"system", answer_system},
                              {"user", "Context:\n" + context + "\nQuestion: " +
                                           item.question + "\nYour previous answer: " +
                                           answer + "\nCritique: " + critique +
                                           "\nGive the corrected short answer."}});
                t.steps.push_back({"revision", answer});
            }
        }
        t.final_answer = answer;
    }

    t.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    return t;
}

// ---------------------------------------------------------------------------
// Grading

bool is_refusal(const std::string& predicted) {
    std::string p = to_lower(trim(predicted));
    if (p.empty()) return true;
    static const char* prefixes[] = {"i don't know", "i do not know", "i dont know",
                                     "i cannot",     "i can't",       "unable to",
                                     "no answer",    "not sure",      "unknown"};
    for (const char* prefix : prefixes)
        if (p.rfind(prefix, 0) == 0) return true;
    return false;
}

Grade grade(const std::string& question, const std::string& gold, const std::string& predicted,
            gateway::Gateway& grader, const std::string& grader_model,
            const std::string& rubric) {
    if (trim(question).empty() || trim(gold).empty())
        throw PipelineError("grading needs a question and a gold answer");
    if (is_refusal(predicted)) return {"NOT_ATTEMPTED", "empty or refused prediction"};

    gateway::ChatRequest req;
    req.model_id = grader_model;
    req.temperature = 0.0;
    req.max_tokens = 512;
    req.messages = {{"system", rubric},
                    {"user", "Question: " + question + "\nGold answer: " + gold +
                                 "\nPredicted answer: " + predicted +
                                 "\n\nReturn ONLY a JSON object {\"label\": \"CORRECT\" | "
                                 "\"INCORRECT\" | \"NOT_ATTEMPTED\", \"reasoning\": "
                                 "string}."}};

    std::string err;
    auto parsed = gateway::complete_json(grader, req, "grade_object", err);
    if (!parsed) return {"INCORRECT", "grader_failure"};
    return {(*parsed)["label"].get<std::string>(), (*parsed)["reasoning"].get<std::string>()};
}

// ---------------------------------------------------------------------------
// Reporting

EvalReport compute_report(const std::vector<GradedRun>& runs) {
    struct Bucket {
        long correct = 0;
        long graded = 0;
    };
    std::map<std::pair<std::string, std::string>, std::map<std::string, Bucket>> groups;
    std::map<std::pair<std::string, std::string>, long> failed;
    for (const auto& r : runs) {
        auto key = std::make_pair(r.model, r.dataset);
        if (r.failed) {
            ++failed[key];
            continue;
        }
        Bucket& b = groups[key][r.condition];
        ++b.graded;
        if (r.label == "CORRECT") ++b.correct;
    }

    EvalReport report;
    for (const auto& [key, conditions] : groups) {
        ReportRow row;
        row.model = key.first;
        row.dataset = key.second;
        for (const char* cond : {"Base", "RAG", "Reflexion"})
            if (!conditions.count(cond) || conditions.at(cond).graded == 0)
                throw PipelineError("no graded runs for " + row.model + "/" + row.dataset +
                                    "/" + cond);
        auto acc = [&](const char* cond) {
            const Bucket& b = conditions.at(cond);
            return static_cast<double>(b.correct) / static_cast<double>(b.graded);
        };
        row.acc_base = acc("Base");
        row.acc_rag = acc("RAG");
        row.acc_refl = acc("Reflexion");
        for (const auto& [cond, b] : conditions) row.graded += b.graded;
        auto fit = failed.find(key);
        row.failed = fit == failed.end() ? 0 : fit->second;
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string format_acc(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

} // namespace

std::string report_csv(const EvalReport& report) {
    std::string out = "model,dataset,condition,accuracy,n\n";
    for (const auto& row : report.rows) {
        out += row.model + "," + row.dataset + ",Base," + format_acc(row.acc_base) + "," +
               std::to_string(row.graded) + "\n";
        out += row.model + "," + row.dataset + ",RAG," + format_acc(row.acc_rag) + "," +
               std::to_string(row.graded) + "\n";
        out += row.model + "," + row.dataset + ",Reflexion," + format_acc(row.acc_refl) + "," +
               std::to_string(row.graded) + "\n";
    }
    return out;
}

std::string deltas_csv(const EvalReport& report) {
    std::string out = "model,dataset,base,rag,refl,delta_rag,delta_refl\n";
    for (const auto& row : report.rows) {
        out += row.model + "," + row.dataset + "," + format_acc(row.acc_base) + "," +
               format_acc(row.acc_rag) + "," + format_acc(row.acc_refl) + "," +
               format_acc(row.delta_rag()) + "," + format_acc(row.delta_refl()) + "\n";
    }
    return out;
}

std::vector<size_t> sample_indices(size_t dataset_size, size_t n, std::uint64_t seed) {
    if (n > dataset_size) throw PipelineError("sample size exceeds dataset size");
    std::vector<size_t> indices(dataset_size);
    std::iota(indices.begin(), indices.end(), 0);
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<size_t> pick(i, dataset_size - 1);
        std::swap(indices[i], indices[pick(rng)]);
    }
    indices.resize(n);
    std::sort(indices.begin(), indices.end());
    return indices;
}

// ---------------------------------------------------------------------------
// Serialization

json transcript_to_json(const Transcript& t) {
    json steps = json::array();
    for (const auto& s : t.steps) steps.push_back(json{{"kind", s.kind}, {"text", s.text}});
    return json{{"instance_id", t.instance_id},
                {"condition", t.condition},
                {"model_id", t.model_id},
                {"steps", steps},
                {"final_answer", t.final_answer},
                {"failed", t.failed},
                {"elapsed_ms", t.elapsed_ms}};
}

Transcript transcript_from_json(const json& j) {
    Transcript t;
    t.instance_id = j.at("instance_id").get<std::string>();
    t.condition = j.at("condition").get<std::string>();
    t.model_id = j.at("model_id").get<std::string>();
    for (const auto& js : j.at("steps"))
        t.steps.push_back({js.at("kind").get<std::string>(), js.at("text").get<std::string>()});
    t.final_answer = j.at("final_answer").get<std::string>();
    t.failed = j.at("failed").get<bool>();
    t.elapsed_ms = j.at("elapsed_ms").get<double>();
    return t;
}

} // namespace iab::eval_harness
