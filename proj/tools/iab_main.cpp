#include <cctype>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "iab/eval_harness.hpp"
#include "iab/gateway.hpp"
#include "iab/pipeline.hpp"

namespace fs = std::filesystem;
using namespace iab;

namespace {

std::string file_tag(const std::string& s) {
    std::string out;
    for (char ch : s)
        out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ||
                ch == '_')
                   ? ch
                   : '-';
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& part : split(s, ','))
        if (!trim(part).empty()) out.push_back(trim(part));
    return out;
}

eval_harness::ConditionKind condition_from_cli(const std::string& s) {
    std::string t = to_lower(trim(s));
    if (t == "base") return eval_harness::ConditionKind::Base;
    if (t == "rag") return eval_harness::ConditionKind::RAG;
    if (t == "reflexion") return eval_harness::ConditionKind::Reflexion;
    throw ConfigError("unknown condition: " + s);
}

std::vector<eval_harness::EvalItem> load_items(const fs::path& path) {
    std::vector<eval_harness::EvalItem> items;
    for (const auto& j : load_jsonl_file(path)) {
        eval_harness::EvalItem item;
        item.id = j.contains("id") ? j.at("id").get<std::string>()
                                   : "item-" + std::to_string(items.size());
        item.question = j.at("question").get<std::string>();
        item.gold = j.at("answer").get<std::string>();
        items.push_back(std::move(item));
    }
    if (items.empty()) throw PipelineError("no items in " + path.string());
    return items;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark construction and evaluation pipeline"};
    app.require_subcommand(1);
    int rc = 0;

    std::string config_path = "config/pipeline.json";

    auto add_stage = [&](const std::string& name, const std::string& desc,
                         const std::string& stage) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->add_option("-c,--config", config_path, "pipeline config file");
        cmd->callback([&, stage] {
            auto cfg = pipeline::run_stage(pipeline::load_config(
                load_json_file(config_path)), stage);
            for (const auto& file : cfg) std::cout << file.generic_string() << "\n";
        });
        return cmd;
    };
    add_stage("mine-seeds", "select seed queries from GKG snapshots", "seeds");
    add_stage("build-corpus", "search and fetch documents for each seed query", "corpus");
    add_stage("build-graph", "extract assertions and assemble story graphs", "graph");
    add_stage("themes", "detect communities, score influence, write community cards", "themes");
    add_stage("packets", "select connectors and assemble context packets", "packets");
    add_stage("generate-qa", "generate, judge, and release benchmark instances", "qa");

    auto* run = app.add_subcommand("run-window", "run every stage for the window, resuming");
    run->add_option("-c,--config", config_path, "pipeline config file");
    run->callback([&] {
        auto cfg = pipeline::load_config_file(config_path);
        auto manifest = pipeline::run_window(cfg);
        for (const auto& s : manifest.stages) std::cout << s.name << ": " << s.status << "\n";
        std::cout << "run " << manifest.run_id << " complete\n";
    });

    auto* val = app.add_subcommand("validate", "check a released instances file");
    std::string val_path;
    val->add_option("file", val_path, "instances .jsonl file")->required();
    val->callback([&] {
        auto report = pipeline::validate_instances(val_path);
        std::cout << report.total << " instances: " << report.passed << " passed, "
                  << report.failed << " failed\n";
        if (report.failed > 0) {
            std::cout << report.first_failure << "\n";
            rc = 1;
        }
    });

    auto* ev = app.add_subcommand("evaluate", "run models over a question set and grade them");
    std::string ev_input, ev_dataset, ev_models;
    std::string ev_conditions = "base,rag,reflexion";
    std::string ev_out = "eval";
    std::string ev_mode = "replay", ev_cassette;
    std::string ev_chat_base = "http://127.0.0.1:8080";
    std::string ev_search_base = "http://127.0.0.1:8081";
    std::string ev_grader = "grader-1";
    std::string ev_rubric = "config/simpleqa_grader.txt";
    long ev_sample = 0;
    std::uint64_t ev_seed = 17;
    int ev_rag_sources = 10, ev_refl_rounds = 2;
    ev->add_option("--input", ev_input, "items .jsonl (question, answer, optional id)")
        ->required();
    ev->add_option("--dataset", ev_dataset, "dataset label (default: input stem)");
    ev->add_option("--models", ev_models, "comma-separated model ids")->required();
    ev->add_option("--conditions", ev_conditions, "subset of base,rag,reflexion");
    ev->add_option("--out", ev_out, "output directory");
    ev->add_option("--mode", ev_mode, "record | replay | live");
    ev->add_option("--cassette", ev_cassette, "cassette file (default <out>/cassette.json)");
    ev->add_option("--chat-base", ev_chat_base, "chat endpoint base URL");
    ev->add_option("--search-base", ev_search_base, "search endpoint base URL");
    ev->add_option("--grader-model", ev_grader, "grading model id");
    ev->add_option("--rubric", ev_rubric, "grading rubric text file");
    ev->add_option("--sample", ev_sample, "evaluate a random sample of this size");
    ev->add_option("--sample-seed", ev_seed, "sampling seed");
    ev->add_option("--rag-sources", ev_rag_sources, "retrieved extracts per question");
    ev->add_option("--reflection-rounds", ev_refl_rounds, "max Reflexion rounds");
    ev->callback([&] {
        auto mode = gateway::mode_from_string(ev_mode);
        auto items = load_items(ev_input);
        std::vector<size_t> picked(items.size());
        std::iota(picked.begin(), picked.end(), size_t{0});
        if (ev_sample > 0)
            picked = eval_harness::sample_indices(items.size(), static_cast<size_t>(ev_sample),
                                                  ev_seed);

        fs::path out_dir = ev_out;
        fs::path cassette = ev_cassette.empty() ? out_dir / "cassette.json" : fs::path(ev_cassette);
        gateway::ChatTransport chat = mode == gateway::Mode::replay
                                          ? nullptr
                                          : gateway::make_http_chat_transport(ev_chat_base);
        gateway::SearchTransport search = mode == gateway::Mode::replay
                                              ? nullptr
                                              : gateway::make_http_search_transport(ev_search_base);
        gateway::Gateway gw(mode, cassette, std::move(chat), std::move(search));
        auto retrieve = eval_harness::make_search_retriever(gw);
        std::string rubric = read_file(ev_rubric);
        std::string dataset = ev_dataset.empty() ? fs::path(ev_input).stem().string() : ev_dataset;

        auto models = split_csv(ev_models);
        auto conditions = split_csv(ev_conditions);
        if (models.empty()) throw ConfigError("no models given");
        if (conditions.empty()) throw ConfigError("no conditions given");

        std::string graded_lines;
        for (const auto& model : models) {
            for (const auto& cname : conditions) {
                eval_harness::Condition cond;
                cond.kind = condition_from_cli(cname);
                cond.rag_source_count = ev_rag_sources;
                cond.max_reflection_rounds = ev_refl_rounds;
                std::string label = eval_harness::condition_name(cond.kind);

                std::string transcript_lines;
                for (size_t idx : picked) {
                    auto t = eval_harness::run_condition(items[idx], model, cond, gw, retrieve);
                    transcript_lines += dump_line(eval_harness::transcript_to_json(t)) + "\n";
                    std::string grade_label;
                    if (!t.failed) {
                        auto g = eval_harness::grade(items[idx].question, items[idx].gold,
                                                     t.final_answer, gw, ev_grader, rubric);
                        grade_label = g.label;
                    }
                    graded_lines += dump_line(json{{"model", model},
                                                   {"dataset", dataset},
                                                   {"condition", label},
                                                   {"label", grade_label},
                                                   {"failed", t.failed}}) +
                                    "\n";
                }
                write_file(out_dir / "transcripts" /
                               (file_tag(model) + "__" + to_lower(label) + ".jsonl"),
                           transcript_lines);
                std::cerr << "[evaluate] " << model << " / " << label << ": " << picked.size()
                          << " items\n";
            }
        }
        write_file(out_dir / "graded.jsonl", graded_lines);
        std::cout << "evaluated " << picked.size() << " items across " << models.size()
                  << " models and " << conditions.size() << " conditions\n"
                  << "graded runs: " << (out_dir / "graded.jsonl").generic_string() << "\n";
    });

    auto* rep = app.add_subcommand("report", "fold graded runs into accuracy and delta tables");
    std::vector<std::string> rep_files;
    std::string rep_out = "eval";
    rep->add_option("files", rep_files, "graded .jsonl files")->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->callback([&] {
        std::vector<eval_harness::GradedRun> runs;
        for (const auto& file : rep_files) {
            for (const auto& j : load_jsonl_file(file)) {
                eval_harness::GradedRun r;
                r.model = j.at("model").get<std::string>();
                r.dataset = j.at("dataset").get<std::string>();
                r.condition = j.at("condition").get<std::string>();
                r.label = j.at("label").get<std::string>();
                r.failed = j.at("failed").get<bool>();
                runs.push_back(std::move(r));
            }
        }
        auto report = eval_harness::compute_report(runs);
        fs::path out_dir = rep_out;
        write_file(out_dir / "report.csv", eval_harness::report_csv(report));
        write_file(out_dir / "deltas.csv", eval_harness::deltas_csv(report));
        std::cout << eval_harness::report_csv(report);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
