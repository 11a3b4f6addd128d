// Regenerates fixtures/e2e by running the full pipeline in record mode
// against local scripted servers. Usage: iab_fixturegen <repo_root>
// Artifacts land in a scratch directory; only the snapshots, cassettes and
// the page store are kept.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "iab/common.hpp"
#include "iab/pipeline.hpp"
#include "scenario.hpp"
#include "scripted_transports.hpp"

namespace fs = std::filesystem;
using iab::json;

namespace {

int fail(const std::string& msg) {
    std::fprintf(stderr, "fixturegen: %s\n", msg.c_str());
    return 1;
}

void serve_chat(httplib::Server& svr) {
    svr.Post("/v1/chat", [](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        iab::gateway::ChatRequest creq;
        creq.model_id = body.at("model_id").get<std::string>();
        creq.temperature = body.at("temperature").get<double>();
        creq.max_tokens = body.at("max_tokens").get<int>();
        for (const auto& m : body.at("messages"))
            creq.messages.push_back(
                {m.at("role").get<std::string>(), m.at("text").get<std::string>()});
        std::string text = iab_test::scripted_chat_text(creq);
        json out = {{"text", text},
                    {"usage",
                     {{"prompt_tokens", static_cast<long>(req.body.size()) / 4},
                      {"completion_tokens", static_cast<long>(text.size()) / 4}}}};
        res.set_content(out.dump(), "application/json");
    });
}

void serve_search(httplib::Server& svr) {
    svr.Get("/search", [](const httplib::Request& req, httplib::Response& res) {
        std::string q = req.get_param_value("q");
        json results = json::array();
        const auto& hits = iab_test::scenario::search_hits();
        auto it = hits.find(q);
        if (it != hits.end())
            for (const auto& [u, title] : it->second)
                results.push_back({{"url", u}, {"title", title}});
        res.set_content(json{{"results", results}}.dump(), "application/json");
    });
}

void serve_pages(httplib::Server& svr) {
    svr.Get(R"(/.*)", [](const httplib::Request& req, httplib::Response& res) {
        std::string u = iab_test::scenario::page_host() + req.path;
        const auto& store = iab_test::scenario::pages();
        auto it = store.find(u);
        if (it == store.end()) {
            res.status = 404;
            res.set_content("<html><body><p>Not found.</p></body></html>", "text/html");
            return;
        }
        res.status = it->second.status;
        res.set_content(it->second.body, it->second.content_type.c_str());
    });
}

struct ServerHandle {
    httplib::Server svr;
    std::thread thread;
    std::atomic<bool> failed{false};

    void start(int port) {
        thread = std::thread([this, port] {
            if (!svr.listen("127.0.0.1", port)) failed = true;
        });
    }
    void stop() {
        svr.stop();
        if (thread.joinable()) thread.join();
    }
};

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) return fail("usage: iab_fixturegen <repo_root>");
    fs::path root = fs::absolute(argv[1]);
    fs::path fixture_root = root / "fixtures" / "e2e";

    fs::remove_all(fixture_root);
    for (const auto& [name, bytes] : iab_test::scenario::gkg_files())
        iab::write_file(fixture_root / "gkg" / name, bytes);
    fs::create_directories(fixture_root / "cassettes");
    fs::create_directories(fixture_root / "pages");

    ServerHandle chat, search, pages;
    serve_chat(chat.svr);
    serve_search(search.svr);
    serve_pages(pages.svr);
    chat.start(18080);
    search.start(18081);
    pages.start(18082);

    auto ready = [](ServerHandle& h) {
        for (int i = 0; i < 200; ++i) {
            if (h.failed) return false;
            if (h.svr.is_running()) return true;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        return false;
    };
    if (!ready(chat) || !ready(search) || !ready(pages)) {
        chat.stop();
        search.stop();
        pages.stop();
        return fail("a local server failed to start (ports 18080..18082 busy?)");
    }

    int rc = 0;
    fs::path scratch = fs::temp_directory_path() / "iab_fixturegen_artifacts";
    try {
        fs::remove_all(scratch);

        iab::pipeline::PipelineConfig config =
            iab::pipeline::load_config_file(root / "config" / "pipeline.json");
        config.mode = iab::gateway::Mode::record;
        config.artifact_root = scratch;
        config.gkg_dir = fixture_root / "gkg";
        config.cassette_dir = fixture_root / "cassettes";
        config.page_store_dir = fixture_root / "pages";
        config.endpoints.chat_base = "http://127.0.0.1:18080";
        config.endpoints.search_base = "http://127.0.0.1:18081";

        iab::pipeline::run_window(config);

        // sanity-check the recorded story before the fixtures are committed
        std::string wtag = config.window.to_string();
        json seeds_doc = iab::load_json_file(scratch / "seeds" / (wtag + ".json"));
        const auto& expected = iab_test::scenario::seed_texts();
        if (seeds_doc.at("seeds").size() != expected.size())
            throw iab::PipelineError("unexpected seed count");
        for (size_t i = 0; i < expected.size(); ++i) {
            std::string got = seeds_doc.at("seeds")[i].at("candidate").at("text");
            if (got != expected[i])
                throw iab::PipelineError("seed " + std::to_string(i) + " is '" + got +
                                         "', wanted '" + expected[i] + "'");
        }

        for (size_t i = 0; i < expected.size(); ++i) {
            std::string qid = iab::pipeline::query_id_for(wtag, expected[i]);
            json comm = iab::load_json_file(scratch / "communities" / (qid + ".json"));
            size_t n = comm.at("communities").size();
            json roles = comm.at("roles");
            std::string bridge_members;
            int bridges = 0;
            for (auto it = roles.begin(); it != roles.end(); ++it) {
                if (it.value().get<std::string>() == "Bridge") {
                    ++bridges;
                    for (const auto& m : comm.at("communities").at(it.key()))
                        bridge_members += m.get<std::string>() + "; ";
                }
            }
            json packets = iab::load_json_file(scratch / "packets" / (qid + ".json"));
            std::printf("query %s: %zu communities, %d bridge (%s), %zu packets\n", qid.c_str(),
                        n, bridges, bridge_members.c_str(), packets.at("packets").size());
            if (n < 6) throw iab::PipelineError(qid + ": fewer than 6 communities");
            if (bridges < 1) throw iab::PipelineError(qid + ": no bridge community");
            if (bridge_members.find("harbor gazette") == std::string::npos)
                throw iab::PipelineError(qid + ": bridge is not the gazette theme");
            if (packets.at("packets").empty()) throw iab::PipelineError(qid + ": no packets");
        }

        auto report =
            iab::pipeline::validate_instances(scratch / "instances" / (wtag + ".jsonl"));
        std::printf("instances: %ld total, %ld passed, %ld failed\n", report.total,
                    report.passed, report.failed);
        if (report.total < 3) throw iab::PipelineError("fewer than 3 instances");
        if (report.failed != 0)
            throw iab::PipelineError("instance validation failed: " + report.first_failure);

        std::printf("fixtures written to %s\n", fixture_root.string().c_str());
    } catch (const std::exception& e) {
        rc = fail(e.what());
    }

    chat.stop();
    search.stop();
    pages.stop();
    if (rc == 0) fs::remove_all(scratch);
    return rc;
}
