#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iab/common.hpp"
#include "iab/gateway.hpp"
#include "iab/seed_miner.hpp"

namespace iab::pipeline {

// ---------------------------------------------------------------------------
// Configuration

struct ModelConfig {
    std::string extraction = "extractor-1";
    std::string cards = "writer-1";
    std::string generator = "generator-1";
    std::vector<std::string> judges = {"judge-a", "judge-b", "judge-c"};
};

struct EndpointConfig {
    std::string chat_base = "http://127.0.0.1:8080";
    std::string search_base = "http://127.0.0.1:8081";
};

struct PipelineConfig {
    DayRange window;
    int seed_count = 5;
    gateway::Mode mode = gateway::Mode::replay;

    std::filesystem::path artifact_root = "artifacts";
    std::filesystem::path gkg_dir = "gkg";
    // Both default under artifact_root but stay independent so recorded
    // fixtures can drive runs against a fresh artifact tree.
    std::filesystem::path cassette_dir;
    std::filesystem::path page_store_dir;

    seed_miner::SeedScoringConfig weights;

    int search_results = 10;
    size_t min_doc_chars = 200;
    size_t chunk_target = 1200;
    size_t chunk_overlap = 200;

    double resolution = 1.0;
    std::uint64_t rng_seed = 13;
    int max_findings = 5;

    int top_connectors = 25;
    int max_bundles = 8;
    long token_budget = 6000;
    int qa_per_packet = 6;

    ModelConfig models;
    EndpointConfig endpoints;
};

// Strict loader: unknown keys are rejected at the top level and inside the
// weights / models / endpoints objects; "window" is required. Throws
// ConfigError on any problem.
PipelineConfig load_config(const json& doc);
PipelineConfig load_config_file(const std::filesystem::path& path);

// Every field explicit, paths included.
json config_to_json(const PipelineConfig& config);

// Identity of a run. Path fields (artifact_root, gkg_dir, cassette_dir,
// page_store_dir) are excluded so relocating a run does not invalidate it.
std::string config_hash(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Run manifest

struct StageRecord {
    std::string name;
    std::string status = "pending"; // pending | done | failed
    std::map<std::string, std::string> checksums; // artifact path (relative) -> checksum
};

struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::vector<StageRecord> stages;
};

// seeds, corpus, graph, themes, packets, qa, in execution order.
const std::vector<std::string>& stage_names();

json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);

std::string file_checksum(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stages

// "q" + hash of the window tag and seed text; stable across runs.
std::string query_id_for(const std::string& window_tag, const std::string& seed_text);

// Each stage reads its inputs from the artifact tree and returns the files it
// wrote. All of them throw PipelineError / IoError on failure.
std::vector<std::filesystem::path> stage_seeds(const PipelineConfig& config);
std::vector<std::filesystem::path> stage_corpus(const PipelineConfig& config);
std::vector<std::filesystem::path> stage_graph(const PipelineConfig& config);
std::vector<std::filesystem::path> stage_themes(const PipelineConfig& config);
std::vector<std::filesystem::path> stage_packets(const PipelineConfig& config);
std::vector<std::filesystem::path> stage_qa(const PipelineConfig& config);

// Runs one named stage unconditionally, bypassing the manifest.
std::vector<std::filesystem::path> run_stage(const PipelineConfig& config,
                                             const std::string& stage);

// Runs all stages in order, skipping any stage already done under the same
// config hash whose artifacts still match their checksums. A stage failure
// marks the manifest and rethrows; a rerun resumes from that stage.
RunManifest run_window(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Instance validation

struct ValidationReport {
    long total = 0;
    long passed = 0;
    long failed = 0;
    std::string first_failure; // "line N: reason", empty when all pass
};

// Empty string when the record satisfies every released-schema invariant,
// else the first violated rule.
std::string validate_instance_record(const json& record);

ValidationReport validate_instances(const std::filesystem::path& path);

} // namespace iab::pipeline
