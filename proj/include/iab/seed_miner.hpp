#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "iab/common.hpp"

namespace iab::seed_miner {

// One row of a GDELT GKG 1.0 daily snapshot, reduced to the fields the miner
// uses.
struct GkgRecord {
    Day date;
    std::vector<std::string> persons;
    std::vector<std::string> organizations;
    std::vector<std::string> themes;
    struct Location {
        std::string name;
        std::string country; // FIPS code
        double lat = 0.0;
        double lon = 0.0;
    };
    std::vector<Location> locations;
    long num_articles = 0;
    std::vector<std::string> source_urls;
};

struct ParseStats {
    size_t parsed = 0;
    size_t skipped = 0;
};

// GKG 1.0 daily files are tab-delimited with an 11-column layout
// (DATE, NUMARTS, COUNTS, THEMES, LOCATIONS, PERSONS, ORGANIZATIONS, TONE,
// CAMEOEVENTIDS, SOURCES, SOURCEURLS); the fixture test pins this layout.
// Accepts plain text or a single-entry ZIP archive. Malformed rows are
// counted and skipped; zero well-formed rows in a non-empty file is an error.
std::vector<GkgRecord> parse_gkg_snapshot(const std::string& raw, ParseStats* stats = nullptr);

struct SeedCandidate {
    std::string text;        // "<entity> <descriptor phrase>", <= 120 chars
    std::string lead_entity; // normalized entity, used by the diversity rule
    Day first_seen;
    Day last_seen;
    std::map<int, long> observations; // day serial -> record count
    std::set<std::string> countries;
    long article_total = 0; // summed NUMARTS across matching records
};

struct SeedFeatures {
    double attention = 0.0;   // A(q)
    double geo = 0.0;         // Geo(q)
    double freq = 0.0;        // Freq(q)
    double span_days = 0.0;   // Δt(q)
    double specificity = 0.0; // Spec(q)
    double coverage = 0.0;    // Cov(q), in [0,1]
};

struct SeedScoringConfig {
    double alpha = 0.5; // Geo
    double beta = 0.1;  // Freq
    double gamma = 0.2; // Δt
    double delta = 0.3; // Spec
    double eta = 1.0;   // Cov
};

struct ScoredSeed {
    SeedCandidate candidate;
    SeedFeatures features;
    double score = 0.0;
};

// Builds deduplicated entity+descriptor candidates over the window. The
// descriptor is the most frequent theme tag co-occurring with the entity that
// day, rendered through a small tag->phrase table.
std::vector<SeedCandidate> extract_candidates(const std::vector<GkgRecord>& records,
                                              const DayRange& window);

SeedFeatures compute_features(const SeedCandidate& candidate, const DayRange& window);

// score = log(1+A) + alpha*Geo + beta*Freq + gamma*Δt + delta*Spec - eta*Cov
double score_seed(const SeedFeatures& features, const SeedScoringConfig& config);

// Top-n by (score desc, text asc), keeping at most one seed per normalized
// lead entity.
std::vector<ScoredSeed> select_seeds(std::vector<ScoredSeed> scored, int n);

// Human-readable phrase for a GKG theme tag ("ENV_OCEANS" -> "ocean energy
// development" via the table, otherwise a lowercased cleanup of the tag).
std::string theme_phrase(const std::string& tag);

json scored_seed_to_json(const ScoredSeed& seed);
ScoredSeed scored_seed_from_json(const json& doc);

} // namespace iab::seed_miner
