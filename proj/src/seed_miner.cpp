#include "iab/seed_miner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iab/zip_archive.hpp"

namespace iab::seed_miner {

namespace {

std::vector<std::string> split_semicolon_list(const std::string& field) {
    std::vector<std::string> out;
    for (auto& part : split(field, ';')) {
        std::string p = trim(part);
        if (!p.empty()) out.push_back(std::move(p));
    }
    return out;
}

// LOCATIONS blocks are #-delimited:
// type#fullname#countrycode#adm1code#lat#long#featureid
std::vector<GkgRecord::Location> parse_locations(const std::string& field) {
    std::vector<GkgRecord::Location> out;
    for (auto& block : split(field, ';')) {
        if (trim(block).empty()) continue;
        auto parts = split(block, '#');
        if (parts.size() < 3) continue;
        GkgRecord::Location loc;
        loc.name = parts[1];
        loc.country = parts[2];
        if (parts.size() >= 6) {
            try {
                if (!parts[4].empty()) loc.lat = std::stod(parts[4]);
                if (!parts[5].empty()) loc.lon = std::stod(parts[5]);
            } catch (const std::exception&) {
                // coordinates are optional; keep the named location
            }
        }
        out.push_back(std::move(loc));
    }
    return out;
}

constexpr int kGkgColumns = 11;

enum GkgColumn {
    kColDate = 0,
    kColNumArts = 1,
    kColCounts = 2,
    kColThemes = 3,
    kColLocations = 4,
    kColPersons = 5,
    kColOrganizations = 6,
    kColTone = 7,
    kColCameoEventIds = 8,
    kColSources = 9,
    kColSourceUrls = 10,
};

} // namespace

std::vector<GkgRecord> parse_gkg_snapshot(const std::string& raw, ParseStats* stats) {
    std::string text;
    if (looks_like_zip(raw)) {
        auto unpacked = unzip_first_entry(raw);
        if (!unpacked) throw IoError("unreadable GKG snapshot: bad zip container");
        text = std::move(*unpacked);
    } else {
        text = raw;
    }

    std::vector<GkgRecord> records;
    ParseStats local;
    std::istringstream in(text);
    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first_line) {
            first_line = false;
            if (line.rfind("DATE\t", 0) == 0) continue; // column header row
        }

        auto cols = split(line, '\t');
        if (static_cast<int>(cols.size()) != kGkgColumns) {
            ++local.skipped;
            continue;
        }
        auto date = Day::parse_compact(cols[kColDate]);
        if (!date) {
            ++local.skipped;
            continue;
        }
        long num_articles = 0;
        try {
            num_articles = std::stol(cols[kColNumArts]);
        } catch (const std::exception&) {
            ++local.skipped;
            continue;
        }
        if (num_articles < 0) {
            ++local.skipped;
            continue;
        }

        GkgRecord rec;
        rec.date = *date;
        rec.num_articles = num_articles;
        rec.themes = split_semicolon_list(cols[kColThemes]);
        rec.locations = parse_locations(cols[kColLocations]);
        rec.persons = split_semicolon_list(cols[kColPersons]);
        rec.organizations = split_semicolon_list(cols[kColOrganizations]);
        for (auto& url : split_on(cols[kColSourceUrls], "<UDIV>")) {
            std::string u = trim(url);
            if (!u.empty()) rec.source_urls.push_back(std::move(u));
        }
        records.push_back(std::move(rec));
        ++local.parsed;
    }
    if (stats) *stats = local;
    if (local.parsed == 0 && local.skipped > 0)
        throw PipelineError("bad GKG snapshot: no well-formed rows");
    return records;
}

std::string theme_phrase(const std::string& tag) {
    static const std::map<std::string, std::string> table = {
        {"ENV_OCEANS", "ocean energy development"},
        {"ENV_CLIMATECHANGE", "climate policy debate"},
        {"ECON_TRADE", "trade dispute"},
        {"ECON_BANKRUPTCY", "financial collapse"},
        {"ECON_STOCKMARKET", "market turmoil"},
        {"PROTEST", "public protest"},
        {"LEGISLATION", "regulatory ruling"},
        {"ELECTION", "election contest"},
        {"ARREST", "arrest and investigation"},
        {"TRIAL", "court proceedings"},
        {"STRIKE", "labor strike"},
        {"CORRUPTION", "corruption inquiry"},
        {"SANCTIONS", "sanctions standoff"},
        {"REFUGEES", "displacement crisis"},
        {"NATURAL_DISASTER", "disaster response"},
        {"ENERGY", "energy supply dispute"},
        {"CYBER_ATTACK", "cyberattack fallout"},
        {"EPIDEMIC", "health emergency"},
    };
    auto it = table.find(tag);
    if (it != table.end()) return it->second;
    std::string out = to_lower(tag);
    for (char& c : out)
        if (c == '_') c = ' ';
    return out;
}

std::vector<SeedCandidate> extract_candidates(const std::vector<GkgRecord>& records,
                                              const DayRange& window) {
    if (window.length_days() <= 0) throw PipelineError("empty candidate window");

    // Per day, per entity: co-occurring theme counts, record count, metadata.
    struct DayEntity {
        std::map<std::string, long> theme_counts;
        long record_count = 0;
        long article_total = 0;
        std::set<std::string> countries;
    };
    std::map<int, std::map<std::string, DayEntity>> by_day;

    for (const auto& rec : records) {
        if (!window.contains(rec.date)) continue;
        std::vector<std::string> entities = rec.persons;
        entities.insert(entities.end(), rec.organizations.begin(), rec.organizations.end());
        std::sort(entities.begin(), entities.end());
        entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
        for (const auto& entity : entities) {
            DayEntity& slot = by_day[rec.date.serial][entity];
            slot.record_count += 1;
            slot.article_total += rec.num_articles;
            for (const auto& theme : rec.themes) slot.theme_counts[theme] += 1;
            for (const auto& loc : rec.locations)
                if (!loc.country.empty()) slot.countries.insert(loc.country);
        }
    }

    std::map<std::string, SeedCandidate> by_norm_text;
    for (const auto& [day_serial, entities] : by_day) {
        for (const auto& [entity, slot] : entities) {
            if (slot.theme_counts.empty()) continue; // no event descriptor for this entity today
            // highest count wins; std::map iteration makes ties resolve to the
            // lexicographically smaller tag
            std::string descriptor;
            long best = -1;
            for (const auto& [tag, count] : slot.theme_counts) {
                if (count > best) {
                    best = count;
                    descriptor = tag;
                }
            }
            std::string text = entity + " " + theme_phrase(descriptor);
            if (text.size() > 120) text.resize(120);
            std::string norm = normalize_ws(text);
            if (norm.empty()) continue;

            Day d{day_serial};
            auto [it, inserted] = by_norm_text.try_emplace(norm);
            SeedCandidate& cand = it->second;
            if (inserted) {
                cand.text = text;
                cand.lead_entity = normalize_ws(entity);
                cand.first_seen = d;
                cand.last_seen = d;
            } else {
                cand.first_seen = std::min(cand.first_seen, d);
                cand.last_seen = std::max(cand.last_seen, d);
            }
            cand.observations[day_serial] += slot.record_count;
            cand.article_total += slot.article_total;
            cand.countries.insert(slot.countries.begin(), slot.countries.end());
        }
    }

    std::vector<SeedCandidate> out;
    out.reserve(by_norm_text.size());
    for (auto& [norm, cand] : by_norm_text) out.push_back(std::move(cand));
    return out;
}

SeedFeatures compute_features(const SeedCandidate& candidate, const DayRange& window) {
    if (window.length_days() <= 0) throw PipelineError("feature window has zero length");
    if (candidate.observations.empty())
        throw PipelineError("candidate has no observations in window");

    long freq = 0;
    for (const auto& [day, count] : candidate.observations) freq += count;

    SeedFeatures f;
    f.attention = candidate.article_total > 0 ? static_cast<double>(candidate.article_total)
                                              : static_cast<double>(freq);
    f.geo = static_cast<double>(candidate.countries.size());
    f.freq = static_cast<double>(freq);
    f.span_days = static_cast<double>(candidate.last_seen.serial - candidate.first_seen.serial);
    f.specificity =
        std::max(0.0, std::min(3.0, static_cast<double>(token_count(candidate.text) - 2)));
    f.coverage = static_cast<double>(candidate.observations.size()) /
                 static_cast<double>(window.length_days());
    return f;
}

double score_seed(const SeedFeatures& f, const SeedScoringConfig& c) {
    for (double v : {f.attention, f.geo, f.freq, f.span_days, f.specificity, f.coverage}) {
        if (!std::isfinite(v)) throw PipelineError("non-finite seed feature");
    }
    return std::log1p(f.attention) + c.alpha * f.geo + c.beta * f.freq + c.gamma * f.span_days +
           c.delta * f.specificity - c.eta * f.coverage;
}

std::vector<ScoredSeed> select_seeds(std::vector<ScoredSeed> scored, int n) {
    if (n < 1) throw PipelineError("seed selection requires n >= 1");
    std::sort(scored.begin(), scored.end(), [](const ScoredSeed& a, const ScoredSeed& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.candidate.text < b.candidate.text;
    });
    std::vector<ScoredSeed> out;
    std::set<std::string> seen_entities;
    for (auto& seed : scored) {
        if (static_cast<int>(out.size()) >= n) break;
        if (!seen_entities.insert(seed.candidate.lead_entity).second) continue;
        out.push_back(std::move(seed));
    }
    return out;
}

json scored_seed_to_json(const ScoredSeed& seed) {
    json obs = json::object();
    for (const auto& [day, count] : seed.candidate.observations)
        obs[Day{day}.to_string()] = count;
    return json{
        {"candidate",
         {{"text", seed.candidate.text},
          {"lead_entity", seed.candidate.lead_entity},
          {"first_seen", seed.candidate.first_seen.to_string()},
          {"last_seen", seed.candidate.last_seen.to_string()},
          {"observations", std::move(obs)},
          {"countries", json(seed.candidate.countries)},
          {"article_total", seed.candidate.article_total}}},
        {"features",
         {{"attention", seed.features.attention},
          {"geo", seed.features.geo},
          {"freq", seed.features.freq},
          {"span_days", seed.features.span_days},
          {"specificity", seed.features.specificity},
          {"coverage", seed.features.coverage}}},
        {"score", seed.score}};
}

ScoredSeed scored_seed_from_json(const json& doc) {
    ScoredSeed seed;
    const json& cand = doc.at("candidate");
    seed.candidate.text = cand.at("text").get<std::string>();
    seed.candidate.lead_entity = cand.at("lead_entity").get<std::string>();
    seed.candidate.first_seen = *Day::parse(cand.at("first_seen").get<std::string>());
    seed.candidate.last_seen = *Day::parse(cand.at("last_seen").get<std::string>());
    for (auto& [key, value] : cand.at("observations").items())
        seed.candidate.observations[Day::parse(key)->serial] = value.get<long>();
    for (const auto& c : cand.at("countries")) seed.candidate.countries.insert(c.get<std::string>());
    seed.candidate.article_total = cand.at("article_total").get<long>();
    const json& feat = doc.at("features");
    seed.features.attention = feat.at("attention").get<double>();
    seed.features.geo = feat.at("geo").get<double>();
    seed.features.freq = feat.at("freq").get<double>();
    seed.features.span_days = feat.at("span_days").get<double>();
    seed.features.specificity = feat.at("specificity").get<double>();
    seed.features.coverage = feat.at("coverage").get<double>();
    seed.score = doc.at("score").get<double>();
    return seed;
}

} // namespace iab::seed_miner
