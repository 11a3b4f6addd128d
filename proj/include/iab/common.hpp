#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace iab {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PipelineError : std::runtime_error {
    explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Hashing

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Lowercase 16-hex-digit rendering of a 64-bit hash.
std::string hash_hex(std::uint64_t h);

// fnv1a64 over the canonical (sorted-key, compact) serialization of a value.
std::string stable_json_hash(const json& value);

// ---------------------------------------------------------------------------
// Strings

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercases and collapses all whitespace runs to single spaces.
std::string normalize_ws(std::string_view s);

int token_count(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);

// Splits on a multi-character delimiter (e.g. "<UDIV>").
std::vector<std::string> split_on(std::string_view s, std::string_view sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---------------------------------------------------------------------------
// Calendar days

// A calendar day as days since the Unix epoch.
struct Day {
    int serial = 0;

    auto operator<=>(const Day&) const = default;

    // "YYYY-MM-DD"
    std::string to_string() const;
    static std::optional<Day> parse(std::string_view iso);     // "YYYY-MM-DD"
    static std::optional<Day> parse_compact(std::string_view); // "YYYYMMDD"
};

struct DayRange {
    Day start;
    Day end; // inclusive

    bool contains(Day d) const { return start <= d && d <= end; }
    int length_days() const { return end.serial - start.serial + 1; }
    std::string to_string() const; // "YYYY-MM-DD..YYYY-MM-DD"
    static std::optional<DayRange> parse(std::string_view s);
};

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Pretty canonical JSON (2-space indent, sorted keys) with trailing newline.
std::string dump_pretty(const json& value);
// Compact canonical JSON, one line, for JSONL records.
std::string dump_line(const json& value);

json load_json_file(const std::filesystem::path& path);
std::vector<json> load_jsonl_file(const std::filesystem::path& path);

} // namespace iab
