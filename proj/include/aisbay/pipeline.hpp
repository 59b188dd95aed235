#pragma once

#include "aisbay/clean.hpp"
#include "aisbay/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aisbay {

struct GridBox {
    double lat_min = 35.0, lat_max = 35.6, lon_min = 139.7, lon_max = 139.9;
    double cell_arcsec = 1.0;
};

// Every threshold carries its default; paths are resolved against base_dir.
struct RunConfig {
    std::filesystem::path base_dir = ".";
    std::optional<std::string> input;     // NDJSON; default: synth output of the run directory
    std::string geometry;                 // GeoJSON with roi / land / transit features
    std::optional<std::string> type_map;  // JSON; default built-in table
    std::optional<std::string> gt_table;  // CSV; default: synth output when present
    std::optional<std::string> segments;  // GeoJSON LineStrings; default: synth output
    TimeWindow window;
    std::string policy = "df";
    GridBox grid;
    CleanParams clean;
    double edge_exclusion_days = kDefaultEdgeExclusionDays;
    double gt_split = kDefaultGtSplit;
    double utc_offset_hours = 9.0;
    double delta_dark = 0.16;
    std::map<std::string, double> delta_aisb;  // category name or "all" -> fraction
    double grid_spacing_m = 10.0;
    double smooth_sigma = 1.5;
    double seed_threshold = 10.0;
    double support_threshold = 5.0;
    double berth_shore_m = 200.0;
    double max_drift_m = 500.0;
    double alpha = 0.05;
    double weight_cutoff = 0.02;
    std::uint64_t synth_seed = 1;
    std::string synth_scenario = "reference";  // reference | random
    std::size_t synth_vessels = 12;

    static RunConfig defaults();
    static RunConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& file);
    std::string to_json() const;
    // Throws ConfigError naming the offending key.
    void validate() const;
    std::filesystem::path resolve(const std::string& p) const;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MissingArtifact : public std::runtime_error {
public:
    explicit MissingArtifact(const std::filesystem::path& p)
        : std::runtime_error("missing prerequisite artifact: " + p.string()), path_(p) {}
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

enum class LogLevel { Debug, Info, Warn, Error };
using LogSink = std::function<void(LogLevel, const std::string&)>;

struct RunOptions {
    std::filesystem::path out = "run";
    unsigned threads = 1;
    bool from_scratch = false;
    LogSink log;
};

extern const std::vector<std::string> kStages;
bool is_stage(const std::string& name);

struct StageResult {
    std::string stage;
    std::filesystem::path manifest;
    std::map<std::string, double> counts;
};

// Runs one stage (and, with from_scratch, its prerequisites first). Throws MissingArtifact,
// ConfigError or std::runtime_error.
std::vector<StageResult> run_stage(const std::string& stage, const RunConfig& config, const RunOptions& options);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_file(const std::filesystem::path& p);
std::string hex64(std::uint64_t h);

// Recomputes every recorded hash in the run directory; returns human-readable problems (empty = valid).
std::vector<std::string> verify_run(const std::filesystem::path& out);

// Default uncertainty fractions for untracked (AIS-B) vessels per category.
std::map<std::string, double> default_delta_aisb();

}  // namespace aisbay
