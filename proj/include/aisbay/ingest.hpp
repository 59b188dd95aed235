#pragma once

#include "aisbay/message.hpp"

#include <array>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aisbay {

class RecordError : public std::runtime_error {
public:
    RecordError(std::string reason, const std::string& detail)
        : std::runtime_error(reason + ": " + detail), reason_(std::move(reason)) {}
    const std::string& reason() const { return reason_; }

private:
    std::string reason_;
};

// One NDJSON line -> validated message. Throws RecordError with a short reason code
// (malformed-json, missing-key, bad-type, out-of-range, bad-timestamp, bad-kind).
AisMessage parse_record(std::string_view line);
std::string serialize_record(const AisMessage& m);

struct IngestStats {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::map<std::string, std::size_t> reasons;
};

struct IngestResult {
    std::vector<AisMessage> messages;
    IngestStats stats;
};

// Blank lines count as rejected ("empty"). Records outside `window` are rejected as "outside-window".
IngestResult parse_stream(std::istream& in, const std::optional<TimeWindow>& window = std::nullopt);

// Groups by MMSI; each sequence is stably sorted by timestamp.
std::map<Mmsi, std::vector<AisMessage>> group_by_vessel(std::vector<AisMessage> messages);

inline constexpr Seconds kStaticAssignMaxGap = 4 * kHour;

// Copies the nearest-in-time position report's coordinates onto each static report.
// Static reports with no position report within 4 h are dropped; `dropped` receives the count.
std::vector<AisMessage> assign_static_positions(const std::vector<AisMessage>& seq,
                                                std::size_t* dropped = nullptr);

enum class Category { Passenger, LawMilitary, Cargo, Service, Tanker, Other };
inline constexpr int kCategoryCount = 6;
const char* category_name(Category c);
Category category_from_name(std::string_view s);

struct TypeMap {
    std::array<Category, 100> table{};
    static TypeMap defaults();
    // JSON object: {"Tanker": [[80, 89]], "Cargo": [70, [71, 79]], ...}; unlisted codes -> Other.
    static TypeMap from_json_text(const std::string& text);
    Category lookup(int code) const;
};

struct GtTable {
    std::map<std::int64_t, double> by_imo;
    std::map<Mmsi, double> by_mmsi;
    // CSV with a header naming columns gt and at least one of mmsi, imo.
    static GtTable from_csv(std::istream& in);
    std::optional<double> find(Mmsi mmsi, std::optional<std::int64_t> imo) const;
};

struct VesselProfile {
    Mmsi mmsi = 0;
    std::optional<std::int64_t> imo;
    Category category = Category::Other;
    bool type_known = false;
    bool fishing = false;
    std::optional<int> ship_type;
    std::optional<double> gross_tonnage;
};

VesselProfile enrich(Mmsi mmsi, const std::vector<AisMessage>& static_history, const TypeMap& type_map,
                     const GtTable& gt_table);

}  // namespace aisbay
