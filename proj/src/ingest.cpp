#include "aisbay/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace aisbay {

using nlohmann::json;

bool AisMessage::has_position() const { return !std::isnan(lat) && !std::isnan(lon); }

bool operator==(const AisMessage& a, const AisMessage& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.mmsi == b.mmsi && a.t == b.t && same(a.lat, b.lat) && same(a.lon, b.lon) && a.sog == b.sog &&
           a.kind == b.kind && a.nav_status == b.nav_status && a.destination == b.destination &&
           a.ship_type == b.ship_type && a.imo == b.imo;
}

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw RecordError("missing-key", key);
    return *it;
}

double number(const json& v, const char* key) {
    if (!v.is_number()) throw RecordError("bad-type", key);
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw RecordError("out-of-range", key);
    return d;
}

std::int64_t integer(const json& v, const char* key) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw RecordError("bad-type", key);
}

void read_position(const json& j, AisMessage& m) {
    const double lat = number(require(j, "lat"), "lat");
    const double lon = number(require(j, "lon"), "lon");
    if (lat < -90.0 || lat > 90.0) throw RecordError("out-of-range", "lat");
    if (lon < -180.0 || lon > 180.0) throw RecordError("out-of-range", "lon");
    m.lat = round6(lat);
    m.lon = round6(lon);
}

}  // namespace

AisMessage parse_record(std::string_view line) {
    json j;
    try {
        j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        throw RecordError("malformed-json", e.what());
    }
    if (!j.is_object()) throw RecordError("malformed-json", "not an object");

    AisMessage m;
    m.mmsi = integer(require(j, "mmsi"), "mmsi");
    if (m.mmsi < 100000000 || m.mmsi > 999999999) throw RecordError("out-of-range", "mmsi");

    const json& t = require(j, "t");
    if (!t.is_string()) throw RecordError("bad-type", "t");
    try {
        m.t = parse_rfc3339(t.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw RecordError("bad-timestamp", e.what());
    }

    const json& kind = require(j, "kind");
    if (!kind.is_string()) throw RecordError("bad-type", "kind");
    const std::string k = kind.get<std::string>();
    if (k == "pos") {
        m.kind = ReportKind::Position;
        read_position(j, m);
        const double sog = number(require(j, "sog"), "sog");
        if (sog < 0.0) throw RecordError("out-of-range", "sog");
        m.sog = sog;
        if (auto it = j.find("status"); it != j.end() && !it->is_null()) {
            m.nav_status = static_cast<int>(integer(*it, "status"));
            if (m.nav_status < 0 || m.nav_status > 15) throw RecordError("out-of-range", "status");
        }
    } else if (k == "static") {
        m.kind = ReportKind::Static;
        if (j.contains("sog") && !j["sog"].is_null()) throw RecordError("bad-kind", "sog on static report");
        if (j.contains("lat") || j.contains("lon")) {
            read_position(j, m);
        } else {
            m.lat = m.lon = std::nan("");
        }
        if (auto it = j.find("dest"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) throw RecordError("bad-type", "dest");
            m.destination = it->get<std::string>();
        }
        if (auto it = j.find("type"); it != j.end() && !it->is_null()) {
            const auto code = integer(*it, "type");
            if (code < 0 || code > 99) throw RecordError("out-of-range", "type");
            m.ship_type = static_cast<int>(code);
        }
        if (auto it = j.find("imo"); it != j.end() && !it->is_null()) {
            m.imo = integer(*it, "imo");
            if (*m.imo <= 0) throw RecordError("out-of-range", "imo");
        }
    } else {
        throw RecordError("bad-kind", k);
    }
    return m;
}

std::string serialize_record(const AisMessage& m) {
    nlohmann::ordered_json j;
    j["mmsi"] = m.mmsi;
    j["t"] = format_rfc3339(m.t);
    if (m.has_position()) {
        j["lat"] = m.lat;
        j["lon"] = m.lon;
    }
    if (m.kind == ReportKind::Position) {
        j["sog"] = m.sog.value_or(0.0);
        j["kind"] = "pos";
        if (m.nav_status >= 0) j["status"] = m.nav_status;
    } else {
        j["kind"] = "static";
        if (!m.destination.empty()) j["dest"] = m.destination;
        if (m.ship_type) j["type"] = *m.ship_type;
        if (m.imo) j["imo"] = *m.imo;
    }
    return j.dump();
}

IngestResult parse_stream(std::istream& in, const std::optional<TimeWindow>& window) {
    IngestResult r;
    std::string line;
    auto reject = [&r](const std::string& why) {
        ++r.stats.rejected;
        ++r.stats.reasons[why];
    };
    while (std::getline(in, line)) {
        ++r.stats.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            reject("empty");
            continue;
        }
        try {
            AisMessage m = parse_record(line);
            if (window && !window->contains(m.t)) {
                reject("outside-window");
                continue;
            }
            r.messages.push_back(std::move(m));
            ++r.stats.accepted;
        } catch (const RecordError& e) {
            reject(e.reason());
        }
    }
    return r;
}

std::map<Mmsi, std::vector<AisMessage>> group_by_vessel(std::vector<AisMessage> messages) {
    std::map<Mmsi, std::vector<AisMessage>> out;
    for (auto& m : messages) out[m.mmsi].push_back(std::move(m));
    for (auto& [id, seq] : out)
        std::stable_sort(seq.begin(), seq.end(), [](const AisMessage& a, const AisMessage& b) { return a.t < b.t; });
    return out;
}

std::vector<AisMessage> assign_static_positions(const std::vector<AisMessage>& seq, std::size_t* dropped) {
    std::vector<std::size_t> pos_idx;
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (seq[i].kind == ReportKind::Position) pos_idx.push_back(i);

    std::vector<AisMessage> out;
    out.reserve(seq.size());
    std::size_t n_dropped = 0;
    for (const auto& m : seq) {
        if (m.kind == ReportKind::Position) {
            out.push_back(m);
            continue;
        }
        auto it = std::lower_bound(pos_idx.begin(), pos_idx.end(), m.t,
                                   [&seq](std::size_t i, Seconds t) { return seq[i].t < t; });
        const AisMessage* best = nullptr;
        Seconds best_dt = 0;
        if (it != pos_idx.begin()) {
            best = &seq[*std::prev(it)];
            best_dt = m.t - best->t;
        }
        if (it != pos_idx.end()) {
            const Seconds dt = seq[*it].t - m.t;
            if (!best || dt < best_dt) {
                best = &seq[*it];
                best_dt = dt;
            }
        }
        if (!best || best_dt > kStaticAssignMaxGap) {
            ++n_dropped;
            continue;
        }
        AisMessage s = m;
        s.lat = best->lat;
        s.lon = best->lon;
        out.push_back(std::move(s));
    }
    if (dropped) *dropped = n_dropped;
    return out;
}

const char* category_name(Category c) {
    switch (c) {
        case Category::Passenger: return "Passenger";
        case Category::LawMilitary: return "LawMilitary";
        case Category::Cargo: return "Cargo";
        case Category::Service: return "Service";
        case Category::Tanker: return "Tanker";
        case Category::Other: return "Other";
    }
    return "Other";
}

Category category_from_name(std::string_view s) {
    for (int i = 0; i < kCategoryCount; ++i) {
        const auto c = static_cast<Category>(i);
        if (s == category_name(c)) return c;
    }
    throw std::invalid_argument("unknown category: " + std::string(s));
}

TypeMap TypeMap::defaults() {
    TypeMap m;
    m.table.fill(Category::Other);
    auto set = [&m](int lo, int hi, Category c) {
        for (int i = lo; i <= hi; ++i) m.table[i] = c;
    };
    set(40, 49, Category::Passenger);
    set(60, 69, Category::Passenger);
    set(35, 35, Category::LawMilitary);
    set(55, 55, Category::LawMilitary);
    set(70, 79, Category::Cargo);
    set(31, 34, Category::Service);
    set(50, 54, Category::Service);
    set(58, 58, Category::Service);
    set(80, 89, Category::Tanker);
    return m;
}

TypeMap TypeMap::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("type map: expected an object");
    TypeMap m;
    m.table.fill(Category::Other);
    std::array<bool, 100> seen{};
    for (const auto& [name, ranges] : j.items()) {
        const Category c = category_from_name(name);
        if (!ranges.is_array()) throw std::invalid_argument("type map: expected array for " + name);
        for (const auto& r : ranges) {
            int lo, hi;
            if (r.is_number_integer()) {
                lo = hi = r.get<int>();
            } else if (r.is_array() && r.size() == 2) {
                lo = r[0].get<int>();
                hi = r[1].get<int>();
            } else {
                throw std::invalid_argument("type map: bad range under " + name);
            }
            if (lo < 0 || hi > 99 || lo > hi) throw std::invalid_argument("type map: code out of 0..99");
            for (int i = lo; i <= hi; ++i) {
                if (seen[i]) throw std::invalid_argument("type map: code mapped twice: " + std::to_string(i));
                seen[i] = true;
                m.table[i] = c;
            }
        }
    }
    return m;
}

Category TypeMap::lookup(int code) const {
    if (code < 0 || code > 99) return Category::Other;
    return table[code];
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

GtTable GtTable::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("gt table: empty file");
    auto header = split_csv(line);
    int c_gt = -1, c_mmsi = -1, c_imo = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        std::string h = header[i];
        std::transform(h.begin(), h.end(), h.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (h == "gt") c_gt = i;
        if (h == "mmsi") c_mmsi = i;
        if (h == "imo") c_imo = i;
    }
    if (c_gt < 0 || (c_mmsi < 0 && c_imo < 0))
        throw std::invalid_argument("gt table: header needs gt and mmsi and/or imo");
    GtTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        auto cell = [&cells](int c) { return c >= 0 && c < static_cast<int>(cells.size()) ? cells[c] : std::string(); };
        const std::string gts = cell(c_gt);
        if (gts.empty()) continue;
        double gt;
        try {
            gt = std::stod(gts);
        } catch (const std::exception&) {
            throw std::invalid_argument("gt table: bad gt on line " + std::to_string(lineno));
        }
        if (!(gt >= 0.0)) throw std::invalid_argument("gt table: negative gt on line " + std::to_string(lineno));
        if (const auto s = cell(c_imo); !s.empty()) t.by_imo[std::stoll(s)] = gt;
        if (const auto s = cell(c_mmsi); !s.empty()) t.by_mmsi[std::stoll(s)] = gt;
    }
    return t;
}

std::optional<double> GtTable::find(Mmsi mmsi, std::optional<std::int64_t> imo) const {
    if (imo) {
        if (auto it = by_imo.find(*imo); it != by_imo.end()) return it->second;
    }
    if (auto it = by_mmsi.find(mmsi); it != by_mmsi.end()) return it->second;
    return std::nullopt;
}

VesselProfile enrich(Mmsi mmsi, const std::vector<AisMessage>& static_history, const TypeMap& type_map,
                     const GtTable& gt_table) {
    VesselProfile p;
    p.mmsi = mmsi;
    std::array<int, 100> votes{};
    for (const auto& m : static_history) {
        if (m.kind != ReportKind::Static) continue;
        if (m.ship_type && *m.ship_type > 0) ++votes[*m.ship_type];
        if (m.imo) p.imo = m.imo;
    }
    int best = 0;
    for (int c = 1; c < 100; ++c)
        if (votes[c] > votes[best]) best = c;
    if (votes[best] > 0) {
        p.ship_type = best;
        p.type_known = true;
        p.category = type_map.lookup(best);
        p.fishing = best == 30;
    }
    p.gross_tonnage = gt_table.find(mmsi, p.imo);
    return p;
}

}  // namespace aisbay
