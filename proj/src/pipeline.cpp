#include "aisbay/pipeline.hpp"

#include "aisbay/areas.hpp"
#include "aisbay/classify.hpp"
#include "aisbay/georecv.hpp"
#include "aisbay/gridberth.hpp"
#include "aisbay/ingest.hpp"
#include "aisbay/parallel.hpp"
#include "aisbay/synth.hpp"
#include "aisbay/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace aisbay {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const std::vector<std::string> kStages = {"synth", "ingest",  "clean", "classify",        "tracks",
                                          "metrics", "grid", "berths", "locate-receivers"};

bool is_stage(const std::string& name) { return std::find(kStages.begin(), kStages.end(), name) != kStages.end(); }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingArtifact(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

std::string fnv1a64_file(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

std::map<std::string, double> default_delta_aisb() {
    return {{"all", 0.12},    {"Passenger", 0.0}, {"LawMilitary", 0.0}, {"Cargo", 0.05},
            {"Service", 0.20}, {"Tanker", 0.07},   {"Other", 0.37}};
}

// ---------------------------------------------------------------------------------------------
// configuration

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.geometry = "reference_geometry.geojson";
    c.window.start = parse_rfc3339("2024-04-01T00:00:00Z");
    c.window.end = c.window.start + 14 * kDay;
    c.delta_aisb = default_delta_aisb();
    return c;
}

namespace {

template <class T>
void take(const json& obj, const char* key, T& dst, std::set<std::string>& seen) {
    seen.insert(key);
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& seen, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!seen.count(it.key())) throw ConfigError("config: unknown key '" + where + it.key() + "'");
}

const json& section(const json& j, const char* key, std::set<std::string>& seen) {
    static const json empty = json::object();
    seen.insert(key);
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string("config: '") + key + "' must be an object");
    return j.at(key);
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig c = defaults();
    c.base_dir = base_dir;
    std::set<std::string> seen;
    auto opt_string = [&](const char* key, std::optional<std::string>& dst) {
        seen.insert(key);
        if (j.contains(key) && !j.at(key).is_null()) {
            if (!j.at(key).is_string()) throw ConfigError(std::string("config: '") + key + "' must be a string");
            dst = j.at(key).get<std::string>();
        }
    };
    opt_string("input", c.input);
    opt_string("type_map", c.type_map);
    opt_string("gt_table", c.gt_table);
    opt_string("segments", c.segments);
    take(j, "geometry", c.geometry, seen);
    take(j, "policy", c.policy, seen);
    {
        const json& w = section(j, "window", seen);
        std::set<std::string> s2;
        std::string a = format_rfc3339(c.window.start), b = format_rfc3339(c.window.end);
        take(w, "start", a, s2);
        take(w, "end", b, s2);
        reject_unknown(w, s2, "window.");
        try {
            c.window.start = parse_rfc3339(a);
            c.window.end = parse_rfc3339(b);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: window: ") + e.what());
        }
    }
    {
        const json& g = section(j, "grid", seen);
        std::set<std::string> s2;
        take(g, "lat_min", c.grid.lat_min, s2);
        take(g, "lat_max", c.grid.lat_max, s2);
        take(g, "lon_min", c.grid.lon_min, s2);
        take(g, "lon_max", c.grid.lon_max, s2);
        take(g, "cell_arcsec", c.grid.cell_arcsec, s2);
        reject_unknown(g, s2, "grid.");
    }
    {
        const json& k = section(j, "clean", seen);
        std::set<std::string> s2;
        take(k, "static_box_m", c.clean.static_box_m, s2);
        take(k, "stationary_speed_kn", c.clean.stationary_speed_kn, s2);
        take(k, "max_gap_s", c.clean.max_gap_s, s2);
        take(k, "max_jump_m", c.clean.max_jump_m, s2);
        take(k, "max_speed_kn", c.clean.max_speed_kn, s2);
        take(k, "max_accel", c.clean.max_accel, s2);
        take(k, "merge_gap_s", c.clean.merge_gap_s, s2);
        reject_unknown(k, s2, "clean.");
    }
    {
        const json& m = section(j, "metrics", seen);
        std::set<std::string> s2;
        take(m, "edge_exclusion_days", c.edge_exclusion_days, s2);
        take(m, "gt_split", c.gt_split, s2);
        take(m, "utc_offset_hours", c.utc_offset_hours, s2);
        take(m, "delta_dark", c.delta_dark, s2);
        take(m, "delta_aisb", c.delta_aisb, s2);
        reject_unknown(m, s2, "metrics.");
    }
    {
        const json& r = section(j, "raster", seen);
        std::set<std::string> s2;
        take(r, "spacing_m", c.grid_spacing_m, s2);
        take(r, "smooth_sigma", c.smooth_sigma, s2);
        take(r, "seed_threshold", c.seed_threshold, s2);
        take(r, "support_threshold", c.support_threshold, s2);
        take(r, "berth_shore_m", c.berth_shore_m, s2);
        take(r, "max_drift_m", c.max_drift_m, s2);
        reject_unknown(r, s2, "raster.");
    }
    {
        const json& r = section(j, "receivers", seen);
        std::set<std::string> s2;
        take(r, "alpha", c.alpha, s2);
        take(r, "weight_cutoff", c.weight_cutoff, s2);
        reject_unknown(r, s2, "receivers.");
    }
    {
        const json& s = section(j, "synth", seen);
        std::set<std::string> s2;
        take(s, "seed", c.synth_seed, s2);
        take(s, "scenario", c.synth_scenario, s2);
        take(s, "vessels", c.synth_vessels, s2);
        reject_unknown(s, s2, "synth.");
    }
    reject_unknown(j, seen, "");
    return c;
}

RunConfig RunConfig::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), fs::absolute(file).parent_path());
}

std::string RunConfig::to_json() const {
    ojson j;
    auto opt = [](const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); };
    j["input"] = opt(input);
    j["geometry"] = geometry;
    j["type_map"] = opt(type_map);
    j["gt_table"] = opt(gt_table);
    j["segments"] = opt(segments);
    j["window"] = {{"start", format_rfc3339(window.start)}, {"end", format_rfc3339(window.end)}};
    j["policy"] = policy;
    j["grid"] = {{"lat_min", grid.lat_min},
                 {"lat_max", grid.lat_max},
                 {"lon_min", grid.lon_min},
                 {"lon_max", grid.lon_max},
                 {"cell_arcsec", grid.cell_arcsec}};
    j["clean"] = {{"static_box_m", clean.static_box_m},     {"stationary_speed_kn", clean.stationary_speed_kn},
                  {"max_gap_s", clean.max_gap_s},           {"max_jump_m", clean.max_jump_m},
                  {"max_speed_kn", clean.max_speed_kn},     {"max_accel", clean.max_accel},
                  {"merge_gap_s", clean.merge_gap_s}};
    ojson aisb = ojson::object();
    for (const auto& [k, v] : delta_aisb) aisb[k] = v;
    j["metrics"] = {{"edge_exclusion_days", edge_exclusion_days},
                    {"gt_split", gt_split},
                    {"utc_offset_hours", utc_offset_hours},
                    {"delta_dark", delta_dark},
                    {"delta_aisb", aisb}};
    j["raster"] = {{"spacing_m", grid_spacing_m},       {"smooth_sigma", smooth_sigma},
                   {"seed_threshold", seed_threshold},  {"support_threshold", support_threshold},
                   {"berth_shore_m", berth_shore_m},    {"max_drift_m", max_drift_m}};
    j["receivers"] = {{"alpha", alpha}, {"weight_cutoff", weight_cutoff}};
    j["synth"] = {{"seed", synth_seed}, {"scenario", synth_scenario}, {"vessels", synth_vessels}};
    return j.dump(2) + "\n";
}

fs::path RunConfig::resolve(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : base_dir / q;
}

void RunConfig::validate() const {
    auto positive = [](double v, const char* key) {
        if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string("config: '") + key + "' must be positive");
    };
    auto fraction = [](double v, const std::string& key) {
        if (!(v >= 0 && v < 1)) throw ConfigError("config: '" + key + "' must be a fraction in [0, 1)");
    };
    if (!(window.end > window.start)) throw ConfigError("config: window end must follow its start");
    if (2.0 * edge_exclusion_days * kDay >= window.duration())
        throw ConfigError("config: 'metrics.edge_exclusion_days' leaves no averaging span");
    if (edge_exclusion_days < 0) throw ConfigError("config: 'metrics.edge_exclusion_days' must be non-negative");
    positive(clean.static_box_m, "clean.static_box_m");
    positive(clean.stationary_speed_kn, "clean.stationary_speed_kn");
    positive(static_cast<double>(clean.max_gap_s), "clean.max_gap_s");
    positive(clean.max_jump_m, "clean.max_jump_m");
    positive(clean.max_speed_kn, "clean.max_speed_kn");
    positive(clean.max_accel, "clean.max_accel");
    if (clean.merge_gap_s < 0) throw ConfigError("config: 'clean.merge_gap_s' must be non-negative");
    positive(gt_split, "metrics.gt_split");
    if (std::abs(utc_offset_hours) > 14) throw ConfigError("config: 'metrics.utc_offset_hours' out of range");
    fraction(delta_dark, "metrics.delta_dark");
    for (const auto& [k, v] : delta_aisb) {
        if (k != "all") {
            try {
                category_from_name(k);
            } catch (const std::exception&) {
                throw ConfigError("config: unknown category '" + k + "' in metrics.delta_aisb");
            }
        }
        fraction(v, "metrics.delta_aisb." + k);
    }
    positive(grid_spacing_m, "raster.spacing_m");
    if (smooth_sigma < 0) throw ConfigError("config: 'raster.smooth_sigma' must be non-negative");
    positive(seed_threshold, "raster.seed_threshold");
    positive(support_threshold, "raster.support_threshold");
    if (support_threshold > seed_threshold) throw ConfigError("config: support threshold exceeds seed threshold");
    positive(berth_shore_m, "raster.berth_shore_m");
    positive(max_drift_m, "raster.max_drift_m");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("config: 'receivers.alpha' must lie in (0, 1)");
    fraction(weight_cutoff, "receivers.weight_cutoff");
    if (!(grid.lat_max > grid.lat_min) || !(grid.lon_max > grid.lon_min) || grid.lat_min < -90 || grid.lat_max > 90)
        throw ConfigError("config: grid bounding box is empty or invalid");
    positive(grid.cell_arcsec, "grid.cell_arcsec");
    if ((grid.lat_max - grid.lat_min) * (grid.lon_max - grid.lon_min) * 3600.0 * 3600.0 /
            (grid.cell_arcsec * grid.cell_arcsec) > 5e7)
        throw ConfigError("config: grid has more than 5e7 cells");
    if (synth_scenario != "reference" && synth_scenario != "random")
        throw ConfigError("config: 'synth.scenario' must be reference or random");
    if (synth_vessels == 0) throw ConfigError("config: 'synth.vessels' must be positive");
    try {
        AreaPolicy::parse(policy);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: policy: ") + e.what());
    }
    if (geometry.empty()) throw ConfigError("config: 'geometry' is required");
    try {
        load_geometry_geojson(read_file(resolve(geometry)));
    } catch (const MissingArtifact&) {
        throw ConfigError("config: geometry file not found: " + resolve(geometry).string());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: geometry: ") + e.what());
    }
    if (type_map) {
        try {
            TypeMap::from_json_text(read_file(resolve(*type_map)));
        } catch (const MissingArtifact&) {
            throw ConfigError("config: type map not found: " + resolve(*type_map).string());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: type map: ") + e.what());
        }
    }
    for (const auto* p : {&input, &gt_table, &segments})
        if (*p && !fs::exists(resolve(**p))) throw ConfigError("config: file not found: " + resolve(**p).string());
}

// ---------------------------------------------------------------------------------------------
// stage plumbing

namespace {

struct Ctx {
    const RunConfig& cfg;
    const RunOptions& opt;
    fs::path out;
    std::optional<Geometry> geo_cache;

    const Geometry& geometry() {
        if (!geo_cache) geo_cache = load_geometry_geojson(read_file(cfg.resolve(cfg.geometry)));
        return *geo_cache;
    }
    void log(LogLevel l, const std::string& m) const {
        if (opt.log) opt.log(l, m);
    }
    fs::path at(const std::string& rel) const { return out / rel; }
    fs::path need(const std::string& rel) const {
        const fs::path p = out / rel;
        if (!fs::exists(p)) throw MissingArtifact(p);
        return p;
    }
};

std::string display_path(const Ctx& c, const fs::path& p) {
    const fs::path rel = p.lexically_relative(c.out);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    const fs::path rel_cfg = p.lexically_relative(c.cfg.base_dir);
    if (!rel_cfg.empty() && *rel_cfg.begin() != "..") return "config:" + rel_cfg.generic_string();
    return p.filename().generic_string();
}

std::string config_hash(const RunConfig& c) {
    // run-independent fields only; base_dir and thread count never enter
    return hex64(fnv1a64(c.to_json()));
}

StageResult write_manifest(Ctx& c, const std::string& stage, const std::vector<fs::path>& inputs,
                           const std::vector<fs::path>& outputs, const std::map<std::string, double>& counts) {
    ojson m;
    m["stage"] = stage;
    m["config_hash"] = config_hash(c.cfg);
    ojson in = ojson::object(), outj = ojson::object(), cj = ojson::object();
    for (const auto& p : inputs) in[display_path(c, p)] = fnv1a64_file(p);
    for (const auto& p : outputs) outj[display_path(c, p)] = fnv1a64_file(p);
    for (const auto& [k, v] : counts) cj[k] = v;
    m["inputs"] = in;
    m["outputs"] = outj;
    m["counts"] = cj;
    const fs::path mp = c.at(stage + "/manifest.json");
    write_file(mp, m.dump(2) + "\n");

    const fs::path top = c.at("manifest.json");
    json t = json::object();
    if (fs::exists(top)) {
        try {
            t = json::parse(read_file(top));
        } catch (const json::exception&) {
            t = json::object();
        }
    }
    t["stages"][stage] = fnv1a64_file(mp);
    write_file(top, t.dump(2) + "\n");
    c.log(LogLevel::Info, stage + ": wrote " + std::to_string(outputs.size()) + " artifacts");
    return {stage, mp, counts};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// --- serialisation of intermediate artifacts ---

std::vector<AisMessage> read_messages(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingArtifact(p);
    IngestResult r = parse_stream(in);
    if (r.stats.rejected) throw std::runtime_error(p.string() + ": corrupt intermediate artifact");
    return r.messages;
}

ojson leg_json(const Leg& l) {
    ojson j;
    j["mmsi"] = l.mmsi;
    j["v_entry"] = l.v_entry;
    j["v_exit"] = l.v_exit;
    ojson ms = ojson::array();
    for (const auto& m : l.messages) ms.push_back(ojson::parse(serialize_record(m)));
    j["messages"] = ms;
    return j;
}

Leg leg_from_json(const json& j) {
    Leg l;
    l.mmsi = j.at("mmsi").get<Mmsi>();
    l.v_entry = j.at("v_entry").get<double>();
    l.v_exit = j.at("v_exit").get<double>();
    for (const auto& m : j.at("messages")) l.messages.push_back(parse_record(m.dump()));
    return l;
}

struct VesselInfo {
    VesselProfile profile;
    bool included = false;
    RemovalCounts removed{};
    std::size_t input_messages = 0;
};

struct CleanData {
    std::map<Mmsi, VesselTimeline> timelines;
    std::map<Mmsi, VesselInfo> info;
};

CleanData read_clean(const Ctx& c) {
    CleanData d;
    {
        std::ifstream in(c.need("clean/vessels.ndjson"));
        std::string line;
        while (std::getline(in, line)) {
            const json j = json::parse(line);
            VesselInfo v;
            v.profile.mmsi = j.at("mmsi").get<Mmsi>();
            v.profile.category = category_from_name(j.at("category").get<std::string>());
            v.profile.type_known = j.at("type_known").get<bool>();
            v.profile.fishing = j.at("fishing").get<bool>();
            if (!j.at("ship_type").is_null()) v.profile.ship_type = j.at("ship_type").get<int>();
            if (!j.at("imo").is_null()) v.profile.imo = j.at("imo").get<std::int64_t>();
            if (!j.at("gt").is_null()) v.profile.gross_tonnage = j.at("gt").get<double>();
            v.included = j.at("included").get<bool>();
            v.input_messages = j.at("input_messages").get<std::size_t>();
            const auto& rm = j.at("removed");
            for (int r = 0; r < kRemovalReasonCount; ++r)
                v.removed[r] = rm.at(removal_reason_name(static_cast<RemovalReason>(r))).get<std::size_t>();
            VesselTimeline tl;
            tl.mmsi = v.profile.mmsi;
            tl.input_messages = v.input_messages;
            tl.removed = v.removed;
            d.timelines[tl.mmsi] = tl;
            d.info[tl.mmsi] = v;
        }
    }
    {
        std::ifstream in(c.need("clean/legs.ndjson"));
        std::string line;
        while (std::getline(in, line)) {
            Leg l = leg_from_json(json::parse(line));
            d.timelines.at(l.mmsi).legs.push_back(std::move(l));
        }
    }
    {
        std::ifstream in(c.need("clean/stationary.ndjson"));
        std::string line;
        while (std::getline(in, line)) {
            const json j = json::parse(line);
            StationaryPeriod s;
            s.mmsi = j.at("mmsi").get<Mmsi>();
            s.start = j.at("start").get<Seconds>();
            s.end = j.at("end").get<Seconds>();
            s.anchor = {j.at("lat").get<double>(), j.at("lon").get<double>()};
            s.drift_extent = j.at("drift_m").get<double>();
            s.message_count = j.at("messages").get<std::size_t>();
            d.timelines.at(s.mmsi).stationary.push_back(s);
        }
    }
    return d;
}

ojson gap_json(Mmsi mmsi, const GapClassification& g) {
    ojson j;
    j["mmsi"] = mmsi;
    j["start"] = g.start;
    j["end"] = g.end;
    j["prev_area"] = g.prev_area ? ojson(*g.prev_area) : ojson(nullptr);
    j["next_area"] = g.next_area ? ojson(*g.next_area) : ojson(nullptr);
    j["messages"] = g.message_count;
    j["verdict"] = verdict_name(g.verdict);
    j["threshold_h"] = std::isinf(g.threshold_hours) ? ojson(nullptr) : ojson(g.threshold_hours);
    j["opens_window"] = g.opens_window;
    j["closes_window"] = g.closes_window;
    return j;
}

GapClassification gap_from_json(const json& j) {
    GapClassification g;
    g.start = j.at("start").get<Seconds>();
    g.end = j.at("end").get<Seconds>();
    if (!j.at("prev_area").is_null()) g.prev_area = j.at("prev_area").get<int>();
    if (!j.at("next_area").is_null()) g.next_area = j.at("next_area").get<int>();
    g.message_count = j.at("messages").get<std::size_t>();
    g.verdict = j.at("verdict").get<std::string>() == "absent" ? Verdict::Absent : Verdict::Moored;
    g.threshold_hours = j.at("threshold_h").is_null() ? std::numeric_limits<double>::infinity() : j.at("threshold_h").get<double>();
    g.opens_window = j.at("opens_window").get<bool>();
    g.closes_window = j.at("closes_window").get<bool>();
    return g;
}

std::map<Mmsi, std::vector<GapClassification>> read_gaps(const Ctx& c) {
    std::map<Mmsi, std::vector<GapClassification>> out;
    std::ifstream in(c.need("classify/gaps.ndjson"));
    std::string line;
    while (std::getline(in, line)) {
        const json j = json::parse(line);
        out[j.at("mmsi").get<Mmsi>()].push_back(gap_from_json(j));
    }
    return out;
}

std::map<Mmsi, std::vector<Seconds>> evidence_by_vessel(const std::vector<AisMessage>& messages, const Geometry& g) {
    std::map<Mmsi, std::vector<Seconds>> ev;
    for (auto& [mmsi, seq] : group_by_vessel(messages)) ev[mmsi] = gap_evidence_times(seq, g);
    return ev;
}

std::vector<GapClassification> classify_one(const VesselTimeline& tl, const std::map<Mmsi, std::vector<Seconds>>& ev,
                                            const Geometry& g, const AreaPolicy& policy, const TimeWindow& w) {
    static const std::vector<Seconds> none;
    auto it = ev.find(tl.mmsi);
    return classify_timeline(tl, it == ev.end() ? none : it->second, g, policy, w);
}

// --- stages ---

StageResult stage_synth(Ctx& c) {
    Scenario sc = c.cfg.synth_scenario == "random" ? random_scenario(c.cfg.synth_seed, c.cfg.synth_vessels)
                                                   : reference_scenario(c.cfg.synth_seed);
    const SynthOutput so = generate(sc);
    std::ostringstream ms;
    write_ndjson(ms, so.messages);
    std::ostringstream gt;
    write_gt_csv(gt, sc);
    Rng rng(mix_seed(c.cfg.synth_seed, 0x5AD0));
    std::vector<ShadowWedge> wedges;
    for (int i = 0; i < 190; ++i) wedges.push_back({rng.uniform(90.0, 270.0), 0.5, 3000.0});
    auto segs = generate_shadow_segments(sc.receiver.pos, wedges, ShadowNoise{}, rng, "north");
    std::vector<ShadowWedge> small;
    for (int i = 0; i < 8; ++i) small.push_back({rng.uniform(20.0, 160.0), 0.5, 3000.0});
    auto segs2 = generate_shadow_segments({35.40, 139.69}, small, ShadowNoise{}, rng, "west");
    for (auto& s : segs2) s.id = "w" + s.id;
    segs.insert(segs.end(), segs2.begin(), segs2.end());

    const std::vector<fs::path> outs = {c.at("synth/messages.ndjson"), c.at("synth/truth.json"), c.at("synth/gt.csv"),
                                        c.at("synth/geometry.geojson"), c.at("synth/segments.geojson")};
    write_file(outs[0], ms.str());
    write_file(outs[1], truth_to_json(so.truth) + "\n");
    write_file(outs[2], gt.str());
    write_file(outs[3], geometry_to_geojson(sc.geometry) + "\n");
    write_file(outs[4], segments_to_geojson(segs) + "\n");
    std::size_t absent = 0;
    for (const auto& g : so.truth.gaps) absent += g.verdict == Verdict::Absent;
    return write_manifest(c, "synth", {}, outs,
                          {{"messages", static_cast<double>(so.messages.size())},
                           {"vessels", static_cast<double>(sc.fleet.size())},
                           {"legs", static_cast<double>(so.truth.legs.size())},
                           {"gaps", static_cast<double>(so.truth.gaps.size())},
                           {"absent_gaps", static_cast<double>(absent)},
                           {"transits", static_cast<double>(so.truth.transits.size())},
                           {"segments", static_cast<double>(segs.size())}});
}

StageResult stage_ingest(Ctx& c) {
    const fs::path input = c.cfg.input ? c.cfg.resolve(*c.cfg.input) : c.need("synth/messages.ndjson");
    std::ifstream in(input, std::ios::binary);
    if (!in) throw MissingArtifact(input);
    IngestResult r = parse_stream(in, c.cfg.window);
    std::stable_sort(r.messages.begin(), r.messages.end(), [](const AisMessage& a, const AisMessage& b) {
        return a.mmsi != b.mmsi ? a.mmsi < b.mmsi : a.t < b.t;
    });
    std::ostringstream ms;
    write_ndjson(ms, r.messages);
    ojson rep;
    rep["lines"] = r.stats.lines;
    rep["accepted"] = r.stats.accepted;
    rep["rejected"] = r.stats.rejected;
    rep["reasons"] = r.stats.reasons;
    const std::vector<fs::path> outs = {c.at("ingest/messages.ndjson"), c.at("ingest/report.json")};
    write_file(outs[0], ms.str());
    write_file(outs[1], rep.dump(2) + "\n");
    std::map<std::string, double> counts = {{"lines", static_cast<double>(r.stats.lines)},
                                            {"accepted", static_cast<double>(r.stats.accepted)},
                                            {"rejected", static_cast<double>(r.stats.rejected)}};
    for (const auto& [k, v] : r.stats.reasons) counts["rejected." + k] = static_cast<double>(v);
    return write_manifest(c, "ingest", {input}, outs, counts);
}

StageResult stage_clean(Ctx& c) {
    const fs::path msg_path = c.need("ingest/messages.ndjson");
    std::vector<fs::path> inputs = {msg_path, c.cfg.resolve(c.cfg.geometry)};
    auto by_vessel = group_by_vessel(read_messages(msg_path));
    TypeMap tm = TypeMap::defaults();
    if (c.cfg.type_map) {
        tm = TypeMap::from_json_text(read_file(c.cfg.resolve(*c.cfg.type_map)));
        inputs.push_back(c.cfg.resolve(*c.cfg.type_map));
    }
    GtTable gt;
    std::optional<fs::path> gt_path;
    if (c.cfg.gt_table)
        gt_path = c.cfg.resolve(*c.cfg.gt_table);
    else if (fs::exists(c.at("synth/gt.csv")) && !c.cfg.input)
        gt_path = c.at("synth/gt.csv");
    if (gt_path) {
        std::ifstream in(*gt_path);
        if (!in) throw MissingArtifact(*gt_path);
        gt = GtTable::from_csv(in);
        inputs.push_back(*gt_path);
    }
    const Geometry& geo = c.geometry();
    std::vector<std::pair<Mmsi, const std::vector<AisMessage>*>> work;
    for (const auto& [m, seq] : by_vessel) work.emplace_back(m, &seq);
    std::vector<VesselTimeline> tls(work.size());
    std::vector<VesselProfile> profiles(work.size());
    parallel_for(work.size(), c.opt.threads, [&](std::size_t i) {
        tls[i] = clean_vessel(work[i].first, *work[i].second, geo, c.cfg.clean);
        std::vector<AisMessage> statics;
        for (const auto& m : *work[i].second)
            if (m.kind == ReportKind::Static) statics.push_back(m);
        profiles[i] = enrich(work[i].first, statics, tm, gt);
    });
    std::ostringstream legs, stat, ves;
    RemovalCounts total{};
    std::size_t n_legs = 0, n_stat = 0, n_in = 0, n_kept = 0, n_included = 0;
    for (std::size_t i = 0; i < tls.size(); ++i) {
        const auto& tl = tls[i];
        for (const auto& l : tl.legs) legs << leg_json(l).dump() << '\n';
        for (const auto& s : tl.stationary) {
            ojson j;
            j["mmsi"] = s.mmsi;
            j["start"] = s.start;
            j["end"] = s.end;
            j["lat"] = s.anchor.lat;
            j["lon"] = s.anchor.lon;
            j["drift_m"] = s.drift_extent;
            j["messages"] = s.message_count;
            stat << j.dump() << '\n';
        }
        const bool included = tl.removed[static_cast<int>(RemovalReason::StaticVessel)] == 0 && tl.kept_messages() > 0;
        const auto& p = profiles[i];
        ojson v;
        v["mmsi"] = tl.mmsi;
        v["category"] = category_name(p.category);
        v["type_known"] = p.type_known;
        v["fishing"] = p.fishing;
        v["ship_type"] = p.ship_type ? ojson(*p.ship_type) : ojson(nullptr);
        v["imo"] = p.imo ? ojson(*p.imo) : ojson(nullptr);
        v["gt"] = p.gross_tonnage ? ojson(*p.gross_tonnage) : ojson(nullptr);
        v["included"] = included;
        v["input_messages"] = tl.input_messages;
        ojson rm = ojson::object();
        for (int r = 0; r < kRemovalReasonCount; ++r) {
            rm[removal_reason_name(static_cast<RemovalReason>(r))] = tl.removed[r];
            total[r] += tl.removed[r];
        }
        v["removed"] = rm;
        ves << v.dump() << '\n';
        n_legs += tl.legs.size();
        n_stat += tl.stationary.size();
        n_in += tl.input_messages;
        n_kept += tl.kept_messages();
        n_included += included;
    }
    ojson rep;
    rep["vessels"] = tls.size();
    rep["included_vessels"] = n_included;
    rep["input_messages"] = n_in;
    rep["kept_messages"] = n_kept;
    rep["legs"] = n_legs;
    rep["stationary_periods"] = n_stat;
    ojson rmt = ojson::object();
    for (int r = 0; r < kRemovalReasonCount; ++r) rmt[removal_reason_name(static_cast<RemovalReason>(r))] = total[r];
    rep["removed"] = rmt;
    const std::vector<fs::path> outs = {c.at("clean/legs.ndjson"), c.at("clean/stationary.ndjson"),
                                        c.at("clean/vessels.ndjson"), c.at("clean/report.json")};
    write_file(outs[0], legs.str());
    write_file(outs[1], stat.str());
    write_file(outs[2], ves.str());
    write_file(outs[3], rep.dump(2) + "\n");
    std::map<std::string, double> counts = {{"vessels", static_cast<double>(tls.size())},
                                            {"included_vessels", static_cast<double>(n_included)},
                                            {"input_messages", static_cast<double>(n_in)},
                                            {"kept_messages", static_cast<double>(n_kept)},
                                            {"legs", static_cast<double>(n_legs)},
                                            {"stationary_periods", static_cast<double>(n_stat)}};
    for (int r = 0; r < kRemovalReasonCount; ++r)
        counts[std::string("removed.") + removal_reason_name(static_cast<RemovalReason>(r))] = static_cast<double>(total[r]);
    return write_manifest(c, "clean", inputs, outs, counts);
}

StageResult stage_classify(Ctx& c) {
    const fs::path msg_path = c.need("ingest/messages.ndjson");
    const CleanData d = read_clean(c);
    const Geometry& geo = c.geometry();
    const AreaPolicy policy = AreaPolicy::parse(c.cfg.policy);
    const auto ev = evidence_by_vessel(read_messages(msg_path), geo);
    std::vector<const VesselTimeline*> tls;
    for (const auto& [m, tl] : d.timelines)
        if (d.info.at(m).included) tls.push_back(&tl);
    std::vector<std::vector<GapClassification>> gaps(tls.size());
    parallel_for(tls.size(), c.opt.threads,
                 [&](std::size_t i) { gaps[i] = classify_one(*tls[i], ev, geo, policy, c.cfg.window); });
    std::ostringstream out;
    std::size_t n = 0, absent = 0;
    std::vector<VesselTimeline> tv;
    for (std::size_t i = 0; i < tls.size(); ++i)
        for (const auto& g : gaps[i]) {
            out << gap_json(tls[i]->mmsi, g).dump() << '\n';
            ++n;
            absent += g.verdict == Verdict::Absent;
        }
    for (auto* t : tls) tv.push_back(*t);
    const ContactStats cs = first_last_contact_stats(tv, gaps);
    ojson rep;
    rep["policy"] = policy.name();
    rep["vessels"] = tls.size();
    rep["gaps"] = n;
    rep["absent"] = absent;
    rep["moored"] = n - absent;
    auto pos = [](const std::optional<LatLon>& p) { return p ? ojson{{"lat", p->lat}, {"lon", p->lon}} : ojson(nullptr); };
    rep["mean_first_contact"] = pos(cs.mean_first);
    rep["mean_last_contact"] = pos(cs.mean_last);
    const std::vector<fs::path> outs = {c.at("classify/gaps.ndjson"), c.at("classify/report.json")};
    write_file(outs[0], out.str());
    write_file(outs[1], rep.dump(2) + "\n");
    return write_manifest(c, "classify",
                          {msg_path, c.at("clean/legs.ndjson"), c.at("clean/stationary.ndjson"), c.at("clean/vessels.ndjson"),
                           c.cfg.resolve(c.cfg.geometry)},
                          outs,
                          {{"vessels", static_cast<double>(tls.size())},
                           {"gaps", static_cast<double>(n)},
                           {"absent", static_cast<double>(absent)},
                           {"moored", static_cast<double>(n - absent)}});
}

StageResult stage_tracks(Ctx& c) {
    const CleanData d = read_clean(c);
    std::vector<Leg> legs;
    for (const auto& [m, tl] : d.timelines)
        for (const auto& l : tl.legs) legs.push_back(l);
    std::vector<Trajectory> trajs(legs.size());
    parallel_for(legs.size(), c.opt.threads, [&](std::size_t i) { trajs[i] = build_trajectory(legs[i]); });
    std::ostringstream out;
    std::size_t vertices = 0, pieces = 0;
    for (const auto& t : trajs) {
        out << trajectory_to_geojson_feature(t) << '\n';
        vertices += t.route.size();
        pieces += t.profile.size();
    }
    const FidelityReport fr = fidelity_report(legs, trajs);
    ojson f;
    f["samples"] = fr.samples;
    f["position_m"] = {{"median", fr.position.median}, {"p90", fr.position.p90}};
    f["route_m"] = {{"median", fr.route.median}, {"p90", fr.route.p90}};
    f["timing_s"] = {{"median", fr.timing.median}, {"p90", fr.timing.p90}};
    f["rel_position_median"] = fr.rel_position_median;
    f["rel_route_median"] = fr.rel_route_median;
    f["rel_timing_median"] = fr.rel_timing_median;
    const std::vector<fs::path> outs = {c.at("tracks/trajectories.ndjson"), c.at("tracks/fidelity.json")};
    write_file(outs[0], out.str());
    write_file(outs[1], f.dump(2) + "\n");
    return write_manifest(c, "tracks", {c.at("clean/legs.ndjson")}, outs,
                          {{"trajectories", static_cast<double>(trajs.size())},
                           {"vertices", static_cast<double>(vertices)},
                           {"speed_pieces", static_cast<double>(pieces)},
                           {"rel_position_median", fr.rel_position_median},
                           {"rel_timing_median", fr.rel_timing_median}});
}

struct PolicyOutcome {
    CountAverages averages;
    TransitRates rates;
    std::vector<TransitEvent> events;
    CountSeries series;
    std::vector<VesselActivity> acts;
};

PolicyOutcome evaluate_policy(Ctx& c, const CleanData& d, const std::map<Mmsi, std::vector<Seconds>>& ev,
                              const AreaPolicy& policy, const std::map<Mmsi, std::vector<GapClassification>>* precomputed) {
    const Geometry& geo = c.geometry();
    std::vector<const VesselTimeline*> tls;
    for (const auto& [m, tl] : d.timelines)
        if (d.info.at(m).included) tls.push_back(&tl);
    PolicyOutcome o;
    o.acts.resize(tls.size());
    parallel_for(tls.size(), c.opt.threads, [&](std::size_t i) {
        std::vector<GapClassification> gaps;
        if (precomputed) {
            auto it = precomputed->find(tls[i]->mmsi);
            if (it != precomputed->end()) gaps = it->second;
        } else {
            gaps = classify_one(*tls[i], ev, geo, policy, c.cfg.window);
        }
        o.acts[i] = make_activity(*tls[i], std::move(gaps), &d.info.at(tls[i]->mmsi).profile);
    });
    o.series = momentary_counts(o.acts, c.cfg.window, c.cfg.gt_split, c.opt.threads);
    o.averages = average_counts(o.series, c.cfg.window, c.cfg.edge_exclusion_days);
    o.events = transit_events(o.acts);
    o.rates = transit_rates(o.events, c.cfg.window, c.cfg.utc_offset_hours, c.cfg.gt_split);
    return o;
}

UncertaintyComponent signed_component(const std::string& name, double delta) {
    return {name, std::abs(delta), delta < 0 ? UncertaintyKind::LowerOnly : UncertaintyKind::UpperOnly};
}

ojson ledger_json(const UncertaintyLedger& l) {
    ojson comps = ojson::array();
    for (const auto& c : l.components)
        comps.push_back({{"name", c.name},
                         {"value", c.value},
                         {"kind", c.kind == UncertaintyKind::Symmetric ? "symmetric"
                                  : c.kind == UncertaintyKind::UpperOnly ? "upper" : "lower"}});
    return {{"components", comps}, {"upper", l.upper}, {"lower", l.lower}};
}

StageResult stage_metrics(Ctx& c) {
    const fs::path msg_path = c.need("ingest/messages.ndjson");
    const CleanData d = read_clean(c);
    const auto gaps = read_gaps(c);
    const Geometry& geo = c.geometry();
    const auto ev = evidence_by_vessel(read_messages(msg_path), geo);
    const AreaPolicy main_policy = AreaPolicy::parse(c.cfg.policy);
    PolicyOutcome main = evaluate_policy(c, d, ev, main_policy, &gaps);

    // counts CSV
    std::ostringstream counts;
    counts << "time,total,moving,stationary";
    for (int k = 0; k < kCategoryCount; ++k) counts << ',' << category_name(static_cast<Category>(k));
    counts << ",gt_below,gt_at_or_above,gt_unknown\n";
    std::vector<Seconds> ts;
    std::vector<double> totals;
    for (std::size_t k = 0; k < main.series.size(); ++k) {
        counts << format_rfc3339(main.series.time(k)) << ',' << main.series.total(k) << ',' << main.series.moving[k] << ','
               << main.series.stationary[k];
        for (int x : main.series.total_by_category[k]) counts << ',' << x;
        for (int x : main.series.total_by_band[k]) counts << ',' << x;
        counts << '\n';
        ts.push_back(main.series.time(k));
        totals.push_back(main.series.total(k));
    }
    std::ostringstream transits;
    transits << "time,mmsi,direction,category,gt\n";
    std::vector<Seconds> event_t;
    std::vector<double> event_w;
    for (const auto& e : main.events) {
        transits << format_rfc3339(e.t) << ',' << e.mmsi << ',' << (e.direction == Direction::In ? "in" : "out") << ','
                 << category_name(e.category) << ',' << (e.gross_tonnage ? fmt(*e.gross_tonnage) : "") << '\n';
        event_t.push_back(e.t);
        event_w.push_back(1.0);
    }
    const DailyProfile dp = daily_profile(ts, totals, 240, c.cfg.utc_offset_hours);
    std::ostringstream profile;
    profile << "bin_start_hour,mean_total\n";
    for (std::size_t b = 0; b < dp.bins.size(); ++b)
        profile << fmt(static_cast<double>(b) * 240.0 / 3600.0) << ',' << fmt(dp.bins[b]) << '\n';

    // area-set variation
    std::map<std::string, PolicyOutcome> alt;
    for (const char* name : {"low", "df", "hi"})
        alt.emplace(name, evaluate_policy(c, d, ev, AreaPolicy::parse(name), nullptr));
    const double n_df = alt.at("df").averages.total, nd_df = alt.at("df").rates.per_day;
    auto rel = [](double x, double ref) { return ref != 0 ? (x - ref) / ref : 0.0; };
    const double dn_low = rel(alt.at("low").averages.total, n_df), dn_hi = rel(alt.at("hi").averages.total, n_df);
    const double dr_low = rel(alt.at("low").rates.per_day, nd_df), dr_hi = rel(alt.at("hi").rates.per_day, nd_df);
    auto aisb = [&](const std::string& k) {
        auto it = c.cfg.delta_aisb.find(k);
        return it == c.cfg.delta_aisb.end() ? 0.0 : it->second;
    };
    const UncertaintyLedger n_ledger = combine_uncertainties({signed_component("area_low", dn_low),
                                                              signed_component("area_hi", dn_hi),
                                                              {"dark", c.cfg.delta_dark, UncertaintyKind::UpperOnly},
                                                              {"ais_b", aisb("all"), UncertaintyKind::UpperOnly}});
    const UncertaintyLedger r_ledger = combine_uncertainties({signed_component("area_low", dr_low),
                                                              signed_component("area_hi", dr_hi),
                                                              {"dark", c.cfg.delta_dark, UncertaintyKind::UpperOnly},
                                                              {"ais_b", aisb("all"), UncertaintyKind::UpperOnly}});

    // convergence of the vessel count with the number of included areas
    std::vector<double> mm, nn;
    for (int m = 1; m <= 10; ++m) {
        std::string spec = "main";
        for (int k = 1; k <= m; ++k) spec += "," + std::to_string(k);
        mm.push_back(m);
        nn.push_back(evaluate_policy(c, d, ev, AreaPolicy::parse(spec), nullptr).averages.total);
    }
    ojson conv;
    conv["m"] = mm;
    conv["n"] = nn;
    try {
        const ConvergenceFit fit = convergence_fit(mm, nn);
        conv["n_low"] = fit.n_low;
        conv["exponent"] = fit.exponent;
        conv["sse"] = fit.sse;
        conv["ndot_low_per_day"] = n_df >= fit.n_low ? ojson(low_transit_rate(n_df, fit.n_low, nd_df)) : ojson(nullptr);
    } catch (const std::invalid_argument& e) {
        conv["n_low"] = nullptr;
        conv["rejected"] = e.what();
    }

    const GtAggregates ga = gt_aggregates(main.events, c.cfg.window, c.cfg.gt_split);
    auto optj = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
    ojson s;
    s["policy"] = main_policy.name();
    s["vessels"] = main.acts.size();
    ojson avg = {{"total", main.averages.total}, {"moving", main.averages.moving}, {"stationary", main.averages.stationary}};
    ojson bycat = ojson::object();
    for (int k = 0; k < kCategoryCount; ++k)
        bycat[category_name(static_cast<Category>(k))] = main.averages.total_by_category[k];
    avg["total_by_category"] = bycat;
    avg["total_by_gt_band"] = {{"below", main.averages.total_by_band[0]},
                               {"at_or_above", main.averages.total_by_band[1]},
                               {"unknown", main.averages.total_by_band[2]}};
    s["averages"] = avg;
    ojson rates = {{"days", main.rates.days},
                   {"per_day", main.rates.per_day},
                   {"in_per_day", main.rates.in_per_day},
                   {"out_per_day", main.rates.out_per_day}};
    ojson rcat = ojson::object();
    for (int k = 0; k < kCategoryCount; ++k)
        rcat[category_name(static_cast<Category>(k))] = main.rates.per_day_by_category[k];
    rates["per_day_by_category"] = rcat;
    rates["per_day_by_gt_band"] = {{"below", main.rates.per_day_by_band[0]},
                                   {"at_or_above", main.rates.per_day_by_band[1]},
                                   {"unknown", main.rates.per_day_by_band[2]}};
    rates["hourly_in"] = main.rates.hourly_in;
    rates["hourly_out"] = main.rates.hourly_out;
    s["transits"] = rates;
    s["daily_profile"] = {{"resultant", dp.resultant},
                          {"mean_defined", dp.mean_defined},
                          {"mean_hour", dp.mean_defined ? ojson(dp.mean_hour) : ojson(nullptr)},
                          {"std_hours", dp.mean_defined ? ojson(dp.std_hours) : ojson(nullptr)},
                          {"mode_hour", dp.mode_hour}};
    s["gt"] = {{"transits", ga.transits},         {"with_gt", ga.with_gt},
               {"coverage", ga.coverage},         {"mean_gt", optj(ga.mean_gt)},
               {"cumulative_gt", optj(ga.cumulative_gt)}, {"yearly_gt", optj(ga.yearly_gt)},
               {"share_at_or_above", optj(ga.share_at_or_above)}, {"share_below", optj(ga.share_below)}};
    ojson pol = ojson::object();
    for (const auto& [k, o] : alt) pol[k] = {{"total", o.averages.total}, {"transits_per_day", o.rates.per_day}};
    s["policies"] = pol;
    s["convergence"] = conv;

    ojson unc;
    unc["vessels"] = ledger_json(n_ledger);
    unc["transits"] = ledger_json(r_ledger);
    ojson per_cat = ojson::object();
    for (int k = 0; k < kCategoryCount; ++k) {
        const std::string name = category_name(static_cast<Category>(k));
        per_cat[name] = ledger_json(combine_uncertainties({{"dark", c.cfg.delta_dark, UncertaintyKind::UpperOnly},
                                                           {"ais_b", aisb(name), UncertaintyKind::UpperOnly}}));
    }
    unc["by_category"] = per_cat;

    const std::vector<fs::path> outs = {c.at("metrics/counts.csv"), c.at("metrics/transits.csv"),
                                        c.at("metrics/daily_profile.csv"), c.at("metrics/summary.json"),
                                        c.at("metrics/uncertainty.json")};
    write_file(outs[0], counts.str());
    write_file(outs[1], transits.str());
    write_file(outs[2], profile.str());
    write_file(outs[3], s.dump(2) + "\n");
    write_file(outs[4], unc.dump(2) + "\n");
    return write_manifest(c, "metrics",
                          {msg_path, c.at("clean/legs.ndjson"), c.at("clean/stationary.ndjson"), c.at("clean/vessels.ndjson"),
                           c.at("classify/gaps.ndjson")},
                          outs,
                          {{"vessels", static_cast<double>(main.acts.size())},
                           {"mean_total", main.averages.total},
                           {"mean_moving", main.averages.moving},
                           {"mean_stationary", main.averages.stationary},
                           {"transits", static_cast<double>(main.events.size())},
                           {"transits_per_day", main.rates.per_day}});
}

GridSpec grid_spec(const RunConfig& c) {
    return GridSpec::from_bbox(c.grid.lat_min, c.grid.lat_max, c.grid.lon_min, c.grid.lon_max, c.grid.cell_arcsec);
}

std::vector<StationaryDeposit> all_deposits(const CleanData& d, const std::map<Mmsi, std::vector<GapClassification>>& gaps) {
    std::vector<StationaryDeposit> out;
    for (const auto& [m, tl] : d.timelines) {
        if (!d.info.at(m).included) continue;
        auto it = gaps.find(m);
        if (it == gaps.end()) continue;
        auto dep = stationary_deposits(tl, it->second);
        out.insert(out.end(), dep.begin(), dep.end());
    }
    return out;
}

StageResult stage_grid(Ctx& c) {
    const fs::path tpath = c.need("tracks/trajectories.ndjson");
    const CleanData d = read_clean(c);
    const auto gaps = read_gaps(c);
    std::vector<Trajectory> trajs;
    {
        std::ifstream in(tpath);
        std::string line;
        while (std::getline(in, line)) trajs.push_back(trajectory_from_geojson_feature(line));
    }
    const GridSpec spec = grid_spec(c.cfg);
    AccumulateOptions ao;
    ao.spacing_m = c.cfg.grid_spacing_m;
    ao.max_drift_m = c.cfg.max_drift_m;
    const GridRaster g = accumulate(trajs, all_deposits(d, gaps), spec, c.geometry(), c.cfg.window.duration(), ao, c.opt.threads);
    std::ostringstream dens, speed, res;
    write_esri_ascii(dens, g.density_km2(), spec);
    write_esri_ascii(speed, g.mean_speed(), spec);
    write_esri_ascii(res, g.resultant(), spec);
    ojson s;
    s["rows"] = spec.rows;
    s["cols"] = spec.cols;
    s["deposited_s"] = g.deposited_s;
    s["land_s"] = g.land_s;
    s["clipped_s"] = g.clipped_s;
    s["excluded_stationary_s"] = g.excluded_stationary_s;
    s["excluded_stationary"] = g.excluded_stationary;
    s["mean_vessels_in_grid"] = g.deposited_s / c.cfg.window.duration();
    const std::vector<fs::path> outs = {c.at("grid/density_km2.asc"), c.at("grid/mean_speed_kn.asc"),
                                        c.at("grid/course_resultant.asc"), c.at("grid/summary.json")};
    write_file(outs[0], dens.str());
    write_file(outs[1], speed.str());
    write_file(outs[2], res.str());
    write_file(outs[3], s.dump(2) + "\n");
    return write_manifest(c, "grid",
                          {tpath, c.at("clean/legs.ndjson"), c.at("clean/stationary.ndjson"), c.at("classify/gaps.ndjson")},
                          outs,
                          {{"cells", static_cast<double>(spec.size())},
                           {"deposited_s", g.deposited_s},
                           {"land_s", g.land_s},
                           {"clipped_s", g.clipped_s},
                           {"excluded_stationary", static_cast<double>(g.excluded_stationary)}});
}

StageResult stage_berths(Ctx& c) {
    const fs::path dpath = c.need("grid/density_km2.asc");
    const fs::path msg_path = c.need("ingest/messages.ndjson");
    GridSpec spec;
    Field2D dens;
    {
        std::ifstream in(dpath);
        dens = read_esri_ascii(in, spec);
    }
    for (auto& v : dens.v)
        if (std::isnan(v)) v = 0;
    const Field2D sm = smooth(dens, c.cfg.smooth_sigma);
    Detection det = detect_berths(sm, spec, c.cfg.seed_threshold, c.cfg.support_threshold);
    const CleanData d = read_clean(c);
    const auto gaps = read_gaps(c);
    LabelInputs li;
    for (const auto& [m, tl] : d.timelines) {
        if (!d.info.at(m).included) continue;
        for (const auto& l : tl.legs) li.arrivals.push_back({m, l.end(), l.end_pos()});
        li.profiles[m] = d.info.at(m).profile;
    }
    li.stationary = all_deposits(d, gaps);
    for (const auto& m : read_messages(msg_path))
        if (m.kind == ReportKind::Static && !m.destination.empty()) li.destinations[m.mmsi].emplace_back(m.t, m.destination);
    for (auto& [m, v] : li.destinations)
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    li.window_s = c.cfg.window.duration();
    li.berth_shore_m = c.cfg.berth_shore_m;
    label_and_rank(det, spec, c.geometry(), li);
    std::sort(det.areas.begin(), det.areas.end(), [](const BerthArea& a, const BerthArea& b) {
        return a.arrivals_per_day != b.arrivals_per_day ? a.arrivals_per_day > b.arrivals_per_day : a.id < b.id;
    });
    std::ostringstream csv, labels;
    write_berths_csv(csv, det.areas);
    Field2D lab(spec.rows, spec.cols);
    for (std::size_t i = 0; i < lab.v.size(); ++i) lab.v[i] = det.labels[i];
    write_esri_ascii(labels, lab, spec, -1);
    std::size_t berths = 0;
    for (const auto& a : det.areas) berths += a.is_berth;
    const std::vector<fs::path> outs = {c.at("berths/berths.csv"), c.at("berths/labels.asc")};
    write_file(outs[0], csv.str());
    write_file(outs[1], labels.str());
    return write_manifest(c, "berths", {dpath, msg_path, c.at("clean/legs.ndjson"), c.at("classify/gaps.ndjson")}, outs,
                          {{"areas", static_cast<double>(det.areas.size())},
                           {"berths", static_cast<double>(berths)},
                           {"offshore", static_cast<double>(det.areas.size() - berths)}});
}

StageResult stage_receivers(Ctx& c) {
    const fs::path spath = c.cfg.segments ? c.cfg.resolve(*c.cfg.segments) : c.need("synth/segments.geojson");
    const auto segs = segments_from_geojson(read_file(spath));
    std::map<std::string, std::vector<ShadowSegment>> groups;
    for (const auto& s : segs) groups[s.receiver].push_back(s);
    EstimateOptions eo;
    eo.alpha = c.cfg.alpha;
    eo.weight_cutoff = c.cfg.weight_cutoff;
    eo.threads = c.opt.threads;
    ojson arr = ojson::array();
    std::size_t located = 0, skipped = 0;
    for (const auto& [name, g] : groups) {
        if (g.size() < 3) {
            arr.push_back({{"receiver", name}, {"segments", g.size()}, {"error", "fewer than three segments"}});
            ++skipped;
            continue;
        }
        arr.push_back(ojson::parse(estimate_to_json(estimate_receiver(g, eo))));
        ++located;
    }
    const std::vector<fs::path> outs = {c.at("receivers/receivers.json")};
    write_file(outs[0], arr.dump(2) + "\n");
    return write_manifest(c, "locate-receivers", {spath}, outs,
                          {{"segments", static_cast<double>(segs.size())},
                           {"receivers", static_cast<double>(located)},
                           {"skipped", static_cast<double>(skipped)}});
}

std::vector<std::string> prerequisites(const std::string& stage, const RunConfig& c) {
    if (stage == "ingest") return c.input ? std::vector<std::string>{} : std::vector<std::string>{"synth"};
    if (stage == "clean") return {"ingest"};
    if (stage == "classify") return {"clean"};
    if (stage == "tracks") return {"clean"};
    if (stage == "metrics") return {"classify"};
    if (stage == "grid") return {"tracks", "classify"};
    if (stage == "berths") return {"grid"};
    if (stage == "locate-receivers") return c.segments ? std::vector<std::string>{} : std::vector<std::string>{"synth"};
    return {};
}

void schedule(const std::string& stage, const RunConfig& c, std::vector<std::string>& order) {
    if (std::find(order.begin(), order.end(), stage) != order.end()) return;
    for (const auto& p : prerequisites(stage, c)) schedule(p, c, order);
    order.push_back(stage);
}

}  // namespace

std::vector<StageResult> run_stage(const std::string& stage, const RunConfig& config, const RunOptions& options) {
    if (!is_stage(stage)) throw std::invalid_argument("unknown stage: " + stage);
    config.validate();
    std::vector<std::string> order;
    if (options.from_scratch)
        schedule(stage, config, order);
    else
        order.push_back(stage);
    Ctx c{config, options, options.out, std::nullopt};
    std::vector<StageResult> results;
    for (const auto& s : order) {
        c.log(LogLevel::Info, "running stage " + s);
        if (s == "synth")
            results.push_back(stage_synth(c));
        else if (s == "ingest")
            results.push_back(stage_ingest(c));
        else if (s == "clean")
            results.push_back(stage_clean(c));
        else if (s == "classify")
            results.push_back(stage_classify(c));
        else if (s == "tracks")
            results.push_back(stage_tracks(c));
        else if (s == "metrics")
            results.push_back(stage_metrics(c));
        else if (s == "grid")
            results.push_back(stage_grid(c));
        else if (s == "berths")
            results.push_back(stage_berths(c));
        else if (s == "locate-receivers")
            results.push_back(stage_receivers(c));
    }
    return results;
}

std::vector<std::string> verify_run(const fs::path& out) {
    std::vector<std::string> problems;
    const fs::path top = out / "manifest.json";
    if (!fs::exists(top)) return {"missing " + top.string()};
    const json t = json::parse(read_file(top));
    std::map<std::string, std::string> produced;  // artifact -> hash from its producing stage
    for (const auto& name : kStages) {
        if (!t["stages"].contains(name)) continue;
        const fs::path mp = out / name / "manifest.json";
        if (!fs::exists(mp)) {
            problems.push_back("missing " + mp.string());
            continue;
        }
        if (fnv1a64_file(mp) != t["stages"][name].get<std::string>()) problems.push_back(name + ": manifest hash mismatch");
        const json m = json::parse(read_file(mp));
        for (auto it = m["outputs"].begin(); it != m["outputs"].end(); ++it) {
            const fs::path p = out / it.key();
            if (!fs::exists(p))
                problems.push_back(name + ": missing output " + it.key());
            else if (fnv1a64_file(p) != it.value().get<std::string>())
                problems.push_back(name + ": output changed since the stage ran: " + it.key());
            produced[it.key()] = it.value().get<std::string>();
        }
        for (auto it = m["inputs"].begin(); it != m["inputs"].end(); ++it) {
            auto p = produced.find(it.key());
            if (p != produced.end() && p->second != it.value().get<std::string>())
                problems.push_back(name + ": input " + it.key() + " differs from what its producer recorded");
        }
    }
    return problems;
}

}  // namespace aisbay
