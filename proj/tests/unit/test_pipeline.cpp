#include "aisbay/pipeline.hpp"
#include "aisbay/areas.hpp"
#include "aisbay/synth.hpp"
#include "aisbay/timeutil.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace aisbay;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("aisbay_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small random scenario; geometry written next to the config.
RunConfig small_config(const fs::path& dir) {
    std::ofstream(dir / "geometry.geojson") << geometry_to_geojson(reference_geometry());
    RunConfig c = RunConfig::defaults();
    c.base_dir = dir;
    c.geometry = "geometry.geojson";
    c.window = {parse_rfc3339("2024-06-01T00:00:00Z"), parse_rfc3339("2024-06-09T00:00:00Z")};
    c.synth_scenario = "random";
    c.synth_vessels = 6;
    c.grid.cell_arcsec = 4.0;
    return c;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("config round trip and rejection") {
    TempDir d("cfg");
    const RunConfig c = small_config(d.path);
    const std::string text = c.to_json();
    const RunConfig back = RunConfig::from_json(text, d.path);
    CHECK(back.to_json() == text);
    CHECK_NOTHROW(back.validate());

    CHECK_THROWS_AS(RunConfig::from_json(R"({"geometry":"g","bogus":1})", d.path), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"clean":{"max_gap":1}})", d.path), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"clean":{"max_gap_s":"x"}})", d.path), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json("[1]", d.path), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json("{", d.path), ConfigError);

    RunConfig bad = c;
    bad.policy = "nonsense";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.geometry = "nowhere.geojson";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.edge_exclusion_days = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.support_threshold = bad.seed_threshold + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stage preconditions") {
    TempDir d("pre");
    RunConfig c = small_config(d.path);
    RunOptions o;
    o.out = d.path / "run";

    c.policy = "nonsense";
    CHECK_THROWS_AS(run_stage("synth", c, o), ConfigError);
    CHECK_FALSE(fs::exists(o.out));

    c.policy = "df";
    CHECK_THROWS_AS(run_stage("clean", c, o), MissingArtifact);
    CHECK_THROWS_AS(run_stage("grid", c, o), MissingArtifact);
    CHECK_THROWS_AS(run_stage("not-a-stage", c, o), std::invalid_argument);
    for (const auto& s : kStages) CHECK(is_stage(s));
}

TEST_CASE("manifests are reproducible and verifiable") {
    TempDir d("run");
    const RunConfig c = small_config(d.path);
    RunOptions a, b;
    a.out = d.path / "a";
    a.threads = 1;
    b.out = d.path / "b";
    b.threads = 4;
    for (const char* s : {"metrics", "berths", "locate-receivers"}) {
        a.from_scratch = b.from_scratch = true;
        run_stage(s, c, a);
        run_stage(s, c, b);
    }
    for (const auto& s : kStages) {
        const fs::path ma = a.out / s / "manifest.json";
        REQUIRE(fs::exists(ma));
        CHECK_MESSAGE(slurp(ma) == slurp(b.out / s / "manifest.json"), s);
    }
    CHECK(verify_run(a.out).empty());

    // rerunning one stage alone keeps the chain consistent
    a.from_scratch = false;
    run_stage("classify", c, a);
    CHECK(verify_run(a.out).empty());

    std::ofstream(a.out / "clean/legs.ndjson", std::ios::app) << "\n";
    const auto problems = verify_run(a.out);
    CHECK_FALSE(problems.empty());
    CHECK(verify_run(d.path / "nothing").size() == 1);
}
