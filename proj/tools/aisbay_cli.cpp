#include "aisbay/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitMissing = 4;

aisbay::LogLevel parse_level(const std::string& s) {
    if (s == "debug") return aisbay::LogLevel::Debug;
    if (s == "info") return aisbay::LogLevel::Info;
    if (s == "warn") return aisbay::LogLevel::Warn;
    return aisbay::LogLevel::Error;
}

const char* level_name(aisbay::LogLevel l) {
    switch (l) {
        case aisbay::LogLevel::Debug: return "debug";
        case aisbay::LogLevel::Info: return "info";
        case aisbay::LogLevel::Warn: return "warn";
        default: return "error";
    }
}

std::string usage_stages() {
    std::string s;
    for (const auto& st : aisbay::kStages) s += (s.empty() ? "" : "|") + st;
    return s + "|verify|show-config";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vessel activity reconstruction from AIS position and static reports"};
    std::string stage, config_path, out = "run", log_level = "info";
    unsigned threads = 1;
    bool from_scratch = false;
    std::optional<std::string> areas, aisb_file;
    std::optional<double> edge_days, gt_split, delta_dark;
    std::optional<std::uint64_t> seed;

    app.add_option("stage", stage, "stage to run: " + usage_stages())->required();
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--out", out, "run directory")->capture_default_str();
    app.add_option("--threads", threads, "worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));
    app.add_option("--log-level", log_level, "debug|info|warn|error")
        ->capture_default_str()
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
    app.add_flag("--from-scratch", from_scratch, "run missing prerequisite stages first");
    app.add_option("--areas", areas, "area policy: low|df|hi or a list such as main,1,2");
    app.add_option("--edge-exclusion-days", edge_days, "days excluded at both window edges when averaging");
    app.add_option("--gt-split", gt_split, "gross-tonnage band boundary");
    app.add_option("--delta-dark", delta_dark, "upper uncertainty fraction for vessels without AIS");
    app.add_option("--delta-aisb-file", aisb_file, "JSON object: category (or \"all\") -> fraction");
    app.add_option("--seed", seed, "synthetic scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const aisbay::LogLevel min_level = parse_level(log_level);
    auto sink = [min_level](aisbay::LogLevel l, const std::string& msg) {
        if (static_cast<int>(l) >= static_cast<int>(min_level)) std::cerr << "[" << level_name(l) << "] " << msg << '\n';
    };

    if (stage == "verify") {
        try {
            const auto problems = aisbay::verify_run(out);
            for (const auto& p : problems) std::cerr << p << '\n';
            if (problems.empty()) std::cout << "manifest chain valid: " << out << '\n';
            return problems.empty() ? 0 : kExitRuntime;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
    if (stage != "show-config" && !aisbay::is_stage(stage)) {
        std::cerr << "error: unknown stage '" << stage << "'\nusage: aisbay <" << usage_stages() << "> [options]\n";
        return kExitUsage;
    }

    try {
        aisbay::RunConfig cfg = config_path.empty() ? aisbay::RunConfig::defaults() : aisbay::RunConfig::load(config_path);
        if (config_path.empty()) cfg.base_dir = std::filesystem::current_path();
        if (areas) cfg.policy = *areas;
        if (edge_days) cfg.edge_exclusion_days = *edge_days;
        if (gt_split) cfg.gt_split = *gt_split;
        if (delta_dark) cfg.delta_dark = *delta_dark;
        if (seed) cfg.synth_seed = *seed;
        if (aisb_file) {
            std::ifstream in(*aisb_file);
            if (!in) throw aisbay::ConfigError("cannot read " + *aisb_file);
            try {
                cfg.delta_aisb = nlohmann::json::parse(in).get<std::map<std::string, double>>();
            } catch (const nlohmann::json::exception& e) {
                throw aisbay::ConfigError(std::string("--delta-aisb-file: ") + e.what());
            }
        }
        if (stage == "show-config") {
            cfg.validate();
            std::cout << cfg.to_json();
            return 0;
        }
        aisbay::RunOptions opt;
        opt.out = out;
        opt.threads = threads;
        opt.from_scratch = from_scratch;
        opt.log = sink;
        for (const auto& r : aisbay::run_stage(stage, cfg, opt)) {
            std::cout << r.stage;
            for (const auto& [k, v] : r.counts) std::cout << ' ' << k << '=' << v;
            std::cout << '\n';
        }
        return 0;
    } catch (const aisbay::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const aisbay::MissingArtifact& e) {
        std::cerr << "error: " << e.what() << " (run the producing stage first or pass --from-scratch)\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
