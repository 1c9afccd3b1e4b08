// flagzoom: batch experiment runner for rational points on flag varieties.
//
// One subcommand per experiment; parameters come from flags or a JSON config
// file (flags win). All randomness flows from --seed; FLAGZOOM_THREADS
// overrides every thread setting. CSV artifacts end with a config-hash
// trailer that is independent of thread count and output paths.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "flagzoom/experiments.hpp"

namespace {

using flagzoom::RunConfig;
using json = nlohmann::json;

void fail_json(const std::string& kind, const std::string& message) {
    json j{{"error", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

int exit_code_for(const flagzoom::Error& e) {
    const std::string& k = e.kind();
    if (k == "BudgetExceeded" || k == "PrecisionLoss" || k == "IncompleteEnumeration") return 3;
    return 2;
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw flagzoom::ValidationError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw flagzoom::ValidationError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw flagzoom::ValidationError("config file must hold a JSON object");
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "variety") cfg.variety = val.get<std::string>();
            else if (key == "hmax") cfg.hmax = val.get<std::vector<double>>();
            else if (key == "h_grid") cfg.h_grid = val.get<std::vector<double>>();
            else if (key == "grid_n") cfg.grid_n = val.get<int>();
            else if (key == "fit") cfg.fit = val.get<std::string>();
            else if (key == "box_lo") cfg.box_lo = val.get<std::vector<double>>();
            else if (key == "box_hi") cfg.box_hi = val.get<std::vector<double>>();
            else if (key == "drift") cfg.drift = val.get<std::vector<double>>();
            else if (key == "t_grid") cfg.t_grid = val.get<std::vector<double>>();
            else if (key == "tau") cfg.tau = val.get<double>();
            else if (key == "center") cfg.center = val.get<std::string>();
            else if (key == "zoom_halfwidth") cfg.zoom_halfwidth = val.get<double>();
            else if (key == "dump_cloud") cfg.dump_cloud = val.get<bool>();
            else if (key == "h_min") cfg.h_min = val.get<double>();
            else if (key == "bound") cfg.bound = val.get<double>();
            else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
            else if (key == "threads") cfg.threads = val.get<int>();
            else if (key == "max_points") cfg.max_points = val.get<double>();
            else if (key == "max_visits") cfg.max_visits = val.get<double>();
            else if (key == "out") cfg.out = val.get<std::string>();
            else throw flagzoom::ValidationError("unknown config key: '" + key + "'");
        } catch (const json::exception& e) {
            throw flagzoom::ValidationError("config key '" + key + "': " + e.what());
        }
    }
}

void add_common_options(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
    sub->add_option("--config", config_path, "JSON config file (flags override its values)");
    sub->add_option("--variety", cfg.variety, "gr:l:d | quadric:n | flag3");
    sub->add_option("--hmax", cfg.hmax, "height bound per generator")->delimiter(',');
    sub->add_option("--h_grid", cfg.h_grid, "explicit height grid (count)")->delimiter(',');
    sub->add_option("--grid_n", cfg.grid_n, "automatic height grid size (count)");
    sub->add_option("--fit", cfg.fit, "'free' or 'b=<int>' (count)");
    sub->add_option("--box_lo", cfg.box_lo, "moving box lower corner")->delimiter(',');
    sub->add_option("--box_hi", cfg.box_hi, "moving box upper corner")->delimiter(',');
    sub->add_option("--drift", cfg.drift, "moving box drift direction")->delimiter(',');
    sub->add_option("--t_grid", cfg.t_grid, "time grid")->delimiter(',');
    sub->add_option("--tau", cfg.tau, "zoom exponent");
    sub->add_option("--center", cfg.center,
                    "center spec: random[:k] | sqrt2 | golden | sqrt2m1 | liouville | "
                    "rat:p/q | dir:... | span:...;... | flag:...;...");
    sub->add_option("--zoom_halfwidth", cfg.zoom_halfwidth, "statistics box half width (zoom)");
    sub->add_flag("--dump_cloud", cfg.dump_cloud, "also emit the final zoom cloud (zoom)");
    sub->add_option("--h_min", cfg.h_min, "smallest record height used by the fit (beta)");
    sub->add_option("--bound", cfg.bound, "subspace height bound (genericity)");
    sub->add_option("--seed", cfg.seed, "64-bit seed for every random choice");
    sub->add_option("--threads", cfg.threads, "worker count (FLAGZOOM_THREADS overrides)");
    sub->add_option("--max_points", cfg.max_points, "materialization budget");
    sub->add_option("--max_visits", cfg.max_visits, "streamed candidate budget");
    sub->add_option("--out", cfg.out,
                    "artifact path prefix; without it the primary artifact goes to stdout");
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    std::string config_path;

    // Load the config file (if any) before CLI11 binds flag values, so that
    // explicitly passed flags override file values.
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    try {
        if (!config_path.empty()) apply_config_file(config_path, cfg);
    } catch (const flagzoom::Error& e) {
        fail_json(e.kind(), e.what());
        return exit_code_for(e);
    }

    CLI::App app{"rational points of bounded height on flag varieties: "
                 "enumeration, counting, zooming, Diophantine statistics"};
    app.require_subcommand(1);
    std::string config_path_cli;  // accepted per subcommand; handled above

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"enumerate", "exact point list as CSV (canonical order)"},
        {"count", "single-height counting series and power-law fit"},
        {"windows", "moving-box window counts against the growth measure"},
        {"zoom", "dilated local point clouds: mass slope and uniformity"},
        {"beta", "best-approximation records and Diophantine exponent"},
        {"genericity", "rational Schubert genericity scan"},
        {"escape", "diagonal-flow shortest-vector trace"},
    };
    for (const auto& [name, desc] : subs)
        add_common_options(app.add_subcommand(name, desc), cfg, config_path_cli);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_json("UsageError", e.what());
        return 2;
    }

    cfg.subcommand = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("FLAGZOOM_THREADS")) {
        try {
            cfg.threads = std::stoi(env);
        } catch (const std::exception&) {
            fail_json("ValidationError", "FLAGZOOM_THREADS must be an integer");
            return 2;
        }
    }

    try {
        std::vector<flagzoom::Artifact> artifacts = flagzoom::run_experiment(cfg);
        if (cfg.out.empty()) {
            for (const flagzoom::Artifact& a : artifacts)
                if (a.primary) std::cout << a.text;
        } else {
            std::filesystem::path prefix(cfg.out);
            if (prefix.has_parent_path())
                std::filesystem::create_directories(prefix.parent_path());
            for (const flagzoom::Artifact& a : artifacts) {
                std::ofstream out(cfg.out + "." + a.name, std::ios::binary);
                if (!out) {
                    fail_json("ValidationError", "cannot write artifact: " + cfg.out + "." + a.name);
                    return 2;
                }
                out << a.text;
            }
        }
        return 0;
    } catch (const flagzoom::Error& e) {
        fail_json(e.kind(), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        fail_json("InternalError", e.what());
        return 2;
    }
}
