#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aeroguide/campaign.hpp"
#include "aeroguide/errors.hpp"
#include "json.hpp"

namespace {

using namespace aeroguide;

CampaignSpec load_spec(const std::string& config_path) {
    if (config_path.empty()) return parse_config("", "defaults");
    return parse_config_file(config_path);
}

void apply_overrides(CampaignSpec& spec, const std::string& out, std::uint64_t* seed, int* trials,
                     int* workers) {
    if (!out.empty()) spec.out_dir = out;
    if (const char* env = std::getenv("AEROGUIDE_OUT"); env && out.empty()) spec.out_dir = env;
    if (seed) spec.seed = *seed;
    if (trials) spec.n_trials = *trials;
    if (workers) spec.workers = *workers;
}

int cmd_wind_gen(const std::string& config_path, const std::string& from,
                 const std::string& out_path, std::uint64_t* seed) {
    if (out_path.empty()) throw ConfigError("wind-gen needs --out");
    if (!from.empty()) {
        WindField field = load_wind_field(from);
        save_wind_field(field, out_path);
        std::cout << "converted " << from << " -> " << out_path << "\n";
        return 0;
    }
    CampaignSpec spec = load_spec(config_path);
    const std::uint64_t s = seed ? *seed : spec.base.wind.synthesis_seed;
    WindField field = synthesize_wind_field(spec.base.wind.synthesis, s);
    save_wind_field(field, out_path);
    std::cout << "synthesized " << field.n_time() << "x" << field.n_lon() << "x" << field.n_lat()
              << "x" << field.n_alt() << " wind field (seed " << s << ") -> " << out_path << "\n";
    return 0;
}

int cmd_plan(const std::string& config_path, const std::string& events_path,
             const std::string& out_path, const std::string& maps_path) {
    if (out_path.empty()) throw ConfigError("plan needs --out");
    CampaignSpec spec = load_spec(config_path);
    const TrialConfig& cfg = spec.base;

    EventDatabase db;
    if (!events_path.empty()) {
        std::ifstream in(events_path);
        if (!in) throw ConfigError(events_path + ": cannot open events file");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(events_path + ": invalid JSON: " + std::string(e.what()));
        }
        if (!j.is_array()) throw ConfigError(events_path + ": expected an array of events");
        int next_id = 0;
        for (const auto& item : j) {
            Detection d;
            d.event_id = item.value("id", next_id);
            d.estimated_location = GeoPoint::normalized(deg_to_rad(item.at("lon_deg").get<double>()),
                                                        deg_to_rad(item.at("lat_deg").get<double>()),
                                                        0.0);
            d.time_s = item.value("time_s", 0.0);
            d.vei = item.value("vei", 2);
            d.source = kOrbiterId;
            db.record(d);
            ++next_id;
        }
    }

    SharedWorld world = build_world(cfg);
    PlannerService service(world.transitions, cfg.planner, cfg.planet);
    auto policy = service.policy_for(db);
    save_policy(*policy, out_path);
    std::cout << "policy over " << cfg.lattice.n_lon << "x" << cfg.lattice.n_lat << "x"
              << cfg.lattice.n_alt << " lattice, " << db.size() << " events, "
              << policy->iterations << " iterations, residual " << policy->residual << " -> "
              << out_path << "\n";

    if (!maps_path.empty()) {
        std::ofstream maps(maps_path);
        if (!maps) throw ConfigError(maps_path + ": cannot open for writing");
        maps << "lon_deg,lat_deg,alt_m,value,commanded_alt_m\n";
        const Lattice& lat = cfg.lattice;
        for (int k = 0; k < lat.n_alt; ++k) {
            for (int j = 0; j < lat.n_lat; ++j) {
                for (int i = 0; i < lat.n_lon; ++i) {
                    const int node = lat.node_id(i, j, k);
                    maps << rad_to_deg(lat.lon_node(i)) << "," << rad_to_deg(lat.lat_node(j)) << ","
                         << lat.alt_node(k) << "," << policy->values[node] << ","
                         << policy->commanded_alt[node] << "\n";
                }
            }
        }
        std::cout << "value/policy map CSV -> " << maps_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Balloon-fleet guidance simulator for stochastic planetary wind fields"};
    app.require_subcommand(1);

    std::string config_path, out_path, from_path, events_path, maps_path;
    std::uint64_t seed = 0;
    int trials = 0, workers = 0;
    bool seed_set = false, trials_set = false, workers_set = false;

    auto add_common = [&](CLI::App* cmd, bool with_runtime) {
        cmd->add_option("--config", config_path, "campaign config JSON");
        cmd->add_option("--out", out_path, "output path");
        if (with_runtime) {
            cmd->add_option("--seed", seed, "campaign seed override")->each([&](const std::string&) {
                seed_set = true;
            });
            cmd->add_option("--trials", trials, "trial count override")->each([&](const std::string&) {
                trials_set = true;
            });
            cmd->add_option("--workers", workers, "worker thread count")->each([&](const std::string&) {
                workers_set = true;
            });
        }
    };

    CLI::App* wind_gen = app.add_subcommand("wind-gen", "synthesize or convert gridded wind files");
    add_common(wind_gen, true);
    wind_gen->add_option("--from", from_path, "existing wind file to convert");

    CLI::App* plan = app.add_subcommand("plan", "compute one guidance policy and export it");
    add_common(plan, false);
    plan->add_option("--events", events_path, "JSON array of event locations");
    plan->add_option("--maps", maps_path, "also write a value/policy map CSV");

    CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo campaign");
    add_common(simulate, true);

    CLI::App* report = app.add_subcommand("report", "build comparison tables from summaries");
    std::vector<std::string> summaries;
    report->add_option("summaries", summaries, "summary.json files")->required();
    report->add_option("--out", out_path, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(wind_gen)) {
            return cmd_wind_gen(config_path, from_path, out_path, seed_set ? &seed : nullptr);
        }
        if (app.got_subcommand(plan)) {
            return cmd_plan(config_path, events_path, out_path, maps_path);
        }
        if (app.got_subcommand(simulate)) {
            CampaignSpec spec = load_spec(config_path);
            apply_overrides(spec, out_path, seed_set ? &seed : nullptr,
                            trials_set ? &trials : nullptr, workers_set ? &workers : nullptr);
            return run_campaign(spec, std::cout);
        }
        if (app.got_subcommand(report)) {
            return report_summaries(summaries, out_path.empty() ? "." : out_path, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const LoadError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
