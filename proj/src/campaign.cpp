#include "aeroguide/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "aeroguide/errors.hpp"
#include "aeroguide/rng.hpp"
#include "json.hpp"

namespace aeroguide {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Strict object reader: unknown keys are rejected with the path to the field.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void opt(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    void opt_nullable(const char* key, double& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        if (it->is_null()) {
            out = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        try {
            out = it->get<double>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": expected number or null");
        }
    }

    const json* sub(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(path_ + "." + it.key() + ": unknown key");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

CircularOrbit orbit_by_name(const std::string& name, const CircularOrbit& custom) {
    if (name == "vamos") return vamos_orbit();
    if (name == "veritas") return veritas_orbit();
    if (name == "custom") return custom;
    throw ConfigError("unknown orbit '" + name + "' (expected vamos, veritas or custom)");
}

SweepOrder sweep_order_from_string(const std::string& s) {
    if (s == "alternating") return SweepOrder::alternating;
    if (s == "forward") return SweepOrder::forward;
    if (s == "jacobi") return SweepOrder::jacobi;
    throw ConfigError("unknown sweep order '" + s + "'");
}

const char* sweep_order_name(SweepOrder s) {
    switch (s) {
        case SweepOrder::alternating: return "alternating";
        case SweepOrder::forward: return "forward";
        case SweepOrder::jacobi: return "jacobi";
    }
    return "?";
}

void parse_trial_config(const json& j, const std::string& path, TrialConfig& cfg) {
    Obj o(j, path);
    o.opt("n_balloons", cfg.n_balloons);
    double horizon_days = cfg.horizon_s / 86400.0;
    o.opt("horizon_days", horizon_days);
    cfg.horizon_s = horizon_days * 86400.0;
    o.opt("time_step_s", cfg.time_step_s);
    std::string mode = to_string(cfg.mode);
    o.opt("mode", mode);
    cfg.mode = guidance_mode_from_string(mode);
    o.opt("radius_multiplier", cfg.radius_multiplier);
    o.opt("rate_multiplier", cfg.rate_multiplier);
    o.opt("initial_altitude_m", cfg.initial_altitude_m);
    double ascent_m_per_h = cfg.ascent_rate_mps * 3600.0;
    o.opt("ascent_rate_m_per_h", ascent_m_per_h);
    cfg.ascent_rate_mps = ascent_m_per_h / 3600.0;
    o.opt("per_step_visit_counting", cfg.per_step_visit_counting);
    o.opt("max_init_attempts", cfg.max_init_attempts);

    if (const json* oj = o.sub("custom_orbit")) {
        Obj co(*oj, path + ".custom_orbit");
        double alt_km = cfg.orbit.altitude_m / 1000.0;
        double inc_deg = rad_to_deg(cfg.orbit.inclination_rad);
        double raan_deg = rad_to_deg(cfg.orbit.raan_rad);
        double phase_deg = rad_to_deg(cfg.orbit.initial_phase_rad);
        bool retrograde = cfg.orbit.direction == OrbitDirection::retrograde;
        co.opt("altitude_km", alt_km);
        co.opt("inclination_deg", inc_deg);
        co.opt("raan_deg", raan_deg);
        co.opt("initial_phase_deg", phase_deg);
        co.opt("retrograde", retrograde);
        co.done();
        cfg.orbit = {alt_km * 1000.0, deg_to_rad(inc_deg), deg_to_rad(raan_deg),
                     deg_to_rad(phase_deg),
                     retrograde ? OrbitDirection::retrograde : OrbitDirection::prograde};
    }
    o.opt("orbit", cfg.orbit_name);
    cfg.orbit = orbit_by_name(cfg.orbit_name, cfg.orbit);

    if (const json* wj = o.sub("wind")) {
        Obj w(*wj, path + ".wind");
        std::string source = cfg.wind.path.empty() ? "synthetic" : "file";
        w.opt("source", source);
        w.opt("path", cfg.wind.path);
        if (source == "synthetic") cfg.wind.path.clear();
        else if (source == "file") {
            if (cfg.wind.path.empty()) throw ConfigError(path + ".wind.path: required for file source");
        } else {
            throw ConfigError(path + ".wind.source: expected 'synthetic' or 'file'");
        }
        w.opt("seed", cfg.wind.synthesis_seed);
        auto& s = cfg.wind.synthesis;
        w.opt("n_lon", s.n_lon);
        w.opt("n_lat", s.n_lat);
        w.opt("n_alt", s.n_alt);
        w.opt("alt_min_m", s.alt_min_m);
        w.opt("alt_max_m", s.alt_max_m);
        w.opt("time_step_s", s.time_step_s);
        double wind_horizon_days = s.horizon_s / 86400.0;
        w.opt("horizon_days", wind_horizon_days);
        s.horizon_s = wind_horizon_days * 86400.0;
        w.opt("zonal_at_alt_min", s.zonal_at_alt_min);
        w.opt("zonal_at_alt_max", s.zonal_at_alt_max);
        w.opt("meridional_at_alt_min", s.meridional_at_alt_min);
        w.opt("meridional_at_alt_max", s.meridional_at_alt_max);
        w.opt("noise_zonal", s.noise_zonal);
        w.opt("noise_meridional", s.noise_meridional);
        w.opt("noise_modes", s.noise_modes);
        w.done();
    }

    if (const json* lj = o.sub("lattice")) {
        Obj l(*lj, path + ".lattice");
        l.opt("n_lon", cfg.lattice.n_lon);
        l.opt("n_lat", cfg.lattice.n_lat);
        l.opt("n_alt", cfg.lattice.n_alt);
        l.opt("alt_min_m", cfg.lattice.alt_min_m);
        l.opt("alt_max_m", cfg.lattice.alt_max_m);
        l.done();
        cfg.lattice = Lattice::uniform(cfg.lattice.n_lon, cfg.lattice.n_lat, cfg.lattice.n_alt,
                                       cfg.lattice.alt_min_m, cfg.lattice.alt_max_m);
    }

    if (const json* pj = o.sub("planner")) {
        Obj p(*pj, path + ".planner");
        auto& pc = cfg.planner;
        p.opt("gamma", pc.gamma);
        p.opt("r_eruption", pc.r_eruption);
        p.opt("r_energy_per_m", pc.r_energy_per_m);
        p.opt("r_altitude", pc.r_altitude);
        double visit_radius_km = pc.visit_radius_m / 1000.0;
        p.opt("visit_radius_km", visit_radius_km);
        pc.visit_radius_m = visit_radius_km * 1000.0;
        double sigma_km = pc.location_sigma_m / 1000.0;
        p.opt("location_sigma_km", sigma_km);
        pc.location_sigma_m = sigma_km * 1000.0;
        p.opt("tolerance", pc.tolerance);
        p.opt("max_iterations", pc.max_iterations);
        p.opt("max_atoms_per_cell", pc.max_atoms_per_cell);
        p.opt("action_step_m", pc.action_step_m);
        std::string sweep = sweep_order_name(pc.sweep);
        p.opt("sweep", sweep);
        pc.sweep = sweep_order_from_string(sweep);
        p.done();
        if (pc.gamma <= 0.0 || pc.gamma >= 1.0) throw ConfigError(path + ".planner.gamma: must be in (0, 1)");
        if (pc.visit_radius_m <= 0.0) throw ConfigError(path + ".planner.visit_radius_km: must be positive");
        if (pc.tolerance <= 0.0) throw ConfigError(path + ".planner.tolerance: must be positive");
    }
    cfg.planner.time_step_s = cfg.time_step_s;

    if (const json* kj = o.sub("link")) {
        Obj k(*kj, path + ".link");
        auto& lm = cfg.link;
        double range_km = lm.balloon_range_m / 1000.0;
        k.opt("balloon_range_km", range_km);
        lm.balloon_range_m = range_km * 1000.0;
        double elev_deg = rad_to_deg(lm.min_elevation_rad);
        k.opt("min_elevation_deg", elev_deg);
        lm.min_elevation_rad = deg_to_rad(elev_deg);
        k.opt("tx_power_w", lm.tx_power_w);
        k.opt("balloon_antenna_gain_db", lm.balloon_antenna_gain_db);
        k.opt_nullable("orbiter_antenna_gain_db", lm.orbiter_antenna_gain_db);
        k.opt("system_loss_db", lm.system_loss_db);
        k.opt("noise_temperature_k", lm.noise_temperature_k);
        double freq_mhz = lm.frequency_hz / 1e6;
        k.opt("frequency_mhz", freq_mhz);
        lm.frequency_hz = freq_mhz * 1e6;
        k.opt("required_ebn0_db", lm.required_ebn0_db);
        double bw_mhz = lm.bandwidth_hz / 1e6;
        k.opt("bandwidth_mhz", bw_mhz);
        lm.bandwidth_hz = bw_mhz * 1e6;
        k.done();
    }

    if (const json* sj = o.sub("schedule")) {
        Obj s(*sj, path + ".schedule");
        std::vector<double> hours;
        for (double c : cfg.schedule.contact_times_s) hours.push_back(c / 3600.0);
        s.opt("contact_hours", hours);
        double day_h = cfg.schedule.day_length_s / 3600.0;
        s.opt("day_length_hours", day_h);
        s.done();
        cfg.schedule.contact_times_s.clear();
        for (double h : hours) {
            if (h < 0.0 || h * 3600.0 >= day_h * 3600.0) {
                throw ConfigError(path + ".schedule.contact_hours: values must lie within one day");
            }
            cfg.schedule.contact_times_s.push_back(h * 3600.0);
        }
        cfg.schedule.day_length_s = day_h * 3600.0;
        std::set<double> uniq(cfg.schedule.contact_times_s.begin(), cfg.schedule.contact_times_s.end());
        if (uniq.size() != cfg.schedule.contact_times_s.size() || uniq.empty()) {
            throw ConfigError(path + ".schedule.contact_hours: times must be distinct and nonempty");
        }
    }

    if (const json* ej = o.sub("events")) {
        Obj e(*ej, path + ".events");
        auto& em = cfg.eruption;
        std::vector<double> probs(em.vei_probabilities.begin(), em.vei_probabilities.end());
        e.opt("vei_probabilities", probs);
        if (probs.size() != 7) throw ConfigError(path + ".events.vei_probabilities: need 7 entries");
        std::copy(probs.begin(), probs.end(), em.vei_probabilities.begin());
        double med_days = em.duration_median_s_vei2 / 86400.0;
        e.opt("duration_median_days_vei2", med_days);
        em.duration_median_s_vei2 = med_days * 86400.0;
        e.opt("duration_factor_per_vei", em.duration_factor_per_vei);
        e.opt("duration_sigma_log", em.duration_sigma_log);
        double rate_per_day = em.site_rate_per_s * 86400.0;
        e.opt("site_rate_per_day", rate_per_day);
        em.site_rate_per_s = rate_per_day / 86400.0;
        double back_days = em.back_window_s / 86400.0;
        e.opt("back_window_days", back_days);
        em.back_window_s = back_days * 86400.0;
        std::string catalog = cfg.catalog_path.empty() ? "builtin" : cfg.catalog_path;
        e.opt("catalog", catalog);
        cfg.catalog_path = catalog == "builtin" ? "" : catalog;
        e.done();
    }

    o.done();

    if (cfg.n_balloons < 1) throw ConfigError(path + ".n_balloons: must be at least 1");
    if (cfg.horizon_s < 0.0) throw ConfigError(path + ".horizon_days: must be nonnegative");
    if (cfg.time_step_s <= 0.0) throw ConfigError(path + ".time_step_s: must be positive");
    if (cfg.radius_multiplier <= 0.0) throw ConfigError(path + ".radius_multiplier: must be positive");
    if (cfg.rate_multiplier < 0.0) throw ConfigError(path + ".rate_multiplier: must be nonnegative");
}

}  // namespace

CampaignSpec parse_config(const std::string& text, const std::string& name) {
    json j;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        j = json::object();
    } else {
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError(name + ": invalid JSON: " + e.what());
        }
    }
    CampaignSpec spec;
    Obj o(j, name);
    o.opt("seed", spec.seed);
    o.opt("trials", spec.n_trials);
    o.opt("workers", spec.workers);
    o.opt("out", spec.out_dir);
    if (const json* bj = o.sub("base")) parse_trial_config(*bj, name + ".base", spec.base);
    if (const json* sj = o.sub("sweep")) {
        Obj s(*sj, name + ".sweep");
        std::vector<std::string> modes;
        s.opt("modes", modes);
        for (const auto& m : modes) spec.sweep.modes.push_back(guidance_mode_from_string(m));
        s.opt("orbits", spec.sweep.orbits);
        for (const auto& orb : spec.sweep.orbits) orbit_by_name(orb, spec.base.orbit);
        s.opt("radius_multipliers", spec.sweep.radius_multipliers);
        s.opt("rate_multipliers", spec.sweep.rate_multipliers);
        s.opt("fleet_sizes", spec.sweep.fleet_sizes);
        s.done();
        for (int n : spec.sweep.fleet_sizes) {
            if (n < 1) throw ConfigError(name + ".sweep.fleet_sizes: fleet size must be at least 1");
        }
        for (double r : spec.sweep.radius_multipliers) {
            if (r <= 0.0) throw ConfigError(name + ".sweep.radius_multipliers: must be positive");
        }
    }
    o.done();
    if (spec.n_trials < 1) throw ConfigError(name + ".trials: must be at least 1");
    if (spec.workers < 0) throw ConfigError(name + ".workers: must be nonnegative");
    return spec;
}

CampaignSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string serialize_config(const CampaignSpec& spec) {
    ordered_json j;
    j["seed"] = spec.seed;
    j["trials"] = spec.n_trials;
    j["workers"] = spec.workers;
    j["out"] = spec.out_dir;

    const TrialConfig& c = spec.base;
    ordered_json b;
    b["n_balloons"] = c.n_balloons;
    b["horizon_days"] = c.horizon_s / 86400.0;
    b["time_step_s"] = c.time_step_s;
    b["mode"] = to_string(c.mode);
    b["orbit"] = c.orbit_name;
    b["custom_orbit"] = {{"altitude_km", c.orbit.altitude_m / 1000.0},
                         {"inclination_deg", rad_to_deg(c.orbit.inclination_rad)},
                         {"raan_deg", rad_to_deg(c.orbit.raan_rad)},
                         {"initial_phase_deg", rad_to_deg(c.orbit.initial_phase_rad)},
                         {"retrograde", c.orbit.direction == OrbitDirection::retrograde}};
    b["radius_multiplier"] = c.radius_multiplier;
    b["rate_multiplier"] = c.rate_multiplier;
    b["initial_altitude_m"] = c.initial_altitude_m;
    b["ascent_rate_m_per_h"] = c.ascent_rate_mps * 3600.0;
    b["per_step_visit_counting"] = c.per_step_visit_counting;
    b["max_init_attempts"] = c.max_init_attempts;
    b["wind"] = {{"source", c.wind.path.empty() ? "synthetic" : "file"},
                 {"path", c.wind.path},
                 {"seed", c.wind.synthesis_seed},
                 {"n_lon", c.wind.synthesis.n_lon},
                 {"n_lat", c.wind.synthesis.n_lat},
                 {"n_alt", c.wind.synthesis.n_alt},
                 {"alt_min_m", c.wind.synthesis.alt_min_m},
                 {"alt_max_m", c.wind.synthesis.alt_max_m},
                 {"time_step_s", c.wind.synthesis.time_step_s},
                 {"horizon_days", c.wind.synthesis.horizon_s / 86400.0},
                 {"zonal_at_alt_min", c.wind.synthesis.zonal_at_alt_min},
                 {"zonal_at_alt_max", c.wind.synthesis.zonal_at_alt_max},
                 {"meridional_at_alt_min", c.wind.synthesis.meridional_at_alt_min},
                 {"meridional_at_alt_max", c.wind.synthesis.meridional_at_alt_max},
                 {"noise_zonal", c.wind.synthesis.noise_zonal},
                 {"noise_meridional", c.wind.synthesis.noise_meridional},
                 {"noise_modes", c.wind.synthesis.noise_modes}};
    b["lattice"] = {{"n_lon", c.lattice.n_lon},
                    {"n_lat", c.lattice.n_lat},
                    {"n_alt", c.lattice.n_alt},
                    {"alt_min_m", c.lattice.alt_min_m},
                    {"alt_max_m", c.lattice.alt_max_m}};
    b["planner"] = {{"gamma", c.planner.gamma},
                    {"r_eruption", c.planner.r_eruption},
                    {"r_energy_per_m", c.planner.r_energy_per_m},
                    {"r_altitude", c.planner.r_altitude},
                    {"visit_radius_km", c.planner.visit_radius_m / 1000.0},
                    {"location_sigma_km", c.planner.location_sigma_m / 1000.0},
                    {"tolerance", c.planner.tolerance},
                    {"max_iterations", c.planner.max_iterations},
                    {"max_atoms_per_cell", c.planner.max_atoms_per_cell},
                    {"action_step_m", c.planner.action_step_m},
                    {"sweep", sweep_order_name(c.planner.sweep)}};
    ordered_json link;
    link["balloon_range_km"] = c.link.balloon_range_m / 1000.0;
    link["min_elevation_deg"] = rad_to_deg(c.link.min_elevation_rad);
    link["tx_power_w"] = c.link.tx_power_w;
    link["balloon_antenna_gain_db"] = c.link.balloon_antenna_gain_db;
    if (std::isnan(c.link.orbiter_antenna_gain_db)) {
        link["orbiter_antenna_gain_db"] = nullptr;
    } else {
        link["orbiter_antenna_gain_db"] = c.link.orbiter_antenna_gain_db;
    }
    link["system_loss_db"] = c.link.system_loss_db;
    link["noise_temperature_k"] = c.link.noise_temperature_k;
    link["frequency_mhz"] = c.link.frequency_hz / 1e6;
    link["required_ebn0_db"] = c.link.required_ebn0_db;
    link["bandwidth_mhz"] = c.link.bandwidth_hz / 1e6;
    b["link"] = std::move(link);
    std::vector<double> hours;
    for (double t : c.schedule.contact_times_s) hours.push_back(t / 3600.0);
    b["schedule"] = {{"contact_hours", hours},
                     {"day_length_hours", c.schedule.day_length_s / 3600.0}};
    b["events"] = {{"vei_probabilities", c.eruption.vei_probabilities},
                   {"duration_median_days_vei2", c.eruption.duration_median_s_vei2 / 86400.0},
                   {"duration_factor_per_vei", c.eruption.duration_factor_per_vei},
                   {"duration_sigma_log", c.eruption.duration_sigma_log},
                   {"site_rate_per_day", c.eruption.site_rate_per_s * 86400.0},
                   {"back_window_days", c.eruption.back_window_s / 86400.0},
                   {"catalog", c.catalog_path.empty() ? "builtin" : c.catalog_path}};
    j["base"] = std::move(b);

    ordered_json sweep;
    std::vector<std::string> modes;
    for (auto m : spec.sweep.modes) modes.emplace_back(to_string(m));
    sweep["modes"] = modes;
    sweep["orbits"] = spec.sweep.orbits;
    sweep["radius_multipliers"] = spec.sweep.radius_multipliers;
    sweep["rate_multipliers"] = spec.sweep.rate_multipliers;
    sweep["fleet_sizes"] = spec.sweep.fleet_sizes;
    j["sweep"] = std::move(sweep);
    return j.dump(2) + "\n";
}

namespace {

std::string format_double_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::vector<CampaignCell> expand_cells(const CampaignSpec& spec) {
    auto modes = spec.sweep.modes;
    if (modes.empty()) modes = {spec.base.mode};
    auto orbits = spec.sweep.orbits;
    if (orbits.empty()) orbits = {spec.base.orbit_name};
    auto radii = spec.sweep.radius_multipliers;
    if (radii.empty()) radii = {spec.base.radius_multiplier};
    auto rates = spec.sweep.rate_multipliers;
    if (rates.empty()) rates = {spec.base.rate_multiplier};
    auto fleets = spec.sweep.fleet_sizes;
    if (fleets.empty()) fleets = {spec.base.n_balloons};

    std::vector<CampaignCell> cells;
    for (const auto& orbit : orbits) {
        for (double rx : radii) {
            for (double fx : rates) {
                for (int n : fleets) {
                    for (auto mode : modes) {
                        CampaignCell cell;
                        cell.cfg = spec.base;
                        cell.cfg.mode = mode;
                        cell.cfg.orbit_name = orbit;
                        cell.cfg.orbit = orbit_by_name(orbit, spec.base.orbit);
                        cell.cfg.radius_multiplier = rx;
                        cell.cfg.rate_multiplier = fx;
                        cell.cfg.n_balloons = n;
                        cell.name = std::string(to_string(mode)) + "__" + orbit + "__rx" +
                                    format_double_compact(rx) + "__fx" + format_double_compact(fx) +
                                    "__n" + std::to_string(n);
                        cells.push_back(std::move(cell));
                    }
                }
            }
        }
    }
    return cells;
}

MetricStats summarize(std::vector<double> values) {
    MetricStats s;
    if (values.empty()) return s;
    const std::size_t n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    auto quantile = [&](double p) {
        const double x = p * (n - 1);
        const std::size_t lo = static_cast<std::size_t>(x);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double f = x - lo;
        return values[lo] * (1.0 - f) + values[hi] * f;
    };
    s.q25 = quantile(0.25);
    s.q50 = quantile(0.50);
    s.q75 = quantile(0.75);
    return s;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "distinct_detections",  "distinct_visits",     "total_visits",
        "serendipitous_visits", "detected_events_visited_pct", "events_visited_pct",
        "total_events",         "replans"};
    return names;
}

std::vector<double> metric_values(const TrialMetrics& m) {
    return {static_cast<double>(m.distinct_detections),
            static_cast<double>(m.distinct_visits),
            static_cast<double>(m.total_visits),
            static_cast<double>(m.serendipitous_visits),
            m.pct_detected_visited,
            m.pct_events_visited,
            static_cast<double>(m.total_events),
            static_cast<double>(m.replans)};
}

CellResult run_cell(const TrialConfig& cell_cfg, int n_trials, int workers,
                    std::uint64_t campaign_seed, const SharedWorld& world) {
    CellResult result;
    result.n_trials = n_trials;
    result.trials.resize(static_cast<std::size_t>(n_trials));

    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n_trials));

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_trials) return;
            TrialConfig cfg = cell_cfg;
            cfg.seed = derive_seed(campaign_seed, 0x747269616cULL, static_cast<std::uint64_t>(i));
            try {
                result.trials[static_cast<std::size_t>(i)] = run_trial(cfg, world);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) {
                    first_error = "trial " + std::to_string(i) + ": " + e.what();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw SimError(first_error);

    for (std::size_t k = 0; k < metric_names().size(); ++k) {
        std::vector<double> column;
        column.reserve(result.trials.size());
        for (const auto& t : result.trials) column.push_back(metric_values(t)[k]);
        result.stats[metric_names()[k]] = summarize(std::move(column));
    }

    constexpr double kBinKm = 2.5;
    result.visit_distance_histogram.assign(20, 0.0);
    for (const auto& t : result.trials) {
        for (const auto& v : t.visits) {
            const int bin = std::min(19, static_cast<int>(v.min_distance_m / 1000.0 / kBinKm));
            result.visit_distance_histogram[static_cast<std::size_t>(bin)] += 1.0;
        }
    }
    return result;
}

void write_trials_csv(const CellResult& cell, std::ostream& out) {
    out << "trial";
    for (const auto& name : metric_names()) out << "," << name;
    out << ",mean_closest_approach_km,mean_latency_h\n";
    char buf[64];
    for (std::size_t i = 0; i < cell.trials.size(); ++i) {
        const auto& m = cell.trials[i];
        out << i;
        for (double v : metric_values(m)) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        double dist_sum = 0.0, lat_sum = 0.0;
        int lat_n = 0;
        for (const auto& v : m.visits) {
            dist_sum += v.min_distance_m;
            if (v.detected_before) {
                lat_sum += v.latency_s;
                ++lat_n;
            }
        }
        if (m.visits.empty()) {
            out << ",";
        } else {
            std::snprintf(buf, sizeof(buf), ",%.17g", dist_sum / m.visits.size() / 1000.0);
            out << buf;
        }
        if (lat_n == 0) {
            out << ",";
        } else {
            std::snprintf(buf, sizeof(buf), ",%.17g", lat_sum / lat_n / 3600.0);
            out << buf;
        }
        out << "\n";
    }
}

void write_visits_csv(const CellResult& cell, std::ostream& out) {
    out << "trial,event_id,balloon_id,open_time_s,close_time_s,min_distance_m,steps_inside,"
           "detected_before,latency_s\n";
    char buf[256];
    for (std::size_t i = 0; i < cell.trials.size(); ++i) {
        for (const auto& v : cell.trials[i].visits) {
            std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.17g,%.17g,%.17g,%d,%d,%.17g\n", i,
                          v.event_id, v.balloon_id, v.open_time_s, v.close_time_s,
                          v.min_distance_m, v.steps_inside, v.detected_before ? 1 : 0,
                          v.latency_s);
            out << buf;
        }
    }
}

std::string summary_json(const CellResult& cell, const TrialConfig& cfg) {
    ordered_json j;
    j["cell"] = cell.name;
    j["n_trials"] = cell.n_trials;
    j["config"] = {{"mode", to_string(cfg.mode)},
                   {"orbit", cfg.orbit_name},
                   {"radius_multiplier", cfg.radius_multiplier},
                   {"rate_multiplier", cfg.rate_multiplier},
                   {"n_balloons", cfg.n_balloons},
                   {"horizon_days", cfg.horizon_s / 86400.0}};
    ordered_json metrics;
    for (const auto& name : metric_names()) {
        const MetricStats& s = cell.stats.at(name);
        metrics[name] = {{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max},
                         {"q25", s.q25},   {"q50", s.q50},       {"q75", s.q75}};
    }
    j["metrics"] = std::move(metrics);
    j["visit_distance_histogram_km"] = {{"bin_width", 2.5},
                                        {"counts", cell.visit_distance_histogram}};
    return j.dump(2) + "\n";
}

namespace {

struct SummaryDoc {
    std::string cell;
    std::string mode, orbit;
    double radius_multiplier = 1.0, rate_multiplier = 1.0;
    int n_balloons = 3;
    int n_trials = 0;
    std::map<std::string, MetricStats> stats;
    std::vector<double> histogram;
};

SummaryDoc load_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path + ": cannot open summary file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError(path + ": invalid JSON: " + e.what());
    }
    SummaryDoc doc;
    try {
        doc.cell = j.at("cell").get<std::string>();
        doc.n_trials = j.at("n_trials").get<int>();
        const auto& cfg = j.at("config");
        doc.mode = cfg.at("mode").get<std::string>();
        doc.orbit = cfg.at("orbit").get<std::string>();
        doc.radius_multiplier = cfg.at("radius_multiplier").get<double>();
        doc.rate_multiplier = cfg.at("rate_multiplier").get<double>();
        doc.n_balloons = cfg.at("n_balloons").get<int>();
        for (const auto& [name, s] : j.at("metrics").items()) {
            MetricStats st;
            st.mean = s.at("mean").get<double>();
            st.stddev = s.at("stddev").get<double>();
            st.min = s.at("min").get<double>();
            st.max = s.at("max").get<double>();
            st.q25 = s.at("q25").get<double>();
            st.q50 = s.at("q50").get<double>();
            st.q75 = s.at("q75").get<double>();
            doc.stats[name] = st;
        }
        doc.histogram = j.at("visit_distance_histogram_km").at("counts").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw LoadError(path + ": summary schema mismatch: " + e.what());
    }
    return doc;
}

const std::vector<std::string>& table_metrics() {
    static const std::vector<std::string> rows = {"distinct_detections", "distinct_visits",
                                                  "total_visits", "detected_events_visited_pct",
                                                  "events_visited_pct"};
    return rows;
}

void write_comparison(const std::vector<SummaryDoc>& docs, std::ostream& table,
                      std::ostream* gains_csv) {
    // Group by everything except the mode.
    std::map<std::string, std::map<std::string, const SummaryDoc*>> groups;
    for (const auto& d : docs) {
        std::ostringstream key;
        key << d.orbit << "__rx" << format_double_compact(d.radius_multiplier) << "__fx"
            << format_double_compact(d.rate_multiplier) << "__n" << d.n_balloons;
        groups[key.str()][d.mode] = &d;
    }
    if (gains_csv) {
        *gains_csv << "group,metric";
        for (const char* mode : {"autonomous", "ground_in_the_loop", "passive"}) {
            *gains_csv << "," << mode << "_mean," << mode << "_stddev";
        }
        *gains_csv << ",autonomous_vs_passive_pct,autonomous_vs_ground_pct\n";
    }
    char buf[128];
    for (const auto& [group, by_mode] : groups) {
        table << "== " << group << " ==\n";
        std::snprintf(buf, sizeof(buf), "%-30s", "metric");
        table << buf;
        for (const char* mode : {"autonomous", "ground_in_the_loop", "passive"}) {
            if (by_mode.count(mode)) {
                std::snprintf(buf, sizeof(buf), " | %-21s", mode);
                table << buf;
            }
        }
        table << "\n";
        for (const auto& metric : table_metrics()) {
            std::snprintf(buf, sizeof(buf), "%-30s", metric.c_str());
            table << buf;
            double auto_mean = std::numeric_limits<double>::quiet_NaN();
            double ground_mean = std::numeric_limits<double>::quiet_NaN();
            double passive_mean = std::numeric_limits<double>::quiet_NaN();
            if (gains_csv) *gains_csv << group << "," << metric;
            for (const char* mode : {"autonomous", "ground_in_the_loop", "passive"}) {
                auto it = by_mode.find(mode);
                if (it == by_mode.end()) {
                    if (gains_csv) *gains_csv << ",,";
                    continue;
                }
                const auto stats_it = it->second->stats.find(metric);
                if (stats_it == it->second->stats.end()) {
                    throw LoadError("summary for cell '" + it->second->cell +
                                    "' lacks metric '" + metric + "'");
                }
                const MetricStats& s = stats_it->second;
                std::snprintf(buf, sizeof(buf), " | %9.3f +/- %7.3f", s.mean, s.stddev);
                table << buf;
                if (gains_csv) {
                    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", s.mean, s.stddev);
                    *gains_csv << buf;
                }
                if (mode == std::string("autonomous")) auto_mean = s.mean;
                if (mode == std::string("ground_in_the_loop")) ground_mean = s.mean;
                if (mode == std::string("passive")) passive_mean = s.mean;
            }
            auto gain = [](double a, double b) {
                return (std::isnan(a) || std::isnan(b) || b == 0.0)
                           ? std::numeric_limits<double>::quiet_NaN()
                           : 100.0 * (a - b) / b;
            };
            const double vs_passive = gain(auto_mean, passive_mean);
            const double vs_ground = gain(auto_mean, ground_mean);
            if (!std::isnan(vs_passive)) {
                std::snprintf(buf, sizeof(buf), "  [auto vs passive %+.1f%%]", vs_passive);
                table << buf;
            }
            if (gains_csv) {
                if (std::isnan(vs_passive)) *gains_csv << ",";
                else {
                    std::snprintf(buf, sizeof(buf), ",%.17g", vs_passive);
                    *gains_csv << buf;
                }
                if (std::isnan(vs_ground)) *gains_csv << ",";
                else {
                    std::snprintf(buf, sizeof(buf), ",%.17g", vs_ground);
                    *gains_csv << buf;
                }
                *gains_csv << "\n";
            }
            table << "\n";
        }
        table << "\n";
    }
}

}  // namespace

int run_campaign(const CampaignSpec& spec, std::ostream& log) {
    namespace fs = std::filesystem;
    const auto cells = expand_cells(spec);
    if (cells.empty()) throw ConfigError("campaign has no sweep cells");
    fs::create_directories(spec.out_dir);

    // Worlds are keyed by the parts of the configuration that shape them, so
    // mode/orbit/multiplier sweeps share one wind field and transition model.
    std::map<std::string, SharedWorld> worlds;
    auto world_for = [&](const TrialConfig& cfg) -> const SharedWorld& {
        std::ostringstream key;
        key << cfg.wind.path << "|" << cfg.wind.synthesis_seed << "|" << cfg.wind.synthesis.n_lon
            << "x" << cfg.wind.synthesis.n_lat << "x" << cfg.wind.synthesis.n_alt << "|"
            << cfg.wind.synthesis.time_step_s << "|" << cfg.wind.synthesis.horizon_s << "|"
            << cfg.lattice.n_lon << "x" << cfg.lattice.n_lat << "x" << cfg.lattice.n_alt << "|"
            << cfg.planner.time_step_s << "|" << cfg.planner.action_step_m << "|"
            << cfg.planner.max_atoms_per_cell << "|" << cfg.catalog_path;
        auto it = worlds.find(key.str());
        if (it == worlds.end()) {
            log << "building shared world (wind + transitions)...\n" << std::flush;
            it = worlds.emplace(key.str(), build_world(cfg)).first;
        }
        return it->second;
    };

    std::vector<SummaryDoc> docs;
    for (const auto& cell : cells) {
        const fs::path cell_dir = fs::path(spec.out_dir) / cell.name;
        const fs::path summary_path = cell_dir / "summary.json";
        if (fs::exists(summary_path)) {
            log << "cell " << cell.name << ": summary exists, skipping\n";
            docs.push_back(load_summary(summary_path.string()));
            continue;
        }
        log << "cell " << cell.name << ": running " << spec.n_trials << " trials\n" << std::flush;
        const SharedWorld& world = world_for(cell.cfg);
        CellResult result = run_cell(cell.cfg, spec.n_trials, spec.workers, spec.seed, world);
        result.name = cell.name;
        fs::create_directories(cell_dir);
        {
            std::ofstream out(cell_dir / "trials.csv");
            write_trials_csv(result, out);
        }
        {
            std::ofstream out(cell_dir / "visits.csv");
            write_visits_csv(result, out);
        }
        {
            std::ofstream out(summary_path);
            out << summary_json(result, cell.cfg);
        }
        docs.push_back(load_summary(summary_path.string()));
        log << "cell " << cell.name
            << ": mean total visits = " << result.stats.at("total_visits").mean << "\n"
            << std::flush;
    }

    std::ofstream gains(fs::path(spec.out_dir) / "comparison.csv");
    std::ostringstream table;
    write_comparison(docs, table, &gains);
    log << table.str();
    return 0;
}

int report_summaries(const std::vector<std::string>& summary_paths, const std::string& out_dir,
                     std::ostream& log) {
    namespace fs = std::filesystem;
    if (summary_paths.empty()) throw ConfigError("report needs at least one summary file");
    std::vector<SummaryDoc> docs;
    for (const auto& p : summary_paths) docs.push_back(load_summary(p));
    fs::create_directories(out_dir);

    std::ofstream gains(fs::path(out_dir) / "comparison.csv");
    std::ostringstream table;
    write_comparison(docs, table, &gains);
    log << table.str();

    std::ofstream hist(fs::path(out_dir) / "visit_distance_histogram.csv");
    hist << "cell,bin_lo_km,bin_hi_km,count\n";
    for (const auto& d : docs) {
        for (std::size_t b = 0; b < d.histogram.size(); ++b) {
            hist << d.cell << "," << b * 2.5 << "," << (b + 1) * 2.5 << "," << d.histogram[b]
                 << "\n";
        }
    }
    return 0;
}

}  // namespace aeroguide
