#include "aeroguide/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "aeroguide/errors.hpp"
#include "aeroguide/rng.hpp"
#include "json.hpp"

namespace aeroguide {

double detection_radius_for(int vei, double radius_multiplier) {
    static constexpr std::array<double, 7> kRadiusM = {110e3,  370e3,  1400e3, 4100e3,
                                                       6800e3, 9500e3, 11000e3};
    if (vei < 0 || vei > 6) {
        throw ConfigError("VEI " + std::to_string(vei) + " outside supported range [0, 6]");
    }
    if (radius_multiplier <= 0.0) {
        throw ConfigError("radius multiplier must be positive");
    }
    return kRadiusM[static_cast<std::size_t>(vei)] * radius_multiplier;
}

std::vector<VolcanicEvent> sample_events(std::span<const VolcanoSite> catalog,
                                         const EruptionModel& model, double horizon_s,
                                         std::uint64_t seed) {
    if (catalog.empty()) throw ConfigError("event sampling needs a nonempty site catalog");
    if (horizon_s <= 0.0) throw ConfigError("event sampling horizon must be positive");

    double prob_sum = 0.0;
    for (double p : model.vei_probabilities) prob_sum += p;
    if (std::abs(prob_sum - 1.0) > 1e-9) {
        throw ConfigError("VEI probabilities sum to " + std::to_string(prob_sum) + ", expected 1");
    }

    const double rate = model.site_rate_per_s * model.rate_multiplier;
    std::vector<VolcanicEvent> events;
    if (rate <= 0.0) return events;

    const double t_begin = -model.back_window_s;
    const double log_factor = std::log(model.duration_factor_per_vei);
    for (std::size_t s = 0; s < catalog.size(); ++s) {
        Rng rng(derive_seed(seed, 0x65767473ULL, s));
        double t = t_begin;
        while (true) {
            t += rng.exponential(rate);
            if (t >= horizon_s) break;
            VolcanicEvent e;
            e.site_id = catalog[s].id;
            e.location = catalog[s].location;
            e.vei = rng.categorical(model.vei_probabilities);
            const double mu = std::log(model.duration_median_s_vei2) + (e.vei - 2) * log_factor;
            e.duration_s = rng.lognormal(mu, model.duration_sigma_log);
            e.start_s = t;
            e.detection_radius_m = detection_radius_for(e.vei, model.radius_multiplier);
            events.push_back(e);
        }
    }
    std::sort(events.begin(), events.end(), [](const VolcanicEvent& a, const VolcanicEvent& b) {
        return a.start_s < b.start_s || (a.start_s == b.start_s && a.site_id < b.site_id);
    });
    for (std::size_t i = 0; i < events.size(); ++i) events[i].id = static_cast<int>(i);
    return events;
}

std::vector<VolcanoSite> load_catalog(std::istream& in, const std::string& name) {
    std::vector<VolcanoSite> sites;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.find("id") != std::string::npos &&
            line.find("lon") != std::string::npos) {
            continue;  // header
        }
        std::istringstream ss(line);
        VolcanoSite site;
        double lon_deg = 0.0, lat_deg = 0.0;
        char comma;
        ss >> site.id >> comma >> lon_deg >> comma >> lat_deg;
        if (ss.fail()) {
            throw LoadError(name + ": malformed catalog row at line " + std::to_string(line_no));
        }
        if (ss >> comma) std::getline(ss, site.size_class);
        if (lat_deg < -90.0 || lat_deg > 90.0) {
            throw LoadError(name + ": latitude " + std::to_string(lat_deg) +
                            " out of range at line " + std::to_string(line_no));
        }
        if (lon_deg < -360.0 || lon_deg > 360.0) {
            throw LoadError(name + ": longitude " + std::to_string(lon_deg) +
                            " out of range at line " + std::to_string(line_no));
        }
        site.location = GeoPoint::normalized(deg_to_rad(lon_deg), deg_to_rad(lat_deg), 0.0);
        sites.push_back(std::move(site));
    }
    if (sites.empty()) throw LoadError(name + ": catalog has no sites");
    return sites;
}

std::vector<VolcanoSite> load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path + ": cannot open catalog file");
    return load_catalog(in, path);
}

const std::vector<VolcanoSite>& builtin_catalog() {
    static const std::vector<VolcanoSite> catalog = [] {
        std::vector<VolcanoSite> sites;
        sites.reserve(168);
        Rng rng(0x76656e757331363ULL);
        for (int i = 0; i < 168; ++i) {
            VolcanoSite s;
            s.id = i;
            const double lon = rng.uniform(-kPi, kPi);
            // Low-latitude concentration: most sites inside +/-30 degrees.
            double lat = deg_to_rad(20.0) * rng.normal();
            lat = std::clamp(lat, deg_to_rad(-65.0), deg_to_rad(65.0));
            s.location = GeoPoint::normalized(lon, lat, 0.0);
            s.size_class = "large";
            sites.push_back(std::move(s));
        }
        return sites;
    }();
    return catalog;
}

void save_events_json(std::span<const VolcanicEvent> events, std::ostream& out) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : events) {
        arr.push_back({{"id", e.id},
                       {"site_id", e.site_id},
                       {"lon_deg", rad_to_deg(e.location.lon)},
                       {"lat_deg", rad_to_deg(e.location.lat)},
                       {"vei", e.vei},
                       {"start_s", e.start_s},
                       {"duration_s", e.duration_s},
                       {"detection_radius_m", e.detection_radius_m}});
    }
    out << arr.dump(2) << "\n";
}

}  // namespace aeroguide
