#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aeroguide/geo.hpp"

namespace aeroguide {

struct VolcanoSite {
    int id = 0;
    GeoPoint location;          // alt = 0
    std::string size_class;
};

struct VolcanicEvent {
    int id = 0;
    int site_id = 0;
    GeoPoint location;
    int vei = 0;                // 0..6
    double start_s = 0.0;       // may be negative (active before the trial)
    double duration_s = 0.0;
    double detection_radius_m = 0.0;
};

/// True iff start <= t < start + duration.
inline bool is_active(const VolcanicEvent& e, double t) {
    return t >= e.start_s && t < e.start_s + e.duration_s;
}

/// Infrasound detection radius by explosivity index, scaled by the
/// sensitivity multiplier. Throws ConfigError for VEI outside [0, 6].
double detection_radius_for(int vei, double radius_multiplier);

/// Stochastic eruption model: per-site Poisson arrivals, categorical VEI,
/// per-VEI log-normal durations.
struct EruptionModel {
    std::array<double, 7> vei_probabilities{0.07, 0.17, 0.48, 0.20, 0.06, 0.015, 0.005};
    double duration_median_s_vei2 = 86'400.0;   // 1 day at VEI 2
    double duration_factor_per_vei = 3.0;       // median scaling per VEI step
    double duration_sigma_log = 1.5;
    double site_rate_per_s = 2.3e-8;            // nominal events per site per second
    double rate_multiplier = 1.0;
    double radius_multiplier = 1.0;
    double back_window_s = 100.0 * 86'400.0;    // sample this far before t = 0
};

/// Sample eruptions over [-back_window, horizon]. Deterministic in the seed;
/// events are sorted by start time, ids are assigned in that order.
std::vector<VolcanicEvent> sample_events(std::span<const VolcanoSite> catalog,
                                         const EruptionModel& model, double horizon_s,
                                         std::uint64_t seed);

/// Parse a site catalog CSV with columns id,lon_deg,lat_deg,size.
std::vector<VolcanoSite> load_catalog(const std::string& path);
std::vector<VolcanoSite> load_catalog(std::istream& in, const std::string& name);

/// Bundled 168-site synthetic catalog (fixed pseudo-random layout
/// concentrated at low latitudes). Same on every run.
const std::vector<VolcanoSite>& builtin_catalog();

/// Event-list JSON dump for reproducibility audits.
void save_events_json(std::span<const VolcanicEvent> events, std::ostream& out);

}  // namespace aeroguide
