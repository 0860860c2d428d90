#include "aeroguide/comms.hpp"

#include <algorithm>
#include <cmath>

#include "aeroguide/errors.hpp"

namespace aeroguide {

namespace {
constexpr double kBoltzmann = 1.380649e-23;  // J/K
constexpr double kLightSpeed = 299'792'458.0;
}  // namespace

double disc_coverage_gain_db(double orbit_altitude_m, const PlanetModel& planet) {
    const double r = planet.radius_m + orbit_altitude_m;
    const double half_angle = std::asin(std::min(1.0, planet.radius_m / r));
    const double beamwidth_deg = rad_to_deg(2.0 * half_angle);
    // Standard beamwidth-to-gain estimate G ~ 30000 / (theta_az * theta_el).
    return 10.0 * std::log10(30000.0 / (beamwidth_deg * beamwidth_deg));
}

namespace {

DataRate rate_from_budget(double range_m, double gain_rx_db, const LinkModel& m) {
    if (range_m <= 0.0) throw ConfigError("link range must be positive");
    const double path_loss_db =
        20.0 * std::log10(4.0 * kPi * range_m * m.frequency_hz / kLightSpeed);
    const double rx_dbw = 10.0 * std::log10(m.tx_power_w) + m.balloon_antenna_gain_db +
                          gain_rx_db - path_loss_db - m.system_loss_db;
    const double n0_dbw = 10.0 * std::log10(kBoltzmann * m.noise_temperature_k);
    const double cn0_db = rx_dbw - n0_dbw;
    double raw = std::pow(10.0, (cn0_db - m.required_ebn0_db) / 10.0);
    raw = std::min(raw, m.bandwidth_hz);

    DataRate out;
    out.raw_bps = raw;
    out.constrained_bps = raw >= 1.0 ? std::exp2(std::floor(std::log2(raw))) : 0.0;
    return out;
}

}  // namespace

DataRate data_rate(double range_m, const LinkModel& model, double orbiter_altitude_m,
                   const PlanetModel& planet) {
    const double gain = std::isnan(model.orbiter_antenna_gain_db)
                            ? disc_coverage_gain_db(orbiter_altitude_m, planet)
                            : model.orbiter_antenna_gain_db;
    return rate_from_budget(range_m, gain, model);
}

DataRate balloon_data_rate(double range_m, const LinkModel& model) {
    return rate_from_budget(range_m, model.balloon_antenna_gain_db, model);
}

std::vector<LinkPair> links_available(std::span<const GeoPoint> balloons,
                                      const Vec3& orbiter_position, const LinkModel& model,
                                      const PlanetModel& planet) {
    std::vector<LinkPair> links;
    const int n = static_cast<int>(balloons.size());
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (geodesic_distance(balloons[a], balloons[b], planet) <= model.balloon_range_m) {
                links.push_back({a, b});
            }
        }
        if (elevation_angle(balloons[a], orbiter_position, planet) >= model.min_elevation_rad) {
            links.push_back({a, -1});
        }
    }
    return links;
}

double next_ground_contact(const GroundSchedule& schedule, double t) {
    if (schedule.contact_times_s.empty()) throw ConfigError("ground schedule has no contact times");
    std::vector<double> times = schedule.contact_times_s;
    std::sort(times.begin(), times.end());
    const double day = schedule.day_length_s;
    double day_start = std::floor(t / day) * day;
    for (int wrap = 0; wrap < 2; ++wrap) {
        for (double c : times) {
            const double candidate = day_start + c;
            if (candidate > t) return candidate;
        }
        day_start += day;
    }
    return day_start + times.front();  // unreachable
}

}  // namespace aeroguide
