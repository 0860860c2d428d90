#pragma once

#include <limits>
#include <span>
#include <vector>

#include "aeroguide/geo.hpp"

namespace aeroguide {

/// Link availability thresholds and RF budget parameters. The orbiter antenna
/// gain, when left unset (NaN), is derived from the beamwidth that just
/// covers the planet's disc from the orbit altitude.
struct LinkModel {
    double balloon_range_m = 200e3;
    double min_elevation_rad = deg_to_rad(30.0);

    double tx_power_w = 1.0;
    double balloon_antenna_gain_db = 2.0;    // dipole
    double orbiter_antenna_gain_db = std::numeric_limits<double>::quiet_NaN();
    double system_loss_db = 3.0;
    double noise_temperature_k = 730.0;
    double frequency_hz = 401e6;
    double required_ebn0_db = 3.0;           // demodulation margin
    double bandwidth_hz = 10e6;              // caps the achievable raw rate
};

/// Antenna gain (dBi) whose -3 dB beamwidth covers the full disc of the
/// planet as seen from the given orbit altitude.
double disc_coverage_gain_db(double orbit_altitude_m, const PlanetModel& planet);

struct DataRate {
    double raw_bps = 0.0;
    double constrained_bps = 0.0;   // largest power of 2 <= raw
};

/// Friis link budget between a balloon and the orbiter at the given range.
DataRate data_rate(double range_m, const LinkModel& model, double orbiter_altitude_m,
                   const PlanetModel& planet = kVenus);

/// Balloon-to-balloon budget (both ends use the balloon antenna).
DataRate balloon_data_rate(double range_m, const LinkModel& model);

/// One available communication link; kOrbiterId (-1) denotes the orbiter.
struct LinkPair {
    int a = 0;
    int b = 0;
};

/// Links available at one instant: balloon pairs within the range threshold
/// (surface geodesic distance) and balloon-orbiter pairs with the orbiter at
/// or above the elevation threshold.
std::vector<LinkPair> links_available(std::span<const GeoPoint> balloons,
                                      const Vec3& orbiter_position, const LinkModel& model,
                                      const PlanetModel& planet);

/// Twice-daily (by default) Earth contact schedule, times within one day.
struct GroundSchedule {
    std::vector<double> contact_times_s{6.0 * 3600.0, 18.0 * 3600.0};
    double day_length_s = 86'400.0;
};

/// Earliest scheduled contact strictly after t.
double next_ground_contact(const GroundSchedule& schedule, double t);

}  // namespace aeroguide
