#pragma once

#include <cmath>

namespace aeroguide {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Planetary constants. Defaults below are Venus.
struct PlanetModel {
    double radius_m = 6'051'800.0;
    double gravitational_parameter = 3.24859e14;  // m^3/s^2
};

inline constexpr PlanetModel kVenus{};

/// Wrap a longitude into [-pi, pi).
inline double wrap_longitude(double lon) {
    lon = std::fmod(lon + kPi, kTwoPi);
    if (lon < 0.0) lon += kTwoPi;
    return lon - kPi;
}

inline double clamp_latitude(double lat) {
    if (lat > kPi / 2) return kPi / 2;
    if (lat < -kPi / 2) return -kPi / 2;
    return lat;
}

/// Position on or above the planet: longitude/latitude in radians, altitude
/// in meters above the mean surface.
struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
    double alt = 0.0;

    /// Construct with the longitude wrapped to [-pi, pi) and the latitude
    /// clamped to [-pi/2, pi/2].
    static GeoPoint normalized(double lon, double lat, double alt = 0.0) {
        return GeoPoint{wrap_longitude(lon), clamp_latitude(lat), alt};
    }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n};
    }
};

/// Cartesian position of a point given in planet-fixed spherical coordinates.
Vec3 to_cartesian(const GeoPoint& p, const PlanetModel& planet);

/// Great-circle distance at the surface radius; altitudes are ignored.
double geodesic_distance(const GeoPoint& a, const GeoPoint& b, const PlanetModel& planet);

enum class OrbitDirection { prograde, retrograde };

/// Ideal two-body circular orbit around the planet.
struct CircularOrbit {
    double altitude_m = 0.0;
    double inclination_rad = 0.0;
    double raan_rad = 0.0;
    double initial_phase_rad = 0.0;
    OrbitDirection direction = OrbitDirection::prograde;

    double period_s(const PlanetModel& planet) const {
        const double r = planet.radius_m + altitude_m;
        return kTwoPi * std::sqrt(r * r * r / planet.gravitational_parameter);
    }
};

struct OrbiterFix {
    Vec3 position;        // inertial/planet-fixed cartesian, meters
    GeoPoint sub_point;   // surface projection (alt = 0)
};

/// Position at time t on the circular orbit, plus its sub-spacecraft point.
OrbiterFix propagate_orbit(const CircularOrbit& orbit, const PlanetModel& planet, double t);

/// Angle of the line of sight above the observer's local horizontal plane,
/// in [-pi/2, pi/2].
double elevation_angle(const GeoPoint& observer, const Vec3& target, const PlanetModel& planet);

/// True iff the geocentric angle between the orbiter's sub-point and the
/// surface point is strictly below the limb angle acos(R / (R + alt)).
bool visible_from_orbiter(const GeoPoint& surface_point, const Vec3& orbiter_position,
                          const PlanetModel& planet);

}  // namespace aeroguide
