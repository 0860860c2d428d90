#include "aeroguide/geo.hpp"

namespace aeroguide {

Vec3 to_cartesian(const GeoPoint& p, const PlanetModel& planet) {
    const double r = planet.radius_m + p.alt;
    const double cl = std::cos(p.lat);
    return {r * cl * std::cos(p.lon), r * cl * std::sin(p.lon), r * std::sin(p.lat)};
}

double geodesic_distance(const GeoPoint& a, const GeoPoint& b, const PlanetModel& planet) {
    // Haversine form; stable for both small and near-antipodal separations.
    const double sdlat = std::sin(0.5 * (b.lat - a.lat));
    const double sdlon = std::sin(0.5 * (b.lon - a.lon));
    const double h = sdlat * sdlat + std::cos(a.lat) * std::cos(b.lat) * sdlon * sdlon;
    const double c = 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
    return planet.radius_m * c;
}

OrbiterFix propagate_orbit(const CircularOrbit& orbit, const PlanetModel& planet, double t) {
    const double r = planet.radius_m + orbit.altitude_m;
    const double mean_motion = kTwoPi / orbit.period_s(planet);
    const double sign = orbit.direction == OrbitDirection::prograde ? 1.0 : -1.0;
    const double theta = orbit.initial_phase_rad + sign * mean_motion * t;

    // In-plane position, then rotate by inclination about x and RAAN about z.
    const double xp = r * std::cos(theta);
    const double yp = r * std::sin(theta);
    const double ci = std::cos(orbit.inclination_rad), si = std::sin(orbit.inclination_rad);
    const double co = std::cos(orbit.raan_rad), so = std::sin(orbit.raan_rad);
    const Vec3 pos{co * xp - so * ci * yp, so * xp + co * ci * yp, si * yp};

    const GeoPoint sub = GeoPoint::normalized(std::atan2(pos.y, pos.x),
                                              std::asin(pos.z / pos.norm()), 0.0);
    return {pos, sub};
}

double elevation_angle(const GeoPoint& observer, const Vec3& target, const PlanetModel& planet) {
    const Vec3 obs = to_cartesian(observer, planet);
    const Vec3 up = obs.normalized();
    const Vec3 los = (target - obs).normalized();
    const double s = std::max(-1.0, std::min(1.0, los.dot(up)));
    return std::asin(s);
}

bool visible_from_orbiter(const GeoPoint& surface_point, const Vec3& orbiter_position,
                          const PlanetModel& planet) {
    const Vec3 pt = to_cartesian(GeoPoint{surface_point.lon, surface_point.lat, 0.0}, planet);
    const double cos_angle = pt.normalized().dot(orbiter_position.normalized());
    // Strictly inside the limb circle; a point exactly at the limb is not visible.
    return cos_angle > planet.radius_m / orbiter_position.norm();
}

}  // namespace aeroguide
