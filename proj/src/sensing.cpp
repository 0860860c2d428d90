#include "aeroguide/sensing.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"

namespace aeroguide {

namespace {

// Total order on detections of the same event: earlier time wins, then the
// lower source id. Keeps merge commutative/associative/idempotent.
bool better_than(const Detection& a, const Detection& b) {
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    return a.source < b.source;
}

}  // namespace

bool EventDatabase::record(const Detection& d) {
    auto [it, inserted] = entries_.try_emplace(d.event_id, d);
    if (inserted) return true;
    if (better_than(d, it->second)) {
        it->second = d;
        return true;
    }
    return false;
}

bool EventDatabase::merge_from(const EventDatabase& other) {
    bool changed = false;
    for (const auto& [id, det] : other.entries_) {
        changed = record(det) || changed;
    }
    return changed;
}

double EventDatabase::detection_time(int event_id) const {
    auto it = entries_.find(event_id);
    if (it == entries_.end()) return std::numeric_limits<double>::quiet_NaN();
    return it->second.time_s;
}

std::uint64_t EventDatabase::id_set_hash() const {
    // FNV-1a over the sorted id sequence (std::map iterates in order).
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [id, det] : entries_) {
        std::uint64_t x = static_cast<std::uint64_t>(static_cast<std::int64_t>(id));
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (x >> (8 * byte)) & 0xFF;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

EventDatabase merge(const EventDatabase& a, const EventDatabase& b) {
    EventDatabase out = a;
    out.merge_from(b);
    return out;
}

std::vector<Detection> balloon_detect(const GeoPoint& balloon, std::span<const VolcanicEvent> events,
                                      double t, int balloon_id, const PlanetModel& planet) {
    std::vector<Detection> out;
    for (const auto& e : events) {
        if (!is_active(e, t)) continue;
        if (geodesic_distance(balloon, e.location, planet) <= e.detection_radius_m) {
            out.push_back({e.id, e.location, t, e.vei, balloon_id});
        }
    }
    return out;
}

std::vector<Detection> orbiter_detect(const Vec3& orbiter_position,
                                      std::span<const VolcanicEvent> events, double t,
                                      const PlanetModel& planet) {
    std::vector<Detection> out;
    for (const auto& e : events) {
        if (e.vei < 2 || !is_active(e, t)) continue;
        if (visible_from_orbiter(e.location, orbiter_position, planet)) {
            out.push_back({e.id, e.location, t, e.vei, kOrbiterId});
        }
    }
    return out;
}

void save_detection_log_json(const EventDatabase& db, std::ostream& out) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, d] : db.entries()) {
        arr.push_back({{"event_id", id},
                       {"lon_deg", rad_to_deg(d.estimated_location.lon)},
                       {"lat_deg", rad_to_deg(d.estimated_location.lat)},
                       {"time_s", d.time_s},
                       {"vei", d.vei},
                       {"source", d.source}});
    }
    out << arr.dump(2) << "\n";
}

}  // namespace aeroguide
