#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "aeroguide/events.hpp"
#include "aeroguide/geo.hpp"

namespace aeroguide {

/// Agent id used as the detection source for the orbiter.
inline constexpr int kOrbiterId = -1;

struct Detection {
    int event_id = 0;
    GeoPoint estimated_location;   // equals the true location (perfect geolocation)
    double time_s = 0.0;
    int vei = 0;
    int source = 0;                // balloon index, or kOrbiterId
};

/// Grow-only map of detected eruptions. Entries are never removed; on
/// conflicting records of the same event the earlier detection wins (ties
/// broken by source id), which makes merging a join-semilattice so the sync
/// order between agents cannot change the converged state.
class EventDatabase {
public:
    /// Insert or improve an entry. Returns true if the database changed.
    bool record(const Detection& d);

    /// Key-wise union with earlier-detection-wins conflict resolution.
    /// Returns true if this database changed.
    bool merge_from(const EventDatabase& other);

    bool contains(int event_id) const { return entries_.count(event_id) > 0; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::map<int, Detection>& entries() const { return entries_; }

    /// Earliest recorded detection time of an event; NaN if unknown.
    double detection_time(int event_id) const;

    /// Hash of the detected event-id set. Event locations are 1:1 with ids,
    /// so this is the key that decides whether a policy must be recomputed.
    std::uint64_t id_set_hash() const;

private:
    std::map<int, Detection> entries_;
};

EventDatabase merge(const EventDatabase& a, const EventDatabase& b);

/// Detections made by a balloon at time t: events active at t with geodesic
/// distance within their detection radius. Estimated location is exact.
std::vector<Detection> balloon_detect(const GeoPoint& balloon, std::span<const VolcanicEvent> events,
                                      double t, int balloon_id, const PlanetModel& planet);

/// Detections made by the orbiter at time t: active events with VEI >= 2
/// that are geometrically visible.
std::vector<Detection> orbiter_detect(const Vec3& orbiter_position,
                                      std::span<const VolcanicEvent> events, double t,
                                      const PlanetModel& planet);

/// Detection log JSON for audit and metric recomputation.
void save_detection_log_json(const EventDatabase& db, std::ostream& out);

}  // namespace aeroguide
