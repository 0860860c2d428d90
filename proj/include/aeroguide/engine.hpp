#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aeroguide/comms.hpp"
#include "aeroguide/events.hpp"
#include "aeroguide/geo.hpp"
#include "aeroguide/planner.hpp"
#include "aeroguide/sensing.hpp"
#include "aeroguide/wind.hpp"

namespace aeroguide {

enum class GuidanceMode { autonomous, ground_in_the_loop, passive };

const char* to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& s);

/// VAMOS-like relay: circular equatorial orbit at 30,000 km.
inline CircularOrbit vamos_orbit() { return {30'000e3, 0.0, 0.0, 0.0, OrbitDirection::prograde}; }

/// VERITAS-like orbit: 220 km, nearly polar.
inline CircularOrbit veritas_orbit() {
    return {220e3, deg_to_rad(88.9), 0.0, 0.0, OrbitDirection::prograde};
}

struct WindSourceConfig {
    std::string path;                // when set, load this file instead of synthesizing
    WindSynthesisParams synthesis;
    std::uint64_t synthesis_seed = 2026;
};

/// Planner settings used by simulation trials. Compared to the bare
/// PlannerConfig defaults this smears event rewards with a nonzero location
/// sigma: on a coarse lattice a sharp 50 km reward disc usually falls between
/// nodes, so the smearing is what makes detected events visible to the solver.
inline PlannerConfig nominal_planner_config() {
    PlannerConfig cfg;
    cfg.location_sigma_m = 400e3;
    cfg.tolerance = 0.1;
    cfg.max_iterations = 200;
    return cfg;
}

struct TrialConfig {
    std::uint64_t seed = 0;
    int n_balloons = 3;
    double horizon_s = 60.0 * 86'400.0;
    double time_step_s = 3600.0;
    GuidanceMode mode = GuidanceMode::autonomous;
    std::string orbit_name = "vamos";   // vamos | veritas | custom
    CircularOrbit orbit = vamos_orbit();
    double radius_multiplier = 1.0;
    double rate_multiplier = 1.0;
    double initial_altitude_m = 55'000.0;
    double ascent_rate_mps = 1000.0 / 3600.0;   // 1 km/h
    EruptionModel eruption;
    std::string catalog_path;           // empty = bundled catalog
    WindSourceConfig wind;
    Lattice lattice{};
    PlannerConfig planner = nominal_planner_config();
    LinkModel link;
    GroundSchedule schedule;
    PlanetModel planet = kVenus;
    int max_init_attempts = 100'000;
    bool per_step_visit_counting = false;

    // Scenario overrides, mainly for reproducing specific situations: when
    // set they replace the random draw (and the rejection-sampling condition
    // no longer applies to the overridden part).
    std::vector<GeoPoint> initial_positions;      // size must equal n_balloons
    std::vector<VolcanicEvent> explicit_events;   // replaces event sampling
    double initial_commanded_alt_m = std::numeric_limits<double>::quiet_NaN();
};

struct VisitRecord {
    int event_id = 0;
    int balloon_id = 0;
    double open_time_s = 0.0;
    double close_time_s = 0.0;
    double min_distance_m = 0.0;
    int steps_inside = 0;
    bool detected_before = false;   // fleet knew the event when the episode opened
    double latency_s = 0.0;         // episode open - earliest fleet detection (if detected)
};

struct TrialMetrics {
    int distinct_detections = 0;
    int distinct_visits = 0;
    int total_visits = 0;
    int serendipitous_visits = 0;   // visit episodes opened before any fleet detection
    double pct_detected_visited = 0.0;
    double pct_events_visited = 0.0;
    int total_events = 0;
    int replans = 0;
    std::vector<VisitRecord> visits;
};

/// Immutable per-campaign state shared by every trial: the wind field, the
/// transition lattice derived from it, and the site catalog.
struct SharedWorld {
    std::shared_ptr<const WindField> wind;
    std::shared_ptr<const TransitionModel> transitions;
    std::shared_ptr<const std::vector<VolcanoSite>> catalog;
};

SharedWorld build_world(const TrialConfig& cfg);

struct BalloonState {
    GeoPoint position;
    double commanded_alt_m = 0.0;
    EventDatabase db;
    std::shared_ptr<const GuidancePolicy> policy;
    std::uint64_t planned_hash = 0;
    bool has_planned = false;
};

/// Optional per-trial instrumentation.
struct TrialTrace {
    bool record_trajectory = false;
    bool record_links = false;
    struct Sample {
        double t;
        int balloon;
        GeoPoint position;
        double commanded_alt_m;
    };
    struct LinkEvent {
        double t;
        int a, b;
        double range_m, raw_bps, constrained_bps;
    };
    std::vector<Sample> trajectory;
    std::vector<LinkEvent> links;
};

/// One time-stepped multi-agent simulation. The constructor performs trial
/// initialization (event sampling, wind-phase draw, rejection-sampled balloon
/// placement) and the t = 0 sensing/sync/guidance pass.
class Trial {
public:
    Trial(const TrialConfig& cfg, const SharedWorld& world, TrialTrace* trace = nullptr);

    void step();
    void run();
    bool done() const { return step_index_ >= n_steps_; }

    TrialMetrics metrics() const;

    double time() const { return step_index_ * cfg_.time_step_s; }
    const std::vector<BalloonState>& balloons() const { return balloons_; }
    const std::vector<VolcanicEvent>& events() const { return events_; }
    const EventDatabase& orbiter_db() const { return orbiter_db_; }
    const EventDatabase& fleet_db() const { return fleet_db_; }
    double wind_start_s() const { return wind_start_s_; }
    int solve_count() const { return planner_->solve_count(); }

private:
    void initialize();
    void sense_and_account(double t);
    void sync(double t);
    void guide(double t);

    TrialConfig cfg_;
    SharedWorld world_;
    TrialTrace* trace_ = nullptr;
    std::unique_ptr<PlannerService> planner_;

    std::vector<VolcanicEvent> events_;
    std::vector<BalloonState> balloons_;
    EventDatabase orbiter_db_;
    EventDatabase fleet_db_;    // metrics-only union of all agents
    double wind_start_s_ = 0.0;
    int n_steps_ = 0;
    int step_index_ = 0;

    struct Episode {
        bool open = false;
        double open_time = 0.0;
        double min_distance = 0.0;
        int steps_inside = 0;
        bool detected_before = false;
        double latency = 0.0;
    };
    std::vector<Episode> episodes_;           // n_balloons x n_events
    std::vector<double> distance_scratch_;
    std::vector<VisitRecord> closed_visits_;

    // Ground-in-the-loop state.
    double next_contact_s_ = 0.0;
    std::uint64_t last_uplinked_hash_ = 0;
    bool has_uplinked_ = false;
    std::shared_ptr<const GuidancePolicy> queued_policy_;
};

/// Initialize, step through the horizon, and extract metrics.
TrialMetrics run_trial(const TrialConfig& cfg, const SharedWorld& world,
                       TrialTrace* trace = nullptr);
TrialMetrics run_trial(const TrialConfig& cfg);

}  // namespace aeroguide
