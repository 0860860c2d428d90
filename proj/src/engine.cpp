#include "aeroguide/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "aeroguide/errors.hpp"
#include "aeroguide/rng.hpp"

namespace aeroguide {

const char* to_string(GuidanceMode mode) {
    switch (mode) {
        case GuidanceMode::autonomous: return "autonomous";
        case GuidanceMode::ground_in_the_loop: return "ground_in_the_loop";
        case GuidanceMode::passive: return "passive";
    }
    return "?";
}

GuidanceMode guidance_mode_from_string(const std::string& s) {
    if (s == "autonomous") return GuidanceMode::autonomous;
    if (s == "ground_in_the_loop" || s == "ground-in-the-loop" || s == "ground") {
        return GuidanceMode::ground_in_the_loop;
    }
    if (s == "passive") return GuidanceMode::passive;
    throw ConfigError("unknown guidance mode '" + s + "'");
}

SharedWorld build_world(const TrialConfig& cfg) {
    SharedWorld world;
    auto wind = cfg.wind.path.empty()
                    ? synthesize_wind_field(cfg.wind.synthesis, cfg.wind.synthesis_seed)
                    : load_wind_field(cfg.wind.path);
    world.wind = std::make_shared<const WindField>(std::move(wind));
    world.transitions = std::make_shared<const TransitionModel>(
        build_transitions(*world.wind, cfg.lattice, cfg.planner, cfg.planet));
    world.catalog = std::make_shared<const std::vector<VolcanoSite>>(
        cfg.catalog_path.empty() ? builtin_catalog() : load_catalog(cfg.catalog_path));
    return world;
}

Trial::Trial(const TrialConfig& cfg, const SharedWorld& world, TrialTrace* trace)
    : cfg_(cfg), world_(world), trace_(trace) {
    if (cfg_.n_balloons < 1) throw ConfigError("trial needs at least one balloon");
    if (cfg_.horizon_s < 0) throw ConfigError("trial horizon must be nonnegative");
    if (cfg_.time_step_s <= 0) throw ConfigError("trial time step must be positive");
    if (cfg_.initial_altitude_m < cfg_.lattice.alt_min_m ||
        cfg_.initial_altitude_m > cfg_.lattice.alt_max_m) {
        throw ConfigError("initial altitude outside the flight envelope");
    }
    n_steps_ = static_cast<int>(std::llround(cfg_.horizon_s / cfg_.time_step_s));
    planner_ = std::make_unique<PlannerService>(world_.transitions, cfg_.planner, cfg_.planet);
    initialize();
    // t = 0 pass: events active at start are detectable immediately.
    sense_and_account(0.0);
    sync(0.0);
    guide(0.0);
}

void Trial::initialize() {
    EruptionModel model = cfg_.eruption;
    model.rate_multiplier = cfg_.eruption.rate_multiplier * cfg_.rate_multiplier;
    model.radius_multiplier = cfg_.eruption.radius_multiplier * cfg_.radius_multiplier;

    // Wind phase: uniform over the model's time steps, independent of the
    // rejection loop below.
    {
        Rng rng(derive_seed(cfg_.seed, 0x77737461ULL));
        const auto& taxis = world_.wind->time_axis();
        wind_start_s_ = taxis[rng.uniform_index(taxis.size())];
    }

    const double commanded0 = std::isnan(cfg_.initial_commanded_alt_m)
                                  ? cfg_.initial_altitude_m
                                  : cfg_.initial_commanded_alt_m;
    auto place = [&](const std::vector<GeoPoint>& draw) {
        balloons_.resize(static_cast<std::size_t>(cfg_.n_balloons));
        for (int b = 0; b < cfg_.n_balloons; ++b) {
            balloons_[b].position = draw[b];
            balloons_[b].commanded_alt_m = commanded0;
        }
        episodes_.assign(static_cast<std::size_t>(cfg_.n_balloons) * events_.size(), {});
        distance_scratch_.resize(std::max<std::size_t>(1, episodes_.size()));
        next_contact_s_ = next_ground_contact(cfg_.schedule, -1.0);
    };

    // Scenario overrides bypass the random draw (and with it the
    // rejection-sampling condition on the overridden part).
    if (!cfg_.initial_positions.empty() || !cfg_.explicit_events.empty()) {
        if (!cfg_.explicit_events.empty()) {
            events_ = cfg_.explicit_events;
        } else {
            events_ = sample_events(*world_.catalog, model, cfg_.horizon_s,
                                    derive_seed(cfg_.seed, 0x65766e74ULL, 0));
        }
        std::vector<GeoPoint> draw = cfg_.initial_positions;
        if (draw.empty()) {
            Rng rng(derive_seed(cfg_.seed, 0x706f7331ULL, 0));
            draw.resize(static_cast<std::size_t>(cfg_.n_balloons));
            for (auto& p : draw) {
                p = GeoPoint{rng.uniform(-kPi, kPi), std::asin(rng.uniform(-1.0, 1.0)),
                             cfg_.initial_altitude_m};
            }
        }
        if (static_cast<int>(draw.size()) != cfg_.n_balloons) {
            throw ConfigError("initial_positions size does not match n_balloons");
        }
        for (auto& p : draw) p.alt = cfg_.initial_altitude_m;
        place(draw);
        return;
    }

    // Rejection sampling: draw an event history, then balloon positions until
    // at least one balloon is within detection range of an active event at
    // t = 0. Event histories with no active event at t = 0 cannot satisfy the
    // condition for any placement, so they are redrawn.
    const int cap = cfg_.max_init_attempts;
    constexpr int kPositionRounds = 20'000;
    int attempts = 0;
    for (std::uint64_t event_round = 0;; ++event_round) {
        events_ = sample_events(*world_.catalog, model, cfg_.horizon_s,
                                derive_seed(cfg_.seed, 0x65766e74ULL, event_round));
        std::vector<const VolcanicEvent*> active0;
        for (const auto& e : events_) {
            if (is_active(e, 0.0)) active0.push_back(&e);
        }
        if (active0.empty()) {
            if (++attempts >= cap) {
                throw SimError("trial initialization failed: no active event at t=0 after " +
                               std::to_string(attempts) + " attempts (seed " +
                               std::to_string(cfg_.seed) + ")");
            }
            continue;
        }
        Rng pos_rng(derive_seed(cfg_.seed, 0x706f7331ULL, event_round));
        for (int round = 0; round < kPositionRounds; ++round) {
            if (++attempts >= cap) {
                throw SimError("trial initialization failed: rejection sampling exceeded " +
                               std::to_string(cap) + " attempts (seed " +
                               std::to_string(cfg_.seed) + ")");
            }
            std::vector<GeoPoint> draw(static_cast<std::size_t>(cfg_.n_balloons));
            for (auto& p : draw) {
                p = GeoPoint{pos_rng.uniform(-kPi, kPi),
                             std::asin(pos_rng.uniform(-1.0, 1.0)), cfg_.initial_altitude_m};
            }
            bool ok = false;
            for (const auto& p : draw) {
                for (const auto* e : active0) {
                    if (geodesic_distance(p, e->location, cfg_.planet) <= e->detection_radius_m) {
                        ok = true;
                        break;
                    }
                }
                if (ok) break;
            }
            if (!ok) continue;
            place(draw);
            return;
        }
        // No placement worked for this event draw; fall through to redraw.
    }
}

void Trial::sense_and_account(double t) {
    const OrbiterFix orbiter = propagate_orbit(cfg_.orbit, cfg_.planet, t);

    // Pass 1: detections (orbiter first, then balloons in index order).
    for (const auto& e : events_) {
        if (e.vei >= 2 && is_active(e, t) &&
            visible_from_orbiter(e.location, orbiter.position, cfg_.planet)) {
            const Detection d{e.id, e.location, t, e.vei, kOrbiterId};
            orbiter_db_.record(d);
            fleet_db_.record(d);
        }
    }
    const std::size_t n_events = events_.size();
    for (int b = 0; b < cfg_.n_balloons; ++b) {
        BalloonState& balloon = balloons_[b];
        for (std::size_t ei = 0; ei < n_events; ++ei) {
            const auto& e = events_[ei];
            const double d = geodesic_distance(balloon.position, e.location, cfg_.planet);
            distance_scratch_[b * n_events + ei] = d;
            if (is_active(e, t) && d <= e.detection_radius_m) {
                const Detection det{e.id, e.location, t, e.vei, b};
                balloon.db.record(det);
                fleet_db_.record(det);
            }
        }
    }

    // Pass 2: visit episodes (events count once started, active or concluded).
    const double visit_radius = cfg_.planner.visit_radius_m;
    for (int b = 0; b < cfg_.n_balloons; ++b) {
        for (std::size_t ei = 0; ei < n_events; ++ei) {
            const auto& e = events_[ei];
            Episode& ep = episodes_[b * n_events + ei];
            const double d = distance_scratch_[b * n_events + ei];
            const bool inside = t >= e.start_s && d <= visit_radius;
            if (inside) {
                if (!ep.open) {
                    ep.open = true;
                    ep.open_time = t;
                    ep.min_distance = d;
                    ep.steps_inside = 0;
                    ep.detected_before = fleet_db_.contains(e.id);
                    ep.latency = ep.detected_before ? t - fleet_db_.detection_time(e.id) : 0.0;
                } else {
                    ep.min_distance = std::min(ep.min_distance, d);
                }
                ep.steps_inside += 1;
            } else if (ep.open) {
                closed_visits_.push_back({e.id, b, ep.open_time, t, ep.min_distance,
                                          ep.steps_inside, ep.detected_before, ep.latency});
                ep.open = false;
            }
        }
    }

    if (trace_ && trace_->record_trajectory) {
        for (int b = 0; b < cfg_.n_balloons; ++b) {
            trace_->trajectory.push_back(
                {t, b, balloons_[b].position, balloons_[b].commanded_alt_m});
        }
    }
}

void Trial::sync(double t) {
    std::vector<GeoPoint> positions(static_cast<std::size_t>(cfg_.n_balloons));
    for (int b = 0; b < cfg_.n_balloons; ++b) positions[b] = balloons_[b].position;
    const OrbiterFix orbiter = propagate_orbit(cfg_.orbit, cfg_.planet, t);
    const auto links = links_available(positions, orbiter.position, cfg_.link, cfg_.planet);

    if (trace_ && trace_->record_links) {
        for (const auto& link : links) {
            double range, raw, constrained;
            if (link.b == kOrbiterId) {
                range = (orbiter.position - to_cartesian(positions[link.a], cfg_.planet)).norm();
                const DataRate r = data_rate(range, cfg_.link, cfg_.orbit.altitude_m, cfg_.planet);
                raw = r.raw_bps;
                constrained = r.constrained_bps;
            } else {
                range = geodesic_distance(positions[link.a], positions[link.b], cfg_.planet);
                const DataRate r = balloon_data_rate(std::max(range, 1.0), cfg_.link);
                raw = r.raw_bps;
                constrained = r.constrained_bps;
            }
            trace_->links.push_back({t, link.a, link.b, range, raw, constrained});
        }
    }

    // Merge to closure: agents in one connected component (orbiter included)
    // converge to the component-wise union, which also covers transitive
    // relays within the step.
    const int n_agents = cfg_.n_balloons + 1;  // orbiter last
    std::vector<int> parent(static_cast<std::size_t>(n_agents));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto agent_index = [&](int id) { return id == kOrbiterId ? n_agents - 1 : id; };
    for (const auto& link : links) {
        parent[find(agent_index(link.a))] = find(agent_index(link.b));
    }
    std::vector<EventDatabase> unions(static_cast<std::size_t>(n_agents));
    for (int a = 0; a < n_agents; ++a) {
        const EventDatabase& db = a == n_agents - 1 ? orbiter_db_ : balloons_[a].db;
        unions[find(a)].merge_from(db);
    }
    for (int a = 0; a < n_agents; ++a) {
        EventDatabase& db = a == n_agents - 1 ? orbiter_db_ : balloons_[a].db;
        db.merge_from(unions[find(a)]);
    }
}

void Trial::guide(double t) {
    switch (cfg_.mode) {
        case GuidanceMode::passive:
            return;  // neutral buoyancy: commanded altitude never changes
        case GuidanceMode::autonomous: {
            for (auto& balloon : balloons_) {
                const std::uint64_t h = balloon.db.id_set_hash();
                if (!balloon.has_planned || h != balloon.planned_hash) {
                    balloon.policy = planner_->policy_for(balloon.db);
                    balloon.planned_hash = h;
                    balloon.has_planned = true;
                }
                balloon.commanded_alt_m =
                    policy_lookup(*balloon.policy, balloon.position, cfg_.planet);
            }
            return;
        }
        case GuidanceMode::ground_in_the_loop: {
            // Earth contacts happen at fixed wall-clock times; they are
            // processed at the first simulation step at or past each time.
            while (next_contact_s_ <= t) {
                const std::uint64_t h = orbiter_db_.id_set_hash();
                if (!orbiter_db_.empty() && (!has_uplinked_ || h != last_uplinked_hash_)) {
                    queued_policy_ = planner_->policy_for(orbiter_db_);
                    last_uplinked_hash_ = h;
                    has_uplinked_ = true;
                }
                next_contact_s_ = next_ground_contact(cfg_.schedule, next_contact_s_);
            }
            if (queued_policy_) {
                // Deliver the newest queued snapshot over any orbiter link.
                const OrbiterFix orbiter = propagate_orbit(cfg_.orbit, cfg_.planet, t);
                for (auto& balloon : balloons_) {
                    if (balloon.policy == queued_policy_) continue;
                    if (elevation_angle(balloon.position, orbiter.position, cfg_.planet) >=
                        cfg_.link.min_elevation_rad) {
                        balloon.policy = queued_policy_;
                    }
                }
            }
            for (auto& balloon : balloons_) {
                if (balloon.policy) {
                    balloon.commanded_alt_m =
                        policy_lookup(*balloon.policy, balloon.position, cfg_.planet);
                }
            }
            return;
        }
    }
}

void Trial::step() {
    if (done()) throw SimError("step() past the trial horizon");
    const double dt = cfg_.time_step_s;
    const double t_now = step_index_ * dt;
    const double cos_floor = std::cos(deg_to_rad(cfg_.planner.cos_lat_floor_deg));

    for (auto& balloon : balloons_) {
        // Altitude moves toward the command at the controlled rate; wind is
        // sampled at the step's mid-altitude and the current position.
        const double max_move = cfg_.ascent_rate_mps * dt;
        const double delta = std::clamp(balloon.commanded_alt_m - balloon.position.alt,
                                        -max_move, max_move);
        const double alt_next = balloon.position.alt + delta;
        const double alt_mid = balloon.position.alt + 0.5 * delta;

        const WindSample w = sample_wind(
            *world_.wind, wind_start_s_ + t_now,
            GeoPoint{balloon.position.lon, balloon.position.lat, alt_mid});
        const double r = cfg_.planet.radius_m + alt_mid;
        const double lon = balloon.position.lon +
                           w.zonal * dt / (r * std::max(std::cos(balloon.position.lat), cos_floor));
        const double lat = balloon.position.lat + w.meridional * dt / r;
        balloon.position = GeoPoint::normalized(lon, lat, alt_next);
    }

    ++step_index_;
    const double t = step_index_ * dt;
    sense_and_account(t);
    sync(t);
    guide(t);
}

void Trial::run() {
    while (!done()) step();
}

TrialMetrics Trial::metrics() const {
    TrialMetrics m;
    m.total_events = static_cast<int>(events_.size());
    m.distinct_detections = static_cast<int>(fleet_db_.size());
    m.replans = planner_->solve_count();

    m.visits = closed_visits_;
    const double horizon = n_steps_ * cfg_.time_step_s;
    const std::size_t n_events = events_.size();
    for (int b = 0; b < cfg_.n_balloons; ++b) {
        for (std::size_t ei = 0; ei < n_events; ++ei) {
            const Episode& ep = episodes_[b * n_events + ei];
            if (ep.open) {
                m.visits.push_back({events_[ei].id, b, ep.open_time, horizon, ep.min_distance,
                                    ep.steps_inside, ep.detected_before, ep.latency});
            }
        }
    }
    std::sort(m.visits.begin(), m.visits.end(), [](const VisitRecord& a, const VisitRecord& b) {
        if (a.open_time_s != b.open_time_s) return a.open_time_s < b.open_time_s;
        if (a.balloon_id != b.balloon_id) return a.balloon_id < b.balloon_id;
        return a.event_id < b.event_id;
    });

    std::set<int> visited;
    for (const auto& v : m.visits) {
        visited.insert(v.event_id);
        if (!v.detected_before) ++m.serendipitous_visits;
        if (cfg_.per_step_visit_counting) {
            m.total_visits += v.steps_inside;
        } else {
            m.total_visits += 1;
        }
    }
    m.distinct_visits = static_cast<int>(visited.size());

    int visited_and_detected = 0;
    for (int id : visited) {
        if (fleet_db_.contains(id)) ++visited_and_detected;
    }
    m.pct_detected_visited = m.distinct_detections > 0
                                 ? 100.0 * visited_and_detected / m.distinct_detections
                                 : 0.0;
    m.pct_events_visited =
        m.total_events > 0 ? 100.0 * m.distinct_visits / m.total_events : 0.0;
    return m;
}

TrialMetrics run_trial(const TrialConfig& cfg, const SharedWorld& world, TrialTrace* trace) {
    Trial trial(cfg, world, trace);
    trial.run();
    return trial.metrics();
}

TrialMetrics run_trial(const TrialConfig& cfg) {
    return run_trial(cfg, build_world(cfg));
}

}  // namespace aeroguide
