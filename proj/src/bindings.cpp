#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "aeroguide/campaign.hpp"
#include "aeroguide/engine.hpp"

namespace py = pybind11;
using namespace aeroguide;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Balloon-fleet guidance and Monte Carlo simulation core";

    py::class_<PlanetModel>(m, "PlanetModel")
        .def(py::init<>())
        .def(py::init([](double radius_m, double mu) {
                 return PlanetModel{radius_m, mu};
             }),
             py::arg("radius_m"), py::arg("gravitational_parameter"))
        .def_readwrite("radius_m", &PlanetModel::radius_m)
        .def_readwrite("gravitational_parameter", &PlanetModel::gravitational_parameter);
    m.attr("VENUS") = kVenus;

    py::class_<GeoPoint>(m, "GeoPoint")
        .def(py::init([](double lon, double lat, double alt) {
                 return GeoPoint::normalized(lon, lat, alt);
             }),
             py::arg("lon"), py::arg("lat"), py::arg("alt") = 0.0)
        .def_static(
            "from_degrees",
            [](double lon_deg, double lat_deg, double alt) {
                return GeoPoint::normalized(deg_to_rad(lon_deg), deg_to_rad(lat_deg), alt);
            },
            py::arg("lon_deg"), py::arg("lat_deg"), py::arg("alt") = 0.0)
        .def_readonly("lon", &GeoPoint::lon)
        .def_readonly("lat", &GeoPoint::lat)
        .def_readonly("alt", &GeoPoint::alt)
        .def("__repr__", [](const GeoPoint& p) {
            std::ostringstream ss;
            ss << "GeoPoint(lon_deg=" << rad_to_deg(p.lon) << ", lat_deg=" << rad_to_deg(p.lat)
               << ", alt_m=" << p.alt << ")";
            return ss.str();
        });

    py::class_<Vec3>(m, "Vec3")
        .def_readonly("x", &Vec3::x)
        .def_readonly("y", &Vec3::y)
        .def_readonly("z", &Vec3::z)
        .def("norm", &Vec3::norm);

    py::enum_<OrbitDirection>(m, "OrbitDirection")
        .value("prograde", OrbitDirection::prograde)
        .value("retrograde", OrbitDirection::retrograde);

    py::class_<CircularOrbit>(m, "CircularOrbit")
        .def(py::init([](double altitude_m, double inclination_rad, double raan_rad,
                         double initial_phase_rad, OrbitDirection direction) {
                 return CircularOrbit{altitude_m, inclination_rad, raan_rad, initial_phase_rad,
                                      direction};
             }),
             py::arg("altitude_m"), py::arg("inclination_rad") = 0.0, py::arg("raan_rad") = 0.0,
             py::arg("initial_phase_rad") = 0.0, py::arg("direction") = OrbitDirection::prograde)
        .def_readwrite("altitude_m", &CircularOrbit::altitude_m)
        .def_readwrite("inclination_rad", &CircularOrbit::inclination_rad)
        .def("period_s", &CircularOrbit::period_s, py::arg("planet") = kVenus);
    m.def("vamos_orbit", &vamos_orbit);
    m.def("veritas_orbit", &veritas_orbit);

    py::class_<OrbiterFix>(m, "OrbiterFix")
        .def_readonly("position", &OrbiterFix::position)
        .def_readonly("sub_point", &OrbiterFix::sub_point);

    m.def("geodesic_distance", &geodesic_distance, py::arg("a"), py::arg("b"),
          py::arg("planet") = kVenus);
    m.def("propagate_orbit", &propagate_orbit, py::arg("orbit"), py::arg("planet"), py::arg("t"));
    m.def("elevation_angle", &elevation_angle, py::arg("observer"), py::arg("target"),
          py::arg("planet") = kVenus);
    m.def("visible_from_orbiter", &visible_from_orbiter, py::arg("surface_point"),
          py::arg("orbiter_position"), py::arg("planet") = kVenus);

    // Wind.
    py::class_<WindSynthesisParams>(m, "WindSynthesisParams")
        .def(py::init<>())
        .def_readwrite("n_lon", &WindSynthesisParams::n_lon)
        .def_readwrite("n_lat", &WindSynthesisParams::n_lat)
        .def_readwrite("n_alt", &WindSynthesisParams::n_alt)
        .def_readwrite("alt_min_m", &WindSynthesisParams::alt_min_m)
        .def_readwrite("alt_max_m", &WindSynthesisParams::alt_max_m)
        .def_readwrite("time_step_s", &WindSynthesisParams::time_step_s)
        .def_readwrite("horizon_s", &WindSynthesisParams::horizon_s)
        .def_readwrite("zonal_at_alt_min", &WindSynthesisParams::zonal_at_alt_min)
        .def_readwrite("zonal_at_alt_max", &WindSynthesisParams::zonal_at_alt_max)
        .def_readwrite("meridional_at_alt_min", &WindSynthesisParams::meridional_at_alt_min)
        .def_readwrite("meridional_at_alt_max", &WindSynthesisParams::meridional_at_alt_max)
        .def_readwrite("noise_zonal", &WindSynthesisParams::noise_zonal)
        .def_readwrite("noise_meridional", &WindSynthesisParams::noise_meridional)
        .def_readwrite("noise_modes", &WindSynthesisParams::noise_modes);

    py::class_<WindField, std::shared_ptr<WindField>>(m, "WindField")
        .def_property_readonly("time_axis", [](const WindField& f) { return to_array(f.time_axis()); })
        .def_property_readonly("lon_axis", [](const WindField& f) { return to_array(f.lon_axis()); })
        .def_property_readonly("lat_axis", [](const WindField& f) { return to_array(f.lat_axis()); })
        .def_property_readonly("alt_axis", [](const WindField& f) { return to_array(f.alt_axis()); })
        .def("sample",
             [](const WindField& f, double t, const GeoPoint& p) {
                 const WindSample s = sample_wind(f, t, p);
                 return std::make_pair(s.zonal, s.meridional);
             },
             py::arg("t"), py::arg("point"))
        .def("__repr__", [](const WindField& f) {
            std::ostringstream ss;
            ss << "WindField(" << f.n_time() << "x" << f.n_lon() << "x" << f.n_lat() << "x"
               << f.n_alt() << ")";
            return ss.str();
        });
    m.def("synthesize_wind_field", &synthesize_wind_field, py::arg("params"), py::arg("seed"));
    m.def("load_wind_field", py::overload_cast<const std::string&>(&load_wind_field),
          py::arg("path"));
    m.def("save_wind_field", py::overload_cast<const WindField&, const std::string&>(&save_wind_field),
          py::arg("field"), py::arg("path"));
    m.def("empirical_distribution",
          [](const WindField& f, int i, int j, int k) {
              std::vector<std::tuple<double, double, double>> atoms;
              for (const auto& a : empirical_distribution(f, i, j, k).atoms) {
                  atoms.emplace_back(a.zonal, a.meridional, a.weight);
              }
              return atoms;
          },
          py::arg("field"), py::arg("lon_idx"), py::arg("lat_idx"), py::arg("alt_idx"));

    // Events.
    py::class_<VolcanoSite>(m, "VolcanoSite")
        .def_readonly("id", &VolcanoSite::id)
        .def_readonly("location", &VolcanoSite::location)
        .def_readonly("size_class", &VolcanoSite::size_class);
    py::class_<VolcanicEvent>(m, "VolcanicEvent")
        .def_readonly("id", &VolcanicEvent::id)
        .def_readonly("site_id", &VolcanicEvent::site_id)
        .def_readonly("location", &VolcanicEvent::location)
        .def_readonly("vei", &VolcanicEvent::vei)
        .def_readonly("start_s", &VolcanicEvent::start_s)
        .def_readonly("duration_s", &VolcanicEvent::duration_s)
        .def_readonly("detection_radius_m", &VolcanicEvent::detection_radius_m)
        .def("is_active", [](const VolcanicEvent& e, double t) { return is_active(e, t); });
    py::class_<EruptionModel>(m, "EruptionModel")
        .def(py::init<>())
        .def_readwrite("vei_probabilities", &EruptionModel::vei_probabilities)
        .def_readwrite("duration_median_s_vei2", &EruptionModel::duration_median_s_vei2)
        .def_readwrite("duration_factor_per_vei", &EruptionModel::duration_factor_per_vei)
        .def_readwrite("duration_sigma_log", &EruptionModel::duration_sigma_log)
        .def_readwrite("site_rate_per_s", &EruptionModel::site_rate_per_s)
        .def_readwrite("rate_multiplier", &EruptionModel::rate_multiplier)
        .def_readwrite("radius_multiplier", &EruptionModel::radius_multiplier)
        .def_readwrite("back_window_s", &EruptionModel::back_window_s);
    m.def("detection_radius_for", &detection_radius_for, py::arg("vei"),
          py::arg("radius_multiplier") = 1.0);
    m.def("builtin_catalog", []() { return builtin_catalog(); });
    m.def("load_catalog", py::overload_cast<const std::string&>(&load_catalog), py::arg("path"));
    m.def("sample_events",
          [](const std::vector<VolcanoSite>& catalog, const EruptionModel& model, double horizon,
             std::uint64_t seed) { return sample_events(catalog, model, horizon, seed); },
          py::arg("catalog"), py::arg("model"), py::arg("horizon_s"), py::arg("seed"));

    // Sensing.
    py::class_<Detection>(m, "Detection")
        .def(py::init([](int event_id, const GeoPoint& location, double time_s, int vei,
                         int source) {
                 return Detection{event_id, location, time_s, vei, source};
             }),
             py::arg("event_id"), py::arg("location"), py::arg("time_s") = 0.0, py::arg("vei") = 2,
             py::arg("source") = -1)
        .def_readonly("event_id", &Detection::event_id)
        .def_readonly("estimated_location", &Detection::estimated_location)
        .def_readonly("time_s", &Detection::time_s)
        .def_readonly("vei", &Detection::vei)
        .def_readonly("source", &Detection::source);
    py::class_<EventDatabase>(m, "EventDatabase")
        .def(py::init<>())
        .def("record", &EventDatabase::record)
        .def("merge_from", &EventDatabase::merge_from)
        .def("contains", &EventDatabase::contains)
        .def("__len__", &EventDatabase::size)
        .def("detection_time", &EventDatabase::detection_time)
        .def("id_set_hash", &EventDatabase::id_set_hash)
        .def("ids", [](const EventDatabase& db) {
            std::vector<int> ids;
            for (const auto& [id, d] : db.entries()) ids.push_back(id);
            return ids;
        });
    m.def("merge", &merge, py::arg("a"), py::arg("b"));
    m.def("balloon_detect",
          [](const GeoPoint& p, const std::vector<VolcanicEvent>& events, double t, int balloon_id,
             const PlanetModel& planet) { return balloon_detect(p, events, t, balloon_id, planet); },
          py::arg("balloon"), py::arg("events"), py::arg("t"), py::arg("balloon_id") = 0,
          py::arg("planet") = kVenus);
    m.def("orbiter_detect",
          [](const Vec3& pos, const std::vector<VolcanicEvent>& events, double t,
             const PlanetModel& planet) { return orbiter_detect(pos, events, t, planet); },
          py::arg("orbiter_position"), py::arg("events"), py::arg("t"), py::arg("planet") = kVenus);

    // Planner.
    py::class_<Lattice>(m, "Lattice")
        .def(py::init(&Lattice::uniform), py::arg("n_lon"), py::arg("n_lat"), py::arg("n_alt"),
             py::arg("alt_min_m") = 47e3, py::arg("alt_max_m") = 63e3)
        .def_readonly("n_lon", &Lattice::n_lon)
        .def_readonly("n_lat", &Lattice::n_lat)
        .def_readonly("n_alt", &Lattice::n_alt)
        .def("n_nodes", &Lattice::n_nodes)
        .def("node_point", &Lattice::node_point);
    py::enum_<SweepOrder>(m, "SweepOrder")
        .value("alternating", SweepOrder::alternating)
        .value("forward", SweepOrder::forward)
        .value("jacobi", SweepOrder::jacobi);
    py::class_<PlannerConfig>(m, "PlannerConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &PlannerConfig::gamma)
        .def_readwrite("r_eruption", &PlannerConfig::r_eruption)
        .def_readwrite("r_energy_per_m", &PlannerConfig::r_energy_per_m)
        .def_readwrite("r_altitude", &PlannerConfig::r_altitude)
        .def_readwrite("visit_radius_m", &PlannerConfig::visit_radius_m)
        .def_readwrite("location_sigma_m", &PlannerConfig::location_sigma_m)
        .def_readwrite("time_step_s", &PlannerConfig::time_step_s)
        .def_readwrite("action_step_m", &PlannerConfig::action_step_m)
        .def_readwrite("tolerance", &PlannerConfig::tolerance)
        .def_readwrite("max_iterations", &PlannerConfig::max_iterations)
        .def_readwrite("max_atoms_per_cell", &PlannerConfig::max_atoms_per_cell)
        .def_readwrite("sweep", &PlannerConfig::sweep);
    m.def("nominal_planner_config", &nominal_planner_config);
    m.def("legal_actions", &legal_actions, py::arg("lattice"), py::arg("node"),
          py::arg("action_step_m") = 1000.0);

    py::class_<TransitionModel, std::shared_ptr<TransitionModel>>(m, "TransitionModel")
        .def_property_readonly("n_pairs", &TransitionModel::n_pairs);
    m.def("build_transitions",
          [](const WindField& wind, const Lattice& lattice, const PlannerConfig& cfg,
             const PlanetModel& planet) {
              return std::make_shared<TransitionModel>(build_transitions(wind, lattice, cfg, planet));
          },
          py::arg("wind"), py::arg("lattice"), py::arg("config"), py::arg("planet") = kVenus);
    m.def("visit_probability", &visit_probability, py::arg("distance_m"), py::arg("visit_radius_m"),
          py::arg("sigma_m"));

    py::class_<GuidancePolicy, std::shared_ptr<GuidancePolicy>>(m, "GuidancePolicy")
        .def_property_readonly("values", [](const GuidancePolicy& p) { return to_array(p.values); })
        .def_property_readonly("commanded_alt",
                               [](const GuidancePolicy& p) { return to_array(p.commanded_alt); })
        .def_readonly("iterations", &GuidancePolicy::iterations)
        .def_readonly("residual", &GuidancePolicy::residual)
        .def_readonly("converged", &GuidancePolicy::converged)
        .def_property_readonly("lattice", [](const GuidancePolicy& p) { return p.lattice; })
        .def("lookup",
             [](const GuidancePolicy& p, const GeoPoint& state, const PlanetModel& planet) {
                 return policy_lookup(p, state, planet);
             },
             py::arg("state"), py::arg("planet") = kVenus);
    m.def("save_policy", py::overload_cast<const GuidancePolicy&, const std::string&>(&save_policy),
          py::arg("policy"), py::arg("path"));
    m.def("load_policy", py::overload_cast<const std::string&>(&load_policy), py::arg("path"));
    m.def("plan_policy",
          [](std::shared_ptr<TransitionModel> transitions, const EventDatabase& db,
             const PlannerConfig& cfg, const PlanetModel& planet) {
              PlannerService service(std::move(transitions), cfg, planet);
              return std::make_shared<GuidancePolicy>(*service.policy_for(db));
          },
          py::arg("transitions"), py::arg("events"), py::arg("config"), py::arg("planet") = kVenus);

    // Comms.
    py::class_<LinkModel>(m, "LinkModel")
        .def(py::init<>())
        .def_readwrite("balloon_range_m", &LinkModel::balloon_range_m)
        .def_readwrite("min_elevation_rad", &LinkModel::min_elevation_rad)
        .def_readwrite("tx_power_w", &LinkModel::tx_power_w)
        .def_readwrite("balloon_antenna_gain_db", &LinkModel::balloon_antenna_gain_db)
        .def_readwrite("orbiter_antenna_gain_db", &LinkModel::orbiter_antenna_gain_db)
        .def_readwrite("system_loss_db", &LinkModel::system_loss_db)
        .def_readwrite("noise_temperature_k", &LinkModel::noise_temperature_k)
        .def_readwrite("frequency_hz", &LinkModel::frequency_hz)
        .def_readwrite("required_ebn0_db", &LinkModel::required_ebn0_db)
        .def_readwrite("bandwidth_hz", &LinkModel::bandwidth_hz);
    py::class_<DataRate>(m, "DataRate")
        .def_readonly("raw_bps", &DataRate::raw_bps)
        .def_readonly("constrained_bps", &DataRate::constrained_bps);
    m.def("data_rate", &data_rate, py::arg("range_m"), py::arg("model"),
          py::arg("orbiter_altitude_m"), py::arg("planet") = kVenus);
    m.def("balloon_data_rate", &balloon_data_rate, py::arg("range_m"), py::arg("model"));
    m.def("disc_coverage_gain_db", &disc_coverage_gain_db, py::arg("orbit_altitude_m"),
          py::arg("planet") = kVenus);

    // Engine.
    py::enum_<GuidanceMode>(m, "GuidanceMode")
        .value("autonomous", GuidanceMode::autonomous)
        .value("ground_in_the_loop", GuidanceMode::ground_in_the_loop)
        .value("passive", GuidanceMode::passive);
    py::class_<TrialConfig>(m, "TrialConfig")
        .def(py::init<>())
        .def_readwrite("seed", &TrialConfig::seed)
        .def_readwrite("n_balloons", &TrialConfig::n_balloons)
        .def_readwrite("horizon_s", &TrialConfig::horizon_s)
        .def_readwrite("time_step_s", &TrialConfig::time_step_s)
        .def_readwrite("mode", &TrialConfig::mode)
        .def_readwrite("orbit", &TrialConfig::orbit)
        .def_readwrite("radius_multiplier", &TrialConfig::radius_multiplier)
        .def_readwrite("rate_multiplier", &TrialConfig::rate_multiplier)
        .def_readwrite("initial_altitude_m", &TrialConfig::initial_altitude_m)
        .def_readwrite("eruption", &TrialConfig::eruption)
        .def_readwrite("lattice", &TrialConfig::lattice)
        .def_readwrite("planner", &TrialConfig::planner)
        .def_readwrite("link", &TrialConfig::link);
    py::class_<VisitRecord>(m, "VisitRecord")
        .def_readonly("event_id", &VisitRecord::event_id)
        .def_readonly("balloon_id", &VisitRecord::balloon_id)
        .def_readonly("open_time_s", &VisitRecord::open_time_s)
        .def_readonly("close_time_s", &VisitRecord::close_time_s)
        .def_readonly("min_distance_m", &VisitRecord::min_distance_m)
        .def_readonly("detected_before", &VisitRecord::detected_before)
        .def_readonly("latency_s", &VisitRecord::latency_s);
    py::class_<TrialMetrics>(m, "TrialMetrics")
        .def_readonly("distinct_detections", &TrialMetrics::distinct_detections)
        .def_readonly("distinct_visits", &TrialMetrics::distinct_visits)
        .def_readonly("total_visits", &TrialMetrics::total_visits)
        .def_readonly("serendipitous_visits", &TrialMetrics::serendipitous_visits)
        .def_readonly("pct_detected_visited", &TrialMetrics::pct_detected_visited)
        .def_readonly("pct_events_visited", &TrialMetrics::pct_events_visited)
        .def_readonly("total_events", &TrialMetrics::total_events)
        .def_readonly("visits", &TrialMetrics::visits);
    py::class_<SharedWorld>(m, "SharedWorld");
    m.def("build_world", &build_world, py::arg("config"));
    m.def("run_trial", py::overload_cast<const TrialConfig&>(&run_trial), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_trial_in_world",
          [](const TrialConfig& cfg, const SharedWorld& world) { return run_trial(cfg, world); },
          py::arg("config"), py::arg("world"), py::call_guard<py::gil_scoped_release>());

    // Campaign.
    m.def("parse_config", &parse_config, py::arg("json_text"), py::arg("name") = "config");
    m.def("serialize_config",
          [](const CampaignSpec& spec) { return serialize_config(spec); });
    py::class_<CampaignSpec>(m, "CampaignSpec")
        .def(py::init<>())
        .def_readwrite("base", &CampaignSpec::base)
        .def_readwrite("n_trials", &CampaignSpec::n_trials)
        .def_readwrite("workers", &CampaignSpec::workers)
        .def_readwrite("out_dir", &CampaignSpec::out_dir)
        .def_readwrite("seed", &CampaignSpec::seed);
    py::class_<MetricStats>(m, "MetricStats")
        .def_readonly("mean", &MetricStats::mean)
        .def_readonly("stddev", &MetricStats::stddev)
        .def_readonly("min", &MetricStats::min)
        .def_readonly("max", &MetricStats::max)
        .def_readonly("q25", &MetricStats::q25)
        .def_readonly("q50", &MetricStats::q50)
        .def_readonly("q75", &MetricStats::q75);
    m.def("run_cell",
          [](const TrialConfig& cfg, int n_trials, int workers, std::uint64_t seed,
             const SharedWorld& world) {
              CellResult result;
              {
                  py::gil_scoped_release release;
                  result = run_cell(cfg, n_trials, workers, seed, world);
              }
              py::dict stats;
              for (const auto& [name, s] : result.stats) stats[name.c_str()] = s;
              py::dict out;
              out["stats"] = stats;
              out["trials"] = result.trials;
              return out;
          },
          py::arg("config"), py::arg("n_trials"), py::arg("workers"), py::arg("seed"),
          py::arg("world"));
}
