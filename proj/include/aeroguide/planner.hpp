#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aeroguide/geo.hpp"
#include "aeroguide/sensing.hpp"
#include "aeroguide/wind.hpp"

namespace aeroguide {

/// Uniform planning lattice over (lon, lat, alt). Longitude is periodic with
/// nodes at cell centers; latitude nodes are cell centers (poles excluded);
/// altitude nodes are evenly spaced levels spanning the flight envelope.
struct Lattice {
    int n_lon = 48;
    int n_lat = 24;
    int n_alt = 17;
    double alt_min_m = 47'000.0;
    double alt_max_m = 63'000.0;

    static Lattice uniform(int n_lon, int n_lat, int n_alt, double alt_min_m = 47'000.0,
                           double alt_max_m = 63'000.0);

    double dlon() const { return kTwoPi / n_lon; }
    double dlat() const { return kPi / n_lat; }
    double dalt() const { return (alt_max_m - alt_min_m) / (n_alt - 1); }

    double lon_node(int i) const { return -kPi + (i + 0.5) * dlon(); }
    double lat_node(int j) const { return -kPi / 2 + (j + 0.5) * dlat(); }
    double alt_node(int k) const { return alt_min_m + k * dalt(); }

    int n_nodes() const { return n_lon * n_lat * n_alt; }
    int n_horizontal() const { return n_lon * n_lat; }
    int node_id(int i, int j, int k) const { return k * n_horizontal() + j * n_lon + i; }
    int horizontal_id(int node) const { return node % n_horizontal(); }
    int alt_level(int node) const { return node / n_horizontal(); }
    GeoPoint node_point(int node) const;
};

enum class SweepOrder { alternating, forward, jacobi };

struct PlannerConfig {
    double gamma = 0.995;
    double r_eruption = 1e3;
    double r_energy_per_m = 0.0;
    double r_altitude = -1e6;          // terminal penalty outside the envelope
    double visit_radius_m = 50e3;
    double location_sigma_m = 0.0;     // isotropic event-location error for rewards
    double time_step_s = 3600.0;
    double action_step_m = 1000.0;
    double tolerance = 1.0;            // max value change per sweep
    int max_iterations = 400;
    int max_atoms_per_cell = 9;        // velocity-space compression bound
    double cos_lat_floor_deg = 89.5;   // guards the cos(lat) displacement singularity
    SweepOrder sweep = SweepOrder::alternating;
};

/// Commanded altitudes reachable from a node: hold, climb one step, descend
/// one step, clamped to the envelope. 1-3 distinct values, ascending.
std::vector<double> legal_actions(const Lattice& lattice, int node, double action_step_m = 1000.0);

struct InterpEntry {
    int node = 0;
    double weight = 0.0;
};

/// Inverse-distance weights over the vertices of the lattice cell enclosing
/// the query point (distances in cell-normalized coordinates; a coordinate
/// that sits exactly on a lattice plane collapses that dimension, and an
/// exact node hit returns that node with weight 1).
std::vector<InterpEntry> interpolation_weights(const Lattice& lattice, const GeoPoint& query);

/// One stochastic successor: the continuous state the balloon drifts to when
/// this wind atom realizes, and the atom's probability.
struct SuccessorAtom {
    GeoPoint position;
    double probability = 0.0;
};

/// Stochastic transition lattice: for every (node, commanded altitude) pair,
/// the list of continuous successor states with their probabilities, plus a
/// pre-interpolated sparse row over lattice nodes used by the solver.
struct TransitionModel {
    Lattice lattice;
    double time_step_s = 3600.0;

    std::vector<std::uint32_t> node_pair_begin;    // n_nodes + 1
    std::vector<double> pair_target_alt;           // commanded altitude per pair
    std::vector<double> pair_terminal_weight;      // mass leaving the envelope
    std::vector<std::uint32_t> pair_atom_begin;    // n_pairs + 1
    std::vector<SuccessorAtom> atoms;
    std::vector<std::uint32_t> pair_entry_begin;   // n_pairs + 1
    std::vector<std::uint32_t> entry_node;
    std::vector<double> entry_weight;

    int n_pairs() const { return static_cast<int>(pair_target_alt.size()); }
};

TransitionModel build_transitions(const WindField& wind, const Lattice& lattice,
                                  const PlannerConfig& cfg, const PlanetModel& planet);

/// Probability that a state at the given horizontal distance from an event's
/// estimated location lies within the visit radius, under an isotropic
/// (tangent-plane) Gaussian location error. sigma = 0 degenerates to the
/// sharp indicator.
double visit_probability(double distance_m, double visit_radius_m, double sigma_m);

/// Eruption reward accumulated per horizontal lattice node for a database of
/// detected events.
std::vector<double> eruption_reward_field(const Lattice& lattice, const EventDatabase& db,
                                          const PlannerConfig& cfg, const PlanetModel& planet);

/// One-step reward of commanding altitude `commanded_alt_m` from a node.
double reward(const Lattice& lattice, int node, double commanded_alt_m, const EventDatabase& db,
              const PlannerConfig& cfg, const PlanetModel& planet);

struct GuidancePolicy {
    Lattice lattice;
    std::vector<double> values;           // V* per node
    std::vector<double> commanded_alt;    // optimal commanded altitude per node
    std::uint64_t event_set_hash = 0;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history; // per-sweep max value change
    bool converged = true;
};

/// Solve the Bellman fixed point on the lattice. Successor values are
/// interpolated per `interpolation_weights`; ties in the argmax prefer
/// holding altitude, then the lower commanded altitude. A warm start (values
/// from a previous solve) may be supplied.
GuidancePolicy value_iteration(const TransitionModel& transitions,
                               std::span<const double> eruption_reward, const PlannerConfig& cfg,
                               std::span<const double> warm_start = {});

/// Commanded altitude of the lattice node nearest to a continuous state
/// (geodesic horizontal distance combined with altitude offset; ties resolved
/// toward the lowest node index).
double policy_lookup(const GuidancePolicy& policy, const GeoPoint& state, const PlanetModel& planet);
int nearest_node(const Lattice& lattice, const GeoPoint& state, const PlanetModel& planet);

/// Binary policy snapshot (lattice axes + V* + commanded altitudes) used for
/// the ground uplink path and for rendering value/policy maps.
void save_policy(const GuidancePolicy& policy, const std::string& path);
void save_policy(const GuidancePolicy& policy, std::ostream& out);
GuidancePolicy load_policy(const std::string& path);
GuidancePolicy load_policy(std::istream& in, const std::string& name);

/// Per-trial planner front end: caches policies by detected-event-set hash,
/// reuses per-event reward fields, and warm-starts successive solves.
class PlannerService {
public:
    PlannerService(std::shared_ptr<const TransitionModel> transitions, PlannerConfig cfg,
                   PlanetModel planet);

    std::shared_ptr<const GuidancePolicy> policy_for(const EventDatabase& db);

    int solve_count() const { return solve_count_; }
    const PlannerConfig& config() const { return cfg_; }

private:
    std::shared_ptr<const TransitionModel> transitions_;
    PlannerConfig cfg_;
    PlanetModel planet_;
    std::unordered_map<std::uint64_t, std::shared_ptr<const GuidancePolicy>> cache_;
    std::unordered_map<int, std::vector<std::pair<int, double>>> event_fields_;
    std::vector<double> warm_;
    int solve_count_ = 0;
};

}  // namespace aeroguide
