#include <algorithm>
#include <cmath>
#include <sstream>

#include "aeroguide/errors.hpp"
#include "aeroguide/planner.hpp"
#include "aeroguide/rng.hpp"
#include "doctest.h"

using namespace aeroguide;

namespace {

// ---------------------------------------------------------------------------
// Independent oracle machinery: a straightforward finite-horizon dynamic
// program over the transition model's successor atoms, with its own
// implementation of the cell-vertex inverse-distance interpolation rule.
// ---------------------------------------------------------------------------

double oracle_interpolate(const Lattice& lat, const GeoPoint& q, const std::vector<double>& v) {
    const double eps = 1e-9;
    double u = (wrap_longitude(q.lon) - lat.lon_node(0)) / lat.dlon();
    u -= std::floor(u / lat.n_lon) * lat.n_lon;
    double w = std::clamp((clamp_latitude(q.lat) - lat.lat_node(0)) / lat.dlat(), 0.0,
                          static_cast<double>(lat.n_lat - 1));
    double z = std::clamp((q.alt - lat.alt_min_m) / lat.dalt(), 0.0,
                          static_cast<double>(lat.n_alt - 1));

    auto axis_indices = [&](double x, int n, bool periodic) {
        std::vector<std::pair<int, double>> out;  // (index, offset from x in cells)
        int lo = static_cast<int>(x);
        if (!periodic && lo > n - 2) lo = n - 2;
        const double f = x - lo;
        if (f < eps) {
            out.push_back({lo % n, 0.0});
        } else if (f > 1.0 - eps) {
            out.push_back({(lo + 1) % n, 0.0});
        } else {
            out.push_back({lo % n, f});
            out.push_back({(lo + 1) % n, 1.0 - f});
        }
        return out;
    };
    const auto lon_ix = axis_indices(u, lat.n_lon, true);
    const auto lat_ix = axis_indices(w, lat.n_lat, false);
    const auto alt_ix = axis_indices(z, lat.n_alt, false);

    double weight_sum = 0.0, acc = 0.0;
    for (const auto& [i, du] : lon_ix) {
        for (const auto& [j, dv] : lat_ix) {
            for (const auto& [k, dw] : alt_ix) {
                const double dist = std::sqrt(du * du + dv * dv + dw * dw);
                const int node = lat.node_id(i, j, k);
                if (dist < 1e-12) return v[static_cast<std::size_t>(node)];
                const double inv = 1.0 / dist;
                weight_sum += inv;
                acc += inv * v[static_cast<std::size_t>(node)];
            }
        }
    }
    return acc / weight_sum;
}

struct OracleResult {
    std::vector<double> values;
    std::vector<double> policy;
};

OracleResult oracle_finite_horizon(const TransitionModel& tm,
                                   const std::vector<double>& eruption_reward,
                                   const PlannerConfig& cfg, int horizon) {
    const Lattice& lat = tm.lattice;
    const int n = lat.n_nodes();
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    std::vector<double> next(v);
    auto q_value = [&](int node, std::uint32_t pair, const std::vector<double>& src) {
        const double node_alt = lat.alt_node(lat.alt_level(node));
        double q = eruption_reward[static_cast<std::size_t>(lat.horizontal_id(node))] -
                   std::abs(node_alt - tm.pair_target_alt[pair]) * cfg.r_energy_per_m;
        double acc = 0.0;
        for (std::uint32_t a = tm.pair_atom_begin[pair]; a < tm.pair_atom_begin[pair + 1]; ++a) {
            acc += tm.atoms[a].probability * oracle_interpolate(lat, tm.atoms[a].position, src);
        }
        q += cfg.gamma * (acc + tm.pair_terminal_weight[pair] * cfg.r_altitude);
        return q;
    };
    for (int step = 0; step < horizon; ++step) {
        for (int node = 0; node < n; ++node) {
            double best = -1e300;
            for (std::uint32_t p = tm.node_pair_begin[node]; p < tm.node_pair_begin[node + 1];
                 ++p) {
                best = std::max(best, q_value(node, p, v));
            }
            next[static_cast<std::size_t>(node)] = best;
        }
        v.swap(next);
    }
    // Greedy policy with the documented tie-break: hold first, then the lower
    // commanded altitude, ties detected at a value-scale-relative epsilon.
    OracleResult out;
    out.values = v;
    out.policy.resize(static_cast<std::size_t>(n));
    for (int node = 0; node < n; ++node) {
        const double node_alt = lat.alt_node(lat.alt_level(node));
        double qmax = -1e300, scale = 0.0;
        std::vector<std::pair<double, double>> qs;  // (target, q)
        for (std::uint32_t p = tm.node_pair_begin[node]; p < tm.node_pair_begin[node + 1]; ++p) {
            const double q = q_value(node, p, v);
            qs.push_back({tm.pair_target_alt[p], q});
            qmax = std::max(qmax, q);
            scale = std::max(scale, std::abs(q));
        }
        const double tie_eps = 1e-9 * scale;
        double chosen = 0.0;
        bool chosen_hold = false, have = false;
        for (const auto& [target, q] : qs) {
            if (q < qmax - tie_eps) continue;
            const bool hold = target == node_alt;
            if (!have || (hold && !chosen_hold) || (hold == chosen_hold && target < chosen)) {
                chosen = target;
                chosen_hold = hold;
                have = true;
            }
        }
        out.policy[static_cast<std::size_t>(node)] = chosen;
    }
    return out;
}

// Wind field whose grid matches a small lattice, with n_steps time samples
// (so each cell's empirical distribution has at most n_steps atoms).
WindField lattice_wind(const Lattice& lat, int n_steps, std::uint64_t seed, double amplitude) {
    std::vector<double> t(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) t[i] = i * 3600.0;
    std::vector<double> lon(static_cast<std::size_t>(lat.n_lon));
    for (int i = 0; i < lat.n_lon; ++i) lon[i] = lat.lon_node(i);
    std::vector<double> latv(static_cast<std::size_t>(lat.n_lat));
    for (int j = 0; j < lat.n_lat; ++j) latv[j] = lat.lat_node(j);
    std::vector<double> alt(static_cast<std::size_t>(lat.n_alt));
    for (int k = 0; k < lat.n_alt; ++k) alt[k] = lat.alt_node(k);
    const std::size_t n = t.size() * lon.size() * latv.size() * alt.size();
    std::vector<double> u(n), v(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = rng.uniform(-amplitude, amplitude);
        v[i] = rng.uniform(-amplitude, amplitude);
    }
    return WindField::create(t, lon, latv, alt, u, v);
}

WindField uniform_wind(const Lattice& lat, double u_value, double v_value) {
    WindField base = lattice_wind(lat, 1, 1, 0.0);
    std::vector<double> u(base.zonal().size(), u_value), v(base.zonal().size(), v_value);
    return WindField::create(base.time_axis(), base.lon_axis(), base.lat_axis(), base.alt_axis(),
                             u, v);
}

// Brute-force reference for visit_probability: tangent-plane 2D Gaussian
// integrated over the visit disc on a fine polar grid.
double visit_probability_oracle(double d, double R, double sigma) {
    const int nr = 800, na = 400;
    double acc = 0.0;
    for (int ir = 0; ir < nr; ++ir) {
        const double r = (ir + 0.5) * R / nr;
        for (int ia = 0; ia < na; ++ia) {
            const double ang = (ia + 0.5) * kTwoPi / na;
            const double dx = r * std::cos(ang) - d;
            const double dy = r * std::sin(ang);
            acc += r * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    }
    return acc * (R / nr) * (kTwoPi / na) / (kTwoPi * sigma * sigma);
}

}  // namespace

TEST_CASE("legal actions: hold/climb/descend with envelope clamping") {
    const Lattice lat = Lattice::uniform(4, 4, 17, 47e3, 63e3);
    const int mid = lat.node_id(0, 0, 8);  // 55 km
    CHECK(legal_actions(lat, mid) == std::vector<double>{54e3, 55e3, 56e3});
    const int top = lat.node_id(0, 0, 16);  // 63 km
    CHECK(legal_actions(lat, top) == std::vector<double>{62e3, 63e3});
    const int bottom = lat.node_id(0, 0, 0);  // 47 km
    CHECK(legal_actions(lat, bottom) == std::vector<double>{47e3, 48e3});
}

TEST_CASE("interpolation weights: nonnegative, normalized, exact at vertices") {
    const Lattice lat = Lattice::uniform(8, 6, 3, 54e3, 56e3);
    Rng rng(19);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint q{rng.uniform(-kPi, kPi), rng.uniform(-kPi / 2, kPi / 2),
                         rng.uniform(54e3, 56e3)};
        const auto entries = interpolation_weights(lat, q);
        REQUIRE_FALSE(entries.empty());
        double sum = 0.0;
        for (const auto& e : entries) {
            CHECK(e.weight >= 0.0);
            sum += e.weight;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // A query on a node reproduces that node exactly.
    for (int i = 0; i < 50; ++i) {
        const int io = static_cast<int>(rng.uniform_index(lat.n_lon));
        const int jo = static_cast<int>(rng.uniform_index(lat.n_lat));
        const int ko = static_cast<int>(rng.uniform_index(lat.n_alt));
        const GeoPoint q{lat.lon_node(io), lat.lat_node(jo), lat.alt_node(ko)};
        const auto entries = interpolation_weights(lat, q);
        REQUIRE(entries.size() == 1);
        CHECK(entries[0].node == lat.node_id(io, jo, ko));
        CHECK(entries[0].weight == 1.0);
    }
}

TEST_CASE("transitions: deterministic wind gives one successor per action") {
    const Lattice lat = Lattice::uniform(6, 5, 2, 54e3, 55e3);
    const WindField wind = uniform_wind(lat, 50.0, 0.0);
    PlannerConfig cfg;
    cfg.time_step_s = 3600.0;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);

    for (int node = 0; node < lat.n_nodes(); ++node) {
        for (std::uint32_t p = tm.node_pair_begin[node]; p < tm.node_pair_begin[node + 1]; ++p) {
            const std::uint32_t n_atoms = tm.pair_atom_begin[p + 1] - tm.pair_atom_begin[p];
            REQUIRE(n_atoms == 1);
            const auto& atom = tm.atoms[tm.pair_atom_begin[p]];
            CHECK(atom.probability == doctest::Approx(1.0).epsilon(1e-12));
            // The successor altitude equals the commanded altitude.
            CHECK(atom.position.alt == tm.pair_target_alt[p]);
        }
    }

    // Displacement against the analytic kernel at the equatorial node row:
    // dphi = u * dt / ((R + h) cos(lat)).
    const int j_eq = 2;  // lat_node(2) == 0 for n_lat = 5
    REQUIRE(lat.lat_node(j_eq) == doctest::Approx(0.0).epsilon(1e-12));
    const int node = lat.node_id(1, j_eq, 1);  // 55 km level
    const std::uint32_t pair = tm.node_pair_begin[node] + 1;  // hold (54k, then 55k)
    CHECK(tm.pair_target_alt[pair] == 55e3);
    const auto& atom = tm.atoms[tm.pair_atom_begin[pair]];
    const double expected_dlon = 50.0 * 3600.0 / (kVenus.radius_m + 55e3);
    CHECK(atom.position.lon - lat.lon_node(1) == doctest::Approx(expected_dlon).epsilon(1e-9));
    CHECK(atom.position.lat == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("transitions: zero wind keeps the successor at the node") {
    const Lattice lat = Lattice::uniform(5, 4, 2, 54e3, 55e3);
    const WindField wind = uniform_wind(lat, 0.0, 0.0);
    PlannerConfig cfg;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        const GeoPoint p = lat.node_point(node);
        for (std::uint32_t pr = tm.node_pair_begin[node]; pr < tm.node_pair_begin[node + 1]; ++pr) {
            const auto& atom = tm.atoms[tm.pair_atom_begin[pr]];
            CHECK(atom.position.lon == doctest::Approx(p.lon).epsilon(1e-12));
            CHECK(atom.position.lat == doctest::Approx(p.lat).epsilon(1e-12));
        }
    }
}

TEST_CASE("transition probabilities sum to one per (node, action)") {
    const Lattice lat = Lattice::uniform(6, 5, 3, 54e3, 56e3);
    const WindField wind = lattice_wind(lat, 7, 99, 60.0);
    PlannerConfig cfg;
    cfg.max_atoms_per_cell = 4;  // force compression
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    for (int pair = 0; pair < tm.n_pairs(); ++pair) {
        double atom_sum = tm.pair_terminal_weight[static_cast<std::size_t>(pair)];
        for (std::uint32_t a = tm.pair_atom_begin[pair]; a < tm.pair_atom_begin[pair + 1]; ++a) {
            atom_sum += tm.atoms[a].probability;
        }
        CHECK(atom_sum == doctest::Approx(1.0).epsilon(1e-9));
        double entry_sum = 0.0;
        for (std::uint32_t e = tm.pair_entry_begin[pair]; e < tm.pair_entry_begin[pair + 1]; ++e) {
            entry_sum += tm.entry_weight[e];
        }
        CHECK(entry_sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("transition build rejects a lattice outside the wind envelope") {
    const Lattice small = Lattice::uniform(5, 4, 2, 54e3, 55e3);
    const WindField wind = uniform_wind(small, 10.0, 0.0);
    const Lattice tall = Lattice::uniform(5, 4, 17, 47e3, 63e3);
    PlannerConfig cfg;
    CHECK_THROWS_AS(build_transitions(wind, tall, cfg, kVenus), ConfigError);
}

TEST_CASE("visit probability: sharp indicator and Gaussian smearing") {
    CHECK(visit_probability(49'999.0, 50e3, 0.0) == 1.0);
    CHECK(visit_probability(50'001.0, 50e3, 0.0) == 0.0);
    CHECK(visit_probability(50e3, 50e3, 0.0) == 1.0);

    Rng rng(29);
    for (int i = 0; i < 25; ++i) {
        const double R = rng.uniform(30e3, 80e3);
        const double sigma = rng.uniform(20e3, 500e3);
        const double d = rng.uniform(0.0, R + 6.0 * sigma);
        const double got = visit_probability(d, R, sigma);
        const double want = visit_probability_oracle(d, R, sigma);
        CHECK(got == doctest::Approx(want).epsilon(5e-3));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
    // Monotone nonincreasing in distance.
    double prev = 2.0;
    for (double d = 0.0; d <= 400e3; d += 10e3) {
        const double p = visit_probability(d, 50e3, 120e3);
        CHECK(p <= prev + 1e-12);
        prev = p;
    }
}

TEST_CASE("reward: pinned point-mass cases") {
    const Lattice lat = Lattice::uniform(8, 5, 3, 54e3, 56e3);
    PlannerConfig cfg;  // sigma = 0, r_energy = 0, r_eruption = 1e3
    const int node = lat.node_id(2, 2, 1);
    const GeoPoint np = lat.node_point(node);

    EventDatabase none;
    for (double action : legal_actions(lat, node)) {
        CHECK(reward(lat, node, action, none, cfg, kVenus) == 0.0);
    }

    // Event 10 km east of the node: inside the 50 km visit radius.
    EventDatabase nearby;
    nearby.record({1, GeoPoint::normalized(np.lon + 10e3 / kVenus.radius_m, np.lat, 0.0), 0.0, 3, 0});
    CHECK(reward(lat, node, np.alt, nearby, cfg, kVenus) == doctest::Approx(1e3).epsilon(1e-12));

    // Event 60 km away: outside.
    EventDatabase far;
    far.record({2, GeoPoint::normalized(np.lon + 60e3 / kVenus.radius_m, np.lat, 0.0), 0.0, 3, 0});
    CHECK(reward(lat, node, np.alt, far, cfg, kVenus) == 0.0);

    // Energy term.
    PlannerConfig paid = cfg;
    paid.r_energy_per_m = 2.0;
    CHECK(reward(lat, node, np.alt + 1000.0, nearby, paid, kVenus) ==
          doctest::Approx(1e3 - 2000.0).epsilon(1e-12));
}

TEST_CASE("value iteration: zero rewards converge immediately to zero") {
    const Lattice lat = Lattice::uniform(5, 4, 2, 54e3, 55e3);
    const WindField wind = lattice_wind(lat, 3, 5, 40.0);
    PlannerConfig cfg;
    cfg.gamma = 0.9;
    cfg.tolerance = 1e-9;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    const std::vector<double> zero(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
    const GuidancePolicy policy = value_iteration(tm, zero, cfg);
    CHECK(policy.converged);
    CHECK(policy.iterations == 1);
    CHECK(policy.residual == 0.0);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        CHECK(policy.values[node] == 0.0);
        // Tie-break: hold.
        CHECK(policy.commanded_alt[node] == lat.alt_node(lat.alt_level(node)));
    }
}

TEST_CASE("value iteration: recurrent reward gives the geometric series") {
    const Lattice lat = Lattice::uniform(4, 4, 2, 54e3, 55e3);
    const WindField wind = uniform_wind(lat, 0.0, 0.0);  // hold still
    PlannerConfig cfg;
    cfg.gamma = 0.9;
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 500;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    std::vector<double> field(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
    field[5] = 1.0;
    const GuidancePolicy policy = value_iteration(tm, field, cfg);
    CHECK(policy.converged);
    CHECK(policy.values[lat.node_id(5 % 4, 5 / 4, 0)] ==
          doctest::Approx(1.0 / (1.0 - 0.9)).epsilon(1e-6));
    CHECK(policy.values[lat.node_id(5 % 4, 5 / 4, 1)] ==
          doctest::Approx(1.0 / (1.0 - 0.9)).epsilon(1e-6));
}

TEST_CASE("value iteration matches the finite-horizon brute-force oracle") {
    // Randomized small instances: 4x4x2 lattice, at most 3 wind atoms per
    // cell, H = 200 horizon. Values within 1e-5, policies exactly equal under
    // the documented tie-break.
    for (std::uint64_t instance = 0; instance < 6; ++instance) {
        const Lattice lat = Lattice::uniform(4, 4, 2, 54e3, 55e3);
        Rng rng(500 + instance);
        const int n_atoms = 1 + static_cast<int>(rng.uniform_index(3));
        const WindField wind = lattice_wind(lat, n_atoms, 900 + instance, 60.0);

        PlannerConfig cfg;
        cfg.gamma = 0.9;
        cfg.tolerance = 1e-12;
        cfg.max_iterations = 20000;
        cfg.r_energy_per_m = (instance % 2 == 0) ? 0.0 : 1e-4;
        cfg.max_atoms_per_cell = 16;  // no compression at 3 atoms
        const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);

        std::vector<double> field(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
        for (auto& f : field) {
            if (rng.uniform() < 0.35) f = rng.uniform(0.1, 2.0);
        }

        const GuidancePolicy got = value_iteration(tm, field, cfg);
        const OracleResult want = oracle_finite_horizon(tm, field, cfg, 200);
        REQUIRE(got.converged);
        for (int node = 0; node < lat.n_nodes(); ++node) {
            CHECK(std::abs(got.values[node] - want.values[node]) < 1e-5);
            CHECK(got.commanded_alt[node] == want.policy[node]);
        }
    }
}

TEST_CASE("scaling all rewards scales values and preserves the policy") {
    const Lattice lat = Lattice::uniform(4, 4, 2, 54e3, 55e3);
    const WindField wind = lattice_wind(lat, 3, 41, 50.0);
    PlannerConfig cfg;
    cfg.gamma = 0.92;
    cfg.tolerance = 1e-12;
    cfg.max_iterations = 20000;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    Rng rng(42);
    std::vector<double> field(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
    for (auto& f : field) {
        if (rng.uniform() < 0.4) f = rng.uniform(0.1, 1.0);
    }
    const GuidancePolicy base = value_iteration(tm, field, cfg);
    const double c = 7.25;
    std::vector<double> scaled = field;
    for (auto& f : scaled) f *= c;
    PlannerConfig cfg2 = cfg;
    cfg2.tolerance = cfg.tolerance * c;
    const GuidancePolicy scaled_policy = value_iteration(tm, scaled, cfg2);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        CHECK(scaled_policy.values[node] == doctest::Approx(c * base.values[node]).epsilon(1e-7));
        CHECK(scaled_policy.commanded_alt[node] == base.commanded_alt[node]);
    }
}

TEST_CASE("an unreachable event leaves the value function unchanged") {
    const Lattice lat = Lattice::uniform(4, 4, 2, 54e3, 55e3);
    const WindField wind = uniform_wind(lat, 0.0, 0.0);
    PlannerConfig cfg;
    cfg.gamma = 0.9;
    cfg.tolerance = 1e-12;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);

    EventDatabase reachable;
    reachable.record({1, lat.node_point(lat.node_id(1, 1, 0)), 0.0, 3, 0});
    const auto field_a = eruption_reward_field(lat, reachable, cfg, kVenus);
    EventDatabase with_far = reachable;
    // Opposite hemisphere, offset into a cell interior so it stays far
    // outside the 50 km radius of every node.
    with_far.record({2,
                     GeoPoint::normalized(lat.lon_node(1) + kPi + 0.31 * lat.dlon(),
                                          -lat.lat_node(1) + 0.27 * lat.dlat(), 0.0),
                     0.0, 4, 0});
    const auto field_b = eruption_reward_field(lat, with_far, cfg, kVenus);

    const GuidancePolicy pa = value_iteration(tm, field_a, cfg);
    const GuidancePolicy pb = value_iteration(tm, field_b, cfg);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        CHECK(pa.values[node] == pb.values[node]);
    }
}

TEST_CASE("residual sequence is nonincreasing for fixed-order and jacobi sweeps") {
    const Lattice lat = Lattice::uniform(5, 4, 3, 54e3, 56e3);
    const WindField wind = lattice_wind(lat, 3, 77, 60.0);
    for (SweepOrder order : {SweepOrder::forward, SweepOrder::jacobi}) {
        PlannerConfig cfg;
        cfg.gamma = 0.95;
        cfg.tolerance = 1e-10;
        cfg.max_iterations = 5000;
        cfg.sweep = order;
        const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
        Rng rng(55);
        std::vector<double> field(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
        for (auto& f : field) {
            if (rng.uniform() < 0.4) f = rng.uniform(0.1, 2.0);
        }
        const GuidancePolicy policy = value_iteration(tm, field, cfg);
        REQUIRE(policy.residual_history.size() >= 2);
        for (std::size_t i = 1; i < policy.residual_history.size(); ++i) {
            CHECK(policy.residual_history[i] <= policy.residual_history[i - 1] + 1e-12);
        }
    }
}

TEST_CASE("no optimal command leaves the altitude envelope") {
    const Lattice lat = Lattice::uniform(6, 5, 4, 54e3, 57e3);
    const WindField wind = lattice_wind(lat, 3, 31, 70.0);
    PlannerConfig cfg;
    cfg.gamma = 0.9;
    cfg.r_altitude = -1e6;
    const TransitionModel tm = build_transitions(wind, lat, cfg, kVenus);
    Rng rng(66);
    std::vector<double> field(static_cast<std::size_t>(lat.n_horizontal()), 0.0);
    for (auto& f : field) f = rng.uniform(0.0, 1.0);
    const GuidancePolicy policy = value_iteration(tm, field, cfg);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        CHECK(policy.commanded_alt[node] >= lat.alt_min_m);
        CHECK(policy.commanded_alt[node] <= lat.alt_max_m);
    }
}

TEST_CASE("policy lookup: nearest-node semantics against a linear scan") {
    const Lattice lat = Lattice::uniform(12, 7, 3, 54e3, 56e3);
    GuidancePolicy policy;
    policy.lattice = lat;
    policy.values.assign(static_cast<std::size_t>(lat.n_nodes()), 0.0);
    policy.commanded_alt.resize(static_cast<std::size_t>(lat.n_nodes()));
    for (int node = 0; node < lat.n_nodes(); ++node) {
        policy.commanded_alt[node] = static_cast<double>(node);  // identify nodes by action
    }

    // Exactly on a node.
    const GeoPoint on_node = lat.node_point(lat.node_id(3, 2, 1));
    CHECK(policy_lookup(policy, on_node, kVenus) == lat.node_id(3, 2, 1));

    // Just inside the node's cell.
    const GeoPoint nudged{on_node.lon + 0.2 * lat.dlon(), on_node.lat - 0.2 * lat.dlat(),
                          on_node.alt + 0.3 * lat.dalt()};
    CHECK(policy_lookup(policy, nudged, kVenus) == lat.node_id(3, 2, 1));

    auto brute = [&](const GeoPoint& q) {
        double best = 1e300;
        int best_node = 0;
        for (int node = 0; node < lat.n_nodes(); ++node) {
            const GeoPoint np = lat.node_point(node);
            const double dh = geodesic_distance(GeoPoint{q.lon, q.lat, 0.0},
                                                GeoPoint{np.lon, np.lat, 0.0}, kVenus);
            const double dv = q.alt - np.alt;
            const double metric = dh * dh + dv * dv;
            if (metric < best || (metric == best && node < best_node)) {
                best = metric;
                best_node = node;
            }
        }
        return best_node;
    };
    Rng rng(71);
    for (int i = 0; i < 3000; ++i) {
        // Include polar and near-boundary states.
        const double lat_span = (i % 5 == 0) ? kPi / 2 : 1.2;
        const GeoPoint q{rng.uniform(-kPi, kPi), rng.uniform(-lat_span, lat_span),
                         rng.uniform(54e3, 56e3)};
        CHECK(policy_lookup(policy, q, kVenus) == brute(q));
    }
}

TEST_CASE("policy snapshot round trip") {
    const Lattice lat = Lattice::uniform(6, 4, 2, 54e3, 55e3);
    GuidancePolicy policy;
    policy.lattice = lat;
    Rng rng(81);
    policy.values.resize(static_cast<std::size_t>(lat.n_nodes()));
    policy.commanded_alt.resize(static_cast<std::size_t>(lat.n_nodes()));
    for (int node = 0; node < lat.n_nodes(); ++node) {
        policy.values[node] = rng.uniform(-5.0, 5.0);
        policy.commanded_alt[node] = lat.alt_node(static_cast<int>(rng.uniform_index(2)));
    }
    policy.event_set_hash = 0xABCDEF12345ULL;
    policy.iterations = 42;
    policy.residual = 1.5e-7;
    policy.converged = true;

    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    save_policy(policy, buf);
    const GuidancePolicy loaded = load_policy(buf, "mem");
    CHECK(loaded.values == policy.values);
    CHECK(loaded.commanded_alt == policy.commanded_alt);
    CHECK(loaded.event_set_hash == policy.event_set_hash);
    CHECK(loaded.iterations == policy.iterations);
    CHECK(loaded.residual == policy.residual);
    CHECK(loaded.lattice.n_lon == 6);
}

TEST_CASE("planner service: empty database short-circuits to hold, caching works") {
    const Lattice lat = Lattice::uniform(5, 4, 2, 54e3, 55e3);
    auto tm = std::make_shared<const TransitionModel>(
        build_transitions(lattice_wind(lat, 3, 7, 40.0), lat, PlannerConfig{}, kVenus));
    PlannerConfig cfg;
    cfg.gamma = 0.9;
    PlannerService service(tm, cfg, kVenus);

    EventDatabase empty;
    const auto hold = service.policy_for(empty);
    CHECK(service.solve_count() == 0);
    for (int node = 0; node < lat.n_nodes(); ++node) {
        CHECK(hold->commanded_alt[node] == lat.alt_node(lat.alt_level(node)));
        CHECK(hold->values[node] == 0.0);
    }

    EventDatabase db;
    db.record({3, lat.node_point(6), 0.0, 4, 0});
    const auto p1 = service.policy_for(db);
    CHECK(service.solve_count() == 1);
    const auto p2 = service.policy_for(db);
    CHECK(service.solve_count() == 1);  // cache hit
    CHECK(p1.get() == p2.get());

    // Same id set, different detection times: still a cache hit.
    EventDatabase db2;
    db2.record({3, lat.node_point(6), 999.0, 4, 1});
    CHECK(service.policy_for(db2).get() == p1.get());
}
