#include "aeroguide/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "aeroguide/errors.hpp"

namespace aeroguide {

Lattice Lattice::uniform(int n_lon, int n_lat, int n_alt, double alt_min_m, double alt_max_m) {
    if (n_lon < 2 || n_lat < 2 || n_alt < 2) {
        throw ConfigError("lattice needs at least 2 nodes per axis");
    }
    if (alt_max_m <= alt_min_m) throw ConfigError("lattice altitude range is empty");
    return Lattice{n_lon, n_lat, n_alt, alt_min_m, alt_max_m};
}

GeoPoint Lattice::node_point(int node) const {
    const int h = horizontal_id(node);
    return GeoPoint{lon_node(h % n_lon), lat_node(h / n_lon), alt_node(alt_level(node))};
}

std::vector<double> legal_actions(const Lattice& lattice, int node, double action_step_m) {
    const double h = lattice.alt_node(lattice.alt_level(node));
    std::vector<double> actions{std::max(h - action_step_m, lattice.alt_min_m), h,
                                std::min(h + action_step_m, lattice.alt_max_m)};
    std::sort(actions.begin(), actions.end());
    actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
    return actions;
}

std::vector<InterpEntry> interpolation_weights(const Lattice& lattice, const GeoPoint& query) {
    constexpr double kPlaneEps = 1e-9;

    // Fractional lattice coordinates.
    double u = (wrap_longitude(query.lon) - lattice.lon_node(0)) / lattice.dlon();
    u = std::fmod(u, static_cast<double>(lattice.n_lon));
    if (u < 0.0) u += lattice.n_lon;
    double v = (clamp_latitude(query.lat) - lattice.lat_node(0)) / lattice.dlat();
    v = std::clamp(v, 0.0, static_cast<double>(lattice.n_lat - 1));
    double w = (query.alt - lattice.alt_min_m) / lattice.dalt();
    w = std::clamp(w, 0.0, static_cast<double>(lattice.n_alt - 1));

    struct Axis {
        int idx[2];
        double frac;   // offset from idx[0] in cell units
        int count;     // 1 if on a lattice plane, else 2
    };
    auto split = [&](double x, int n, bool periodic) {
        Axis a{};
        int lo = static_cast<int>(x);
        if (!periodic && lo > n - 2) lo = n - 2;
        double f = x - lo;
        if (f < kPlaneEps) {
            a.idx[0] = lo % n;
            a.frac = 0.0;
            a.count = 1;
        } else if (f > 1.0 - kPlaneEps) {
            a.idx[0] = (lo + 1) % n;
            a.frac = 0.0;
            a.count = 1;
        } else {
            a.idx[0] = lo % n;
            a.idx[1] = (lo + 1) % n;
            a.frac = f;
            a.count = 2;
        }
        return a;
    };
    const Axis alon = split(u, lattice.n_lon, true);
    const Axis alat = split(v, lattice.n_lat, false);
    const Axis aalt = split(w, lattice.n_alt, false);

    std::vector<InterpEntry> out;
    out.reserve(static_cast<std::size_t>(alon.count) * alat.count * aalt.count);
    double inv_sum = 0.0;
    for (int a = 0; a < alon.count; ++a) {
        const double du = (alon.count == 1) ? 0.0 : (a == 0 ? alon.frac : 1.0 - alon.frac);
        for (int b = 0; b < alat.count; ++b) {
            const double dv = (alat.count == 1) ? 0.0 : (b == 0 ? alat.frac : 1.0 - alat.frac);
            for (int c = 0; c < aalt.count; ++c) {
                const double dw = (aalt.count == 1) ? 0.0 : (c == 0 ? aalt.frac : 1.0 - aalt.frac);
                const double dist = std::sqrt(du * du + dv * dv + dw * dw);
                const int node = lattice.node_id(alon.idx[a], alat.idx[b], aalt.idx[c]);
                if (dist < 1e-12) {
                    return {{node, 1.0}};
                }
                out.push_back({node, 1.0 / dist});
                inv_sum += 1.0 / dist;
            }
        }
    }
    for (auto& e : out) e.weight /= inv_sum;
    return out;
}

TransitionModel build_transitions(const WindField& wind, const Lattice& lattice,
                                  const PlannerConfig& cfg, const PlanetModel& planet) {
    if (lattice.alt_min_m < wind.alt_min() - 1e-6 || lattice.alt_max_m > wind.alt_max() + 1e-6) {
        throw ConfigError("lattice altitude range [" + std::to_string(lattice.alt_min_m) + ", " +
                          std::to_string(lattice.alt_max_m) + "] m outside wind envelope [" +
                          std::to_string(wind.alt_min()) + ", " + std::to_string(wind.alt_max()) +
                          "] m");
    }
    if (cfg.time_step_s <= 0) throw ConfigError("planner time step must be positive");

    // Velocity-space compression: bin atoms on a KxK grid over their bounding
    // box and keep the weighted bin centroids. Distributions already within
    // the bound pass through untouched.
    const int max_atoms = std::max(1, cfg.max_atoms_per_cell);
    const int bins = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(max_atoms))));
    auto compress = [&](VelocityDistribution dist) {
        if (static_cast<int>(dist.atoms.size()) <= max_atoms) return dist;
        double ulo = dist.atoms[0].zonal, uhi = ulo, vlo = dist.atoms[0].meridional, vhi = vlo;
        for (const auto& a : dist.atoms) {
            ulo = std::min(ulo, a.zonal);
            uhi = std::max(uhi, a.zonal);
            vlo = std::min(vlo, a.meridional);
            vhi = std::max(vhi, a.meridional);
        }
        const double du = (uhi > ulo) ? (uhi - ulo) : 1.0;
        const double dv = (vhi > vlo) ? (vhi - vlo) : 1.0;
        struct Bin {
            double wu = 0, wv = 0, w = 0;
        };
        std::vector<Bin> grid(static_cast<std::size_t>(bins) * bins);
        for (const auto& a : dist.atoms) {
            int bu = std::min(bins - 1, static_cast<int>((a.zonal - ulo) / du * bins));
            int bv = std::min(bins - 1, static_cast<int>((a.meridional - vlo) / dv * bins));
            Bin& bin = grid[static_cast<std::size_t>(bu) * bins + bv];
            bin.wu += a.weight * a.zonal;
            bin.wv += a.weight * a.meridional;
            bin.w += a.weight;
        }
        dist.atoms.clear();
        for (const auto& bin : grid) {
            if (bin.w > 0.0) dist.atoms.push_back({bin.wu / bin.w, bin.wv / bin.w, bin.w});
        }
        return dist;
    };

    // Cache compressed distributions per wind cell (lattice nodes can share cells).
    std::map<std::array<int, 3>, VelocityDistribution> cell_cache;
    auto cell_distribution = [&](const GeoPoint& p) -> const VelocityDistribution& {
        const std::array<int, 3> key{wind.lon_cell(p.lon), wind.lat_cell(p.lat),
                                     wind.alt_cell(p.alt)};
        auto it = cell_cache.find(key);
        if (it == cell_cache.end()) {
            it = cell_cache.emplace(key, compress(empirical_distribution(wind, key[0], key[1], key[2])))
                     .first;
        }
        return it->second;
    };

    const double cos_floor = std::cos(deg_to_rad(cfg.cos_lat_floor_deg));
    const int n_nodes = lattice.n_nodes();

    TransitionModel tm;
    tm.lattice = lattice;
    tm.time_step_s = cfg.time_step_s;
    tm.node_pair_begin.reserve(n_nodes + 1);
    tm.node_pair_begin.push_back(0);
    tm.pair_atom_begin.push_back(0);
    tm.pair_entry_begin.push_back(0);

    std::vector<std::pair<int, double>> row;
    for (int node = 0; node < n_nodes; ++node) {
        const GeoPoint p = lattice.node_point(node);
        const VelocityDistribution& dist = cell_distribution(p);
        const double r_h = planet.radius_m + p.alt;
        const double cos_lat = std::max(std::cos(p.lat), cos_floor);

        for (double target : legal_actions(lattice, node, cfg.action_step_m)) {
            row.clear();
            double terminal = 0.0;
            for (const auto& atom : dist.atoms) {
                const double dlon = atom.zonal * cfg.time_step_s / (r_h * cos_lat);
                const double dlat = atom.meridional * cfg.time_step_s / r_h;
                const GeoPoint succ = GeoPoint::normalized(p.lon + dlon, p.lat + dlat, target);
                if (target < lattice.alt_min_m - 1e-9 || target > lattice.alt_max_m + 1e-9) {
                    terminal += atom.weight;
                    continue;
                }
                tm.atoms.push_back({succ, atom.weight});
                for (const auto& entry : interpolation_weights(lattice, succ)) {
                    row.emplace_back(entry.node, entry.weight * atom.weight);
                }
            }
            std::sort(row.begin(), row.end());
            tm.pair_target_alt.push_back(target);
            tm.pair_terminal_weight.push_back(terminal);
            tm.pair_atom_begin.push_back(static_cast<std::uint32_t>(tm.atoms.size()));
            for (std::size_t e = 0; e < row.size(); ++e) {
                if (!tm.entry_node.empty() &&
                    tm.entry_node.size() > tm.pair_entry_begin.back() &&
                    tm.entry_node.back() == static_cast<std::uint32_t>(row[e].first)) {
                    tm.entry_weight.back() += row[e].second;
                } else {
                    tm.entry_node.push_back(static_cast<std::uint32_t>(row[e].first));
                    tm.entry_weight.push_back(row[e].second);
                }
            }
            tm.pair_entry_begin.push_back(static_cast<std::uint32_t>(tm.entry_node.size()));
        }
        tm.node_pair_begin.push_back(static_cast<std::uint32_t>(tm.pair_target_alt.size()));
    }
    return tm;
}

namespace {

// Scaled modified Bessel I0(x) * exp(-x); asymptotic branch avoids overflow.
double bessel_i0_scaled(double x) {
    if (x < 30.0) return std::cyl_bessel_i(0.0, x) * std::exp(-x);
    const double ix = 1.0 / x;
    return (1.0 + 0.125 * ix + 0.0703125 * ix * ix + 0.0732421875 * ix * ix * ix) /
           std::sqrt(kTwoPi * x);
}

}  // namespace

double visit_probability(double distance_m, double visit_radius_m, double sigma_m) {
    if (sigma_m <= 0.0) return distance_m <= visit_radius_m ? 1.0 : 0.0;
    const double R = visit_radius_m, d = distance_m, s = sigma_m;
    if (d > R + 9.0 * s) return 0.0;
    if (d < R - 9.0 * s) return 1.0;

    // Rice-distributed radial offset: P = int_0^R (r/s^2) e^{-(r-d)^2/(2s^2)}
    // I0e(r d / s^2) dr, with I0e the scaled Bessel function.
    const double lo = std::max(0.0, d - 9.0 * s);
    const double hi = std::min(R, d + 9.0 * s);
    if (hi <= lo) return 0.0;
    constexpr int kQuad = 128;
    double acc = 0.0;
    for (int q = 0; q < kQuad; ++q) {
        const double r = lo + (q + 0.5) * (hi - lo) / kQuad;
        const double z = (r - d) / s;
        acc += (r / (s * s)) * std::exp(-0.5 * z * z) * bessel_i0_scaled(r * d / (s * s));
    }
    return std::min(1.0, acc * (hi - lo) / kQuad);
}

std::vector<double> eruption_reward_field(const Lattice& lattice, const EventDatabase& db,
                                          const PlannerConfig& cfg, const PlanetModel& planet) {
    std::vector<double> field(static_cast<std::size_t>(lattice.n_horizontal()), 0.0);
    for (const auto& [id, det] : db.entries()) {
        for (int j = 0; j < lattice.n_lat; ++j) {
            for (int i = 0; i < lattice.n_lon; ++i) {
                const GeoPoint node{lattice.lon_node(i), lattice.lat_node(j), 0.0};
                const double d = geodesic_distance(node, det.estimated_location, planet);
                const double p = visit_probability(d, cfg.visit_radius_m, cfg.location_sigma_m);
                if (p > 0.0) field[static_cast<std::size_t>(j) * lattice.n_lon + i] += cfg.r_eruption * p;
            }
        }
    }
    return field;
}

double reward(const Lattice& lattice, int node, double commanded_alt_m, const EventDatabase& db,
              const PlannerConfig& cfg, const PlanetModel& planet) {
    const GeoPoint p = lattice.node_point(node);
    double r = -std::abs(p.alt - commanded_alt_m) * cfg.r_energy_per_m;
    for (const auto& [id, det] : db.entries()) {
        const double d = geodesic_distance(GeoPoint{p.lon, p.lat, 0.0}, det.estimated_location, planet);
        r += cfg.r_eruption * visit_probability(d, cfg.visit_radius_m, cfg.location_sigma_m);
    }
    return r;
}

GuidancePolicy value_iteration(const TransitionModel& tm, std::span<const double> eruption_reward,
                               const PlannerConfig& cfg, std::span<const double> warm_start) {
    const Lattice& lattice = tm.lattice;
    const int n_nodes = lattice.n_nodes();
    const int n_h = lattice.n_horizontal();
    if (static_cast<int>(eruption_reward.size()) != n_h) {
        throw ConfigError("eruption reward field size mismatch");
    }
    if (cfg.gamma <= 0.0 || cfg.gamma >= 1.0) throw ConfigError("discount must lie in (0, 1)");
    if (cfg.tolerance <= 0.0) throw ConfigError("value-iteration tolerance must be positive");

    const int n_pairs = tm.n_pairs();
    std::vector<double> pair_base(n_pairs);   // reward + gamma * terminal mass * r_altitude
    for (int node = 0; node < n_nodes; ++node) {
        const double node_alt = lattice.alt_node(lattice.alt_level(node));
        const double erupt = eruption_reward[lattice.horizontal_id(node)];
        for (std::uint32_t pr = tm.node_pair_begin[node]; pr < tm.node_pair_begin[node + 1]; ++pr) {
            pair_base[pr] = erupt - std::abs(node_alt - tm.pair_target_alt[pr]) * cfg.r_energy_per_m +
                            cfg.gamma * tm.pair_terminal_weight[pr] * cfg.r_altitude;
        }
    }

    std::vector<double> values(static_cast<std::size_t>(n_nodes), 0.0);
    if (!warm_start.empty() && static_cast<int>(warm_start.size()) == n_nodes) {
        std::copy(warm_start.begin(), warm_start.end(), values.begin());
    }

    auto backup = [&](int node, const std::vector<double>& src) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint32_t pr = tm.node_pair_begin[node]; pr < tm.node_pair_begin[node + 1]; ++pr) {
            double acc = 0.0;
            for (std::uint32_t e = tm.pair_entry_begin[pr]; e < tm.pair_entry_begin[pr + 1]; ++e) {
                acc += tm.entry_weight[e] * src[tm.entry_node[e]];
            }
            const double q = pair_base[pr] + cfg.gamma * acc;
            if (q > best) best = q;
        }
        return best;
    };

    GuidancePolicy policy;
    policy.lattice = lattice;
    policy.converged = false;

    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    std::vector<double> scratch;
    if (cfg.sweep == SweepOrder::jacobi) scratch.resize(values.size());
    for (; iter < cfg.max_iterations; ++iter) {
        residual = 0.0;
        if (cfg.sweep == SweepOrder::jacobi) {
            for (int node = 0; node < n_nodes; ++node) {
                scratch[node] = backup(node, values);
                residual = std::max(residual, std::abs(scratch[node] - values[node]));
            }
            values.swap(scratch);
        } else {
            const bool reverse = cfg.sweep == SweepOrder::alternating && (iter % 2 == 1);
            if (reverse) {
                for (int node = n_nodes - 1; node >= 0; --node) {
                    const double v = backup(node, values);
                    residual = std::max(residual, std::abs(v - values[node]));
                    values[node] = v;
                }
            } else {
                for (int node = 0; node < n_nodes; ++node) {
                    const double v = backup(node, values);
                    residual = std::max(residual, std::abs(v - values[node]));
                    values[node] = v;
                }
            }
        }
        policy.residual_history.push_back(residual);
        if (residual < cfg.tolerance) {
            policy.converged = true;
            ++iter;
            break;
        }
    }
    policy.iterations = iter;
    policy.residual = residual;

    // Policy extraction with the documented tie-break: prefer holding the
    // current altitude, then the lower commanded altitude. Ties are detected
    // with a value-scale-relative epsilon so that rescaling all rewards
    // leaves the argmax unchanged.
    policy.values = values;
    policy.commanded_alt.resize(static_cast<std::size_t>(n_nodes));
    std::vector<double> qvals;
    for (int node = 0; node < n_nodes; ++node) {
        const double node_alt = lattice.alt_node(lattice.alt_level(node));
        qvals.clear();
        double qmax = -std::numeric_limits<double>::infinity(), scale = 0.0;
        for (std::uint32_t pr = tm.node_pair_begin[node]; pr < tm.node_pair_begin[node + 1]; ++pr) {
            double acc = 0.0;
            for (std::uint32_t e = tm.pair_entry_begin[pr]; e < tm.pair_entry_begin[pr + 1]; ++e) {
                acc += tm.entry_weight[e] * values[tm.entry_node[e]];
            }
            const double q = pair_base[pr] + cfg.gamma * acc;
            qvals.push_back(q);
            qmax = std::max(qmax, q);
            scale = std::max(scale, std::abs(q));
        }
        const double tie_eps = 1e-9 * scale;
        double chosen = node_alt;
        bool chosen_is_hold = false;
        bool have = false;
        std::size_t qi = 0;
        for (std::uint32_t pr = tm.node_pair_begin[node]; pr < tm.node_pair_begin[node + 1];
             ++pr, ++qi) {
            if (qvals[qi] < qmax - tie_eps) continue;
            const double target = tm.pair_target_alt[pr];
            const bool is_hold = target == node_alt;
            if (!have || (is_hold && !chosen_is_hold) ||
                (is_hold == chosen_is_hold && target < chosen)) {
                chosen = target;
                chosen_is_hold = is_hold;
                have = true;
            }
        }
        policy.commanded_alt[node] = chosen;
    }
    return policy;
}

int nearest_node(const Lattice& lattice, const GeoPoint& state, const PlanetModel& planet) {
    // Nearest altitude level (ties toward the lower level).
    const double w = (state.alt - lattice.alt_min_m) / lattice.dalt();
    int k = static_cast<int>(std::floor(w + 0.5));
    k = std::clamp(k, 0, lattice.n_alt - 1);
    if (k > 0 && std::abs(state.alt - lattice.alt_node(k - 1)) <=
                     std::abs(state.alt - lattice.alt_node(k))) {
        --k;
    }

    // Nearest horizontal node by geodesic distance: start from the rounded
    // row, expand rows while the meridian distance alone can still beat the
    // best, and within a row check the rounded column and its neighbors.
    const GeoPoint q{state.lon, clamp_latitude(state.lat), 0.0};
    const double dlat = lattice.dlat();
    const int j0 = std::clamp(static_cast<int>(std::lround((q.lat - lattice.lat_node(0)) / dlat)), 0,
                              lattice.n_lat - 1);
    double best = std::numeric_limits<double>::infinity();
    int best_h = 0;
    auto consider_row = [&](int j) {
        if (j < 0 || j >= lattice.n_lat) return;
        double u = (wrap_longitude(q.lon) - lattice.lon_node(0)) / lattice.dlon();
        const int ic = static_cast<int>(std::lround(u));
        for (int di = -1; di <= 1; ++di) {
            int i = (ic + di) % lattice.n_lon;
            if (i < 0) i += lattice.n_lon;
            const GeoPoint node{lattice.lon_node(i), lattice.lat_node(j), 0.0};
            const double d = geodesic_distance(q, node, planet);
            const int h = j * lattice.n_lon + i;
            if (d < best || (d == best && h < best_h)) {
                best = d;
                best_h = h;
            }
        }
    };
    consider_row(j0);
    for (int step = 1; step < lattice.n_lat; ++step) {
        const bool below = j0 - step >= 0 &&
                           planet.radius_m * std::abs(q.lat - lattice.lat_node(j0 - step)) <= best;
        const bool above = j0 + step < lattice.n_lat &&
                           planet.radius_m * std::abs(q.lat - lattice.lat_node(j0 + step)) <= best;
        if (!below && !above) break;
        if (below) consider_row(j0 - step);
        if (above) consider_row(j0 + step);
    }
    return k * lattice.n_horizontal() + best_h;
}

double policy_lookup(const GuidancePolicy& policy, const GeoPoint& state,
                     const PlanetModel& planet) {
    return policy.commanded_alt[static_cast<std::size_t>(nearest_node(policy.lattice, state, planet))];
}

namespace {
constexpr char kPolicyMagic[4] = {'A', 'G', 'P', 'S'};
constexpr std::uint32_t kPolicyVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in, const std::string& name) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw LoadError(name + ": truncated policy snapshot");
    return v;
}
}  // namespace

void save_policy(const GuidancePolicy& policy, std::ostream& out) {
    out.write(kPolicyMagic, 4);
    put(out, kPolicyVersion);
    put(out, static_cast<std::uint32_t>(policy.lattice.n_lon));
    put(out, static_cast<std::uint32_t>(policy.lattice.n_lat));
    put(out, static_cast<std::uint32_t>(policy.lattice.n_alt));
    put(out, policy.lattice.alt_min_m);
    put(out, policy.lattice.alt_max_m);
    put(out, policy.event_set_hash);
    put(out, static_cast<std::int32_t>(policy.iterations));
    put(out, policy.residual);
    put(out, static_cast<std::uint8_t>(policy.converged ? 1 : 0));
    out.write(reinterpret_cast<const char*>(policy.values.data()),
              static_cast<std::streamsize>(policy.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(policy.commanded_alt.data()),
              static_cast<std::streamsize>(policy.commanded_alt.size() * sizeof(double)));
}

void save_policy(const GuidancePolicy& policy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path + ": cannot open for writing");
    save_policy(policy, out);
    if (!out) throw LoadError(path + ": write failed");
}

GuidancePolicy load_policy(std::istream& in, const std::string& name) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kPolicyMagic, 4) != 0) {
        throw LoadError(name + ": not a policy snapshot");
    }
    const auto version = get<std::uint32_t>(in, name);
    if (version != kPolicyVersion) {
        throw LoadError(name + ": unsupported policy snapshot version " + std::to_string(version));
    }
    const auto n_lon = get<std::uint32_t>(in, name);
    const auto n_lat = get<std::uint32_t>(in, name);
    const auto n_alt = get<std::uint32_t>(in, name);
    const auto alt_min = get<double>(in, name);
    const auto alt_max = get<double>(in, name);
    GuidancePolicy policy;
    policy.lattice = Lattice::uniform(static_cast<int>(n_lon), static_cast<int>(n_lat),
                                      static_cast<int>(n_alt), alt_min, alt_max);
    policy.event_set_hash = get<std::uint64_t>(in, name);
    policy.iterations = get<std::int32_t>(in, name);
    policy.residual = get<double>(in, name);
    policy.converged = get<std::uint8_t>(in, name) != 0;
    const std::size_t n = static_cast<std::size_t>(policy.lattice.n_nodes());
    policy.values.resize(n);
    policy.commanded_alt.resize(n);
    in.read(reinterpret_cast<char*>(policy.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    in.read(reinterpret_cast<char*>(policy.commanded_alt.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw LoadError(name + ": truncated policy snapshot");
    return policy;
}

GuidancePolicy load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path + ": cannot open policy snapshot");
    return load_policy(in, path);
}

PlannerService::PlannerService(std::shared_ptr<const TransitionModel> transitions,
                               PlannerConfig cfg, PlanetModel planet)
    : transitions_(std::move(transitions)), cfg_(cfg), planet_(planet) {}

std::shared_ptr<const GuidancePolicy> PlannerService::policy_for(const EventDatabase& db) {
    const std::uint64_t key = db.id_set_hash();
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    const Lattice& lattice = transitions_->lattice;
    auto policy = std::make_shared<GuidancePolicy>();
    if (db.empty()) {
        // No rewards anywhere: V* is identically zero and the tie-break holds
        // altitude, so the solve is skipped.
        policy->lattice = lattice;
        policy->values.assign(static_cast<std::size_t>(lattice.n_nodes()), 0.0);
        policy->commanded_alt.resize(static_cast<std::size_t>(lattice.n_nodes()));
        for (int node = 0; node < lattice.n_nodes(); ++node) {
            policy->commanded_alt[node] = lattice.alt_node(lattice.alt_level(node));
        }
        policy->event_set_hash = key;
    } else {
        // Per-event reward contributions are position-only and cached across
        // database growth.
        std::vector<double> field(static_cast<std::size_t>(lattice.n_horizontal()), 0.0);
        for (const auto& [id, det] : db.entries()) {
            auto it = event_fields_.find(id);
            if (it == event_fields_.end()) {
                std::vector<std::pair<int, double>> sparse;
                const double cutoff = cfg_.visit_radius_m + 9.0 * cfg_.location_sigma_m;
                for (int j = 0; j < lattice.n_lat; ++j) {
                    for (int i = 0; i < lattice.n_lon; ++i) {
                        const GeoPoint node{lattice.lon_node(i), lattice.lat_node(j), 0.0};
                        const double d =
                            geodesic_distance(node, det.estimated_location, planet_);
                        if (d > cutoff) continue;
                        const double p =
                            visit_probability(d, cfg_.visit_radius_m, cfg_.location_sigma_m);
                        if (p > 0.0) sparse.emplace_back(j * lattice.n_lon + i, cfg_.r_eruption * p);
                    }
                }
                it = event_fields_.emplace(id, std::move(sparse)).first;
            }
            for (const auto& [h, r] : it->second) field[static_cast<std::size_t>(h)] += r;
        }
        *policy = value_iteration(*transitions_, field, cfg_, warm_);
        policy->event_set_hash = key;
        warm_ = policy->values;
        ++solve_count_;
    }
    cache_.emplace(key, policy);
    return policy;
}

}  // namespace aeroguide
