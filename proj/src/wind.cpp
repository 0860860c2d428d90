#include "aeroguide/wind.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "aeroguide/errors.hpp"
#include "aeroguide/rng.hpp"

namespace aeroguide {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'W', 'B'};
constexpr std::uint32_t kVersion = 1;

void check_axis(const std::vector<double>& axis, const char* name, std::size_t min_size = 1) {
    if (axis.size() < min_size) {
        throw LoadError(std::string("wind axis '") + name + "' needs at least " +
                        std::to_string(min_size) + " values, got " + std::to_string(axis.size()));
    }
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) {
            throw LoadError(std::string("wind axis '") + name + "' value " + std::to_string(i) +
                            " is not finite");
        }
        if (i > 0 && axis[i] <= axis[i - 1]) {
            throw LoadError(std::string("wind axis '") + name + "' not strictly increasing at index " +
                            std::to_string(i));
        }
    }
}

// Fractional position of x on a uniform axis; returns (lower index, fraction).
std::pair<int, double> axis_locate(const std::vector<double>& axis, double x) {
    const int n = static_cast<int>(axis.size());
    if (n == 1) return {0, 0.0};
    const double step = (axis.back() - axis.front()) / (n - 1);
    double u = (x - axis.front()) / step;
    if (u <= 0.0) return {0, 0.0};
    if (u >= n - 1) return {n - 2, 1.0};
    int i = static_cast<int>(u);
    if (i > n - 2) i = n - 2;
    return {i, u - i};
}

}  // namespace

WindField WindField::create(std::vector<double> time_s, std::vector<double> lon_rad,
                            std::vector<double> lat_rad, std::vector<double> alt_m,
                            std::vector<double> zonal, std::vector<double> meridional) {
    check_axis(time_s, "time");
    check_axis(lon_rad, "lon");
    check_axis(lat_rad, "lat");
    check_axis(alt_m, "alt");
    const std::size_t expected = time_s.size() * lon_rad.size() * lat_rad.size() * alt_m.size();
    if (zonal.size() != expected || meridional.size() != expected) {
        throw LoadError("wind value array size mismatch: expected " + std::to_string(expected) +
                        ", got zonal=" + std::to_string(zonal.size()) +
                        " meridional=" + std::to_string(meridional.size()));
    }
    for (std::size_t i = 0; i < expected; ++i) {
        if (!std::isfinite(zonal[i]) || !std::isfinite(meridional[i])) {
            throw LoadError("non-finite wind sample at flat index " + std::to_string(i) +
                            " (layout t,lon,lat,alt row-major)");
        }
    }
    WindField f;
    f.time_s_ = std::move(time_s);
    f.lon_rad_ = std::move(lon_rad);
    f.lat_rad_ = std::move(lat_rad);
    f.alt_m_ = std::move(alt_m);
    f.zonal_ = std::move(zonal);
    f.meridional_ = std::move(meridional);
    return f;
}

int WindField::lon_cell(double lon) const {
    const int n = n_lon();
    if (n == 1) return 0;
    const double step = (lon_rad_.back() - lon_rad_.front()) / (n - 1);
    double u = (wrap_longitude(lon) - lon_rad_.front()) / step;
    long i = std::lround(u);
    i %= n;
    if (i < 0) i += n;
    return static_cast<int>(i);
}

int WindField::lat_cell(double lat) const {
    const int n = n_lat();
    if (n == 1) return 0;
    const double step = (lat_rad_.back() - lat_rad_.front()) / (n - 1);
    long i = std::lround((lat - lat_rad_.front()) / step);
    return static_cast<int>(std::clamp(i, 0L, static_cast<long>(n - 1)));
}

int WindField::alt_cell(double alt) const {
    const int n = n_alt();
    if (n == 1) return 0;
    const double step = (alt_m_.back() - alt_m_.front()) / (n - 1);
    long i = std::lround((alt - alt_m_.front()) / step);
    return static_cast<int>(std::clamp(i, 0L, static_cast<long>(n - 1)));
}

WindSample sample_wind(const WindField& field, double t, const GeoPoint& p) {
    if (p.alt < field.alt_min() - 1e-9 || p.alt > field.alt_max() + 1e-9) {
        throw SimError("altitude " + std::to_string(p.alt) + " m outside wind envelope [" +
                       std::to_string(field.alt_min()) + ", " + std::to_string(field.alt_max()) +
                       "] m");
    }

    // Time rolls over to the first step past the end of the horizon.
    double tq = t;
    if (field.n_time() > 1) {
        const double t0 = field.time_axis().front();
        const double period = field.time_period();
        tq = t0 + std::fmod(t - t0, period);
        if (tq < t0) tq += period;
    }
    const auto [it, ft] = axis_locate(field.time_axis(), tq);

    // Longitude is periodic: locate on the unwrapped axis, wrap the upper cell.
    const int nlon = field.n_lon();
    int ilon0 = 0, ilon1 = 0;
    double flon = 0.0;
    if (nlon > 1) {
        const auto& lons = field.lon_axis();
        const double step = (lons.back() - lons.front()) / (nlon - 1);
        double u = (wrap_longitude(p.lon) - lons.front()) / step;
        u = std::fmod(u, static_cast<double>(nlon));
        if (u < 0.0) u += nlon;
        ilon0 = static_cast<int>(u) % nlon;
        ilon1 = (ilon0 + 1) % nlon;
        flon = u - std::floor(u);
    }

    const auto [ilat, flat] = axis_locate(field.lat_axis(), clamp_latitude(p.lat));
    const auto [ialt, falt] = axis_locate(field.alt_axis(), std::clamp(p.alt, field.alt_min(),
                                                                       field.alt_max()));

    const int nlat = field.n_lat(), nalt = field.n_alt();
    const int ilat1 = std::min(ilat + 1, nlat - 1);
    const int ialt1 = std::min(ialt + 1, nalt - 1);
    const int it1 = std::min(it + 1, field.n_time() - 1);

    auto lerp4 = [&](const std::vector<double>& v) {
        auto val = [&](int a, int b, int c, int d) { return v[field.index(a, b, c, d)]; };
        auto tri = [&](int a) {
            auto bi = [&](int b) {
                auto li = [&](int c) {
                    return val(a, b, c, ialt) * (1 - falt) + val(a, b, c, ialt1) * falt;
                };
                return li(ilat) * (1 - flat) + li(ilat1) * flat;
            };
            return bi(ilon0) * (1 - flon) + bi(ilon1) * flon;
        };
        return tri(it) * (1 - ft) + tri(it1) * ft;
    };

    return {lerp4(field.zonal()), lerp4(field.meridional())};
}

VelocityDistribution empirical_distribution(const WindField& field, int lon_idx, int lat_idx,
                                            int alt_idx) {
    if (lon_idx < 0 || lon_idx >= field.n_lon() || lat_idx < 0 || lat_idx >= field.n_lat() ||
        alt_idx < 0 || alt_idx >= field.n_alt()) {
        throw SimError("empirical_distribution: cell index out of range");
    }
    const int nt = field.n_time();
    const double w = 1.0 / nt;
    std::map<std::pair<double, double>, double> merged;
    for (int it = 0; it < nt; ++it) {
        const auto key = std::make_pair(field.zonal_at(it, lon_idx, lat_idx, alt_idx),
                                        field.meridional_at(it, lon_idx, lat_idx, alt_idx));
        merged[key] += w;
    }
    VelocityDistribution dist;
    dist.lon_idx = lon_idx;
    dist.lat_idx = lat_idx;
    dist.alt_idx = alt_idx;
    dist.atoms.reserve(merged.size());
    for (const auto& [vec, weight] : merged) {
        dist.atoms.push_back({vec.first, vec.second, weight});
    }
    return dist;
}

WindField synthesize_wind_field(const WindSynthesisParams& p, std::uint64_t seed) {
    if (p.n_lon < 2 || p.n_lat < 2 || p.n_alt < 2) {
        throw ConfigError("synthetic wind grid needs at least 2 points per spatial axis");
    }
    if (p.time_step_s <= 0 || p.horizon_s < p.time_step_s) {
        throw ConfigError("synthetic wind horizon must cover at least one time step");
    }
    if (p.alt_max_m <= p.alt_min_m) {
        throw ConfigError("synthetic wind altitude range is empty");
    }

    const int nt = static_cast<int>(std::llround(p.horizon_s / p.time_step_s)) + 1;
    std::vector<double> time_s(nt), lon(p.n_lon), lat(p.n_lat), alt(p.n_alt);
    for (int i = 0; i < nt; ++i) time_s[i] = i * p.time_step_s;
    const double dlon = kTwoPi / p.n_lon;
    for (int i = 0; i < p.n_lon; ++i) lon[i] = -kPi + (i + 0.5) * dlon;
    const double dlat = kPi / p.n_lat;
    for (int j = 0; j < p.n_lat; ++j) lat[j] = -kPi / 2 + (j + 0.5) * dlat;
    const double dalt = (p.alt_max_m - p.alt_min_m) / (p.n_alt - 1);
    for (int k = 0; k < p.n_alt; ++k) alt[k] = p.alt_min_m + k * dalt;

    // Traveling waves with temporal frequencies that are integer harmonics of
    // the horizon, so the field is continuous across the rollover and its
    // time mean stays on the configured profile.
    struct Mode {
        double amp_u, amp_v;
        int m_lon;        // zonal wavenumber
        double k_lat;     // latitudinal wavenumber (on [-pi/2, pi/2])
        int m_time;       // harmonic of the horizon
        double phase;
        double alt_phase; // shifts mode expression across altitude levels
    };
    Rng rng(derive_seed(seed, 0x77696e64ULL));
    std::vector<Mode> modes(static_cast<std::size_t>(std::max(0, p.noise_modes)));
    for (auto& m : modes) {
        m.amp_u = p.noise_zonal * (0.5 + rng.uniform());
        m.amp_v = p.noise_meridional * (0.5 + rng.uniform());
        m.m_lon = 1 + static_cast<int>(rng.uniform_index(4));
        m.k_lat = 1.0 + 2.0 * rng.uniform();
        m.m_time = 6 + static_cast<int>(rng.uniform_index(52));
        m.phase = rng.uniform(0.0, kTwoPi);
        m.alt_phase = rng.uniform(0.0, kTwoPi);
    }
    const double norm = modes.empty() ? 1.0 : 1.0 / std::sqrt(static_cast<double>(modes.size()));

    const std::size_t total = static_cast<std::size_t>(nt) * p.n_lon * p.n_lat * p.n_alt;
    std::vector<double> zonal(total), meridional(total);
    const double span = p.alt_max_m - p.alt_min_m;
    const double period = time_s.back() - time_s.front();

    std::size_t idx = 0;
    for (int it = 0; it < nt; ++it) {
        const double tfrac = kTwoPi * (time_s[it] / period);
        for (int i = 0; i < p.n_lon; ++i) {
            for (int j = 0; j < p.n_lat; ++j) {
                const double s2lat = std::sin(2.0 * lat[j]);
                for (int k = 0; k < p.n_alt; ++k, ++idx) {
                    const double hfrac = (alt[k] - p.alt_min_m) / span;
                    double u = p.zonal_at_alt_min + hfrac * (p.zonal_at_alt_max - p.zonal_at_alt_min);
                    double v = (p.meridional_at_alt_min +
                                hfrac * (p.meridional_at_alt_max - p.meridional_at_alt_min)) *
                               s2lat;
                    for (const auto& m : modes) {
                        const double angle = m.m_lon * lon[i] + m.k_lat * lat[j] +
                                             m.m_time * tfrac + m.phase +
                                             0.9 * std::sin(kTwoPi * hfrac + m.alt_phase);
                        const double c = std::cos(angle);
                        u += norm * m.amp_u * c;
                        v += norm * m.amp_v * std::sin(angle + 0.5 * m.phase);
                    }
                    zonal[idx] = u;
                    meridional[idx] = v;
                }
            }
        }
    }
    return WindField::create(std::move(time_s), std::move(lon), std::move(lat), std::move(alt),
                             std::move(zonal), std::move(meridional));
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& name, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw LoadError(name + ": truncated while reading " + what);
    return v;
}

std::vector<double> read_doubles(std::istream& in, std::size_t n, const std::string& name,
                                 const char* what) {
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw LoadError(name + ": truncated while reading " + what);
    return v;
}

WindField load_wind_binary(std::istream& in, const std::string& name) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw LoadError(name + ": bad magic, not a wind file");
    }
    const auto version = read_pod<std::uint32_t>(in, name, "version");
    if (version != kVersion) {
        throw LoadError(name + ": unsupported wind file version " + std::to_string(version));
    }
    const auto nt = read_pod<std::uint32_t>(in, name, "time axis length");
    const auto nlon = read_pod<std::uint32_t>(in, name, "lon axis length");
    const auto nlat = read_pod<std::uint32_t>(in, name, "lat axis length");
    const auto nalt = read_pod<std::uint32_t>(in, name, "alt axis length");
    const std::uint64_t cells = std::uint64_t(nt) * nlon * nlat * nalt;
    if (cells == 0 || cells > (1ULL << 33)) {
        throw LoadError(name + ": implausible grid shape in header");
    }
    auto time_s = read_doubles(in, nt, name, "time axis");
    auto lon = read_doubles(in, nlon, name, "lon axis");
    auto lat = read_doubles(in, nlat, name, "lat axis");
    auto alt = read_doubles(in, nalt, name, "alt axis");
    auto zonal = read_doubles(in, cells, name, "zonal values");
    auto meridional = read_doubles(in, cells, name, "meridional values");
    try {
        return WindField::create(std::move(time_s), std::move(lon), std::move(lat), std::move(alt),
                                 std::move(zonal), std::move(meridional));
    } catch (const LoadError& e) {
        throw LoadError(name + ": " + e.what());
    }
}

WindField load_wind_csv(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw LoadError(name + ": empty CSV");
    struct Row {
        double t, lon, lat, alt, u, v;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Row r;
        char comma;
        std::istringstream ss(line);
        ss >> r.t >> comma >> r.lon >> comma >> r.lat >> comma >> r.alt >> comma >> r.u >> comma >>
            r.v;
        if (ss.fail()) {
            throw LoadError(name + ": malformed CSV row at line " + std::to_string(line_no));
        }
        r.lon = deg_to_rad(r.lon);
        r.lat = deg_to_rad(r.lat);
        rows.push_back(r);
    }
    if (rows.empty()) throw LoadError(name + ": CSV has no data rows");

    auto unique_sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    std::vector<double> ts, lons, lats, alts;
    for (const auto& r : rows) {
        ts.push_back(r.t);
        lons.push_back(r.lon);
        lats.push_back(r.lat);
        alts.push_back(r.alt);
    }
    ts = unique_sorted(ts);
    lons = unique_sorted(lons);
    lats = unique_sorted(lats);
    alts = unique_sorted(alts);
    const std::size_t expected = ts.size() * lons.size() * lats.size() * alts.size();
    if (rows.size() != expected) {
        throw LoadError(name + ": CSV rows (" + std::to_string(rows.size()) +
                        ") do not form a complete grid of " + std::to_string(expected) + " samples");
    }
    auto find = [](const std::vector<double>& axis, double x) {
        return static_cast<int>(std::lower_bound(axis.begin(), axis.end(), x) - axis.begin());
    };
    std::vector<double> zonal(expected, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> meridional(expected, std::numeric_limits<double>::quiet_NaN());
    const std::size_t nlon = lons.size(), nlat = lats.size(), nalt = alts.size();
    for (const auto& r : rows) {
        const std::size_t idx =
            ((static_cast<std::size_t>(find(ts, r.t)) * nlon + find(lons, r.lon)) * nlat +
             find(lats, r.lat)) *
                nalt +
            find(alts, r.alt);
        if (!std::isnan(zonal[idx])) {
            throw LoadError(name + ": duplicate CSV sample for one grid cell");
        }
        zonal[idx] = r.u;
        meridional[idx] = r.v;
    }
    try {
        return WindField::create(std::move(ts), std::move(lons), std::move(lats), std::move(alts),
                                 std::move(zonal), std::move(meridional));
    } catch (const LoadError& e) {
        throw LoadError(name + ": " + e.what());
    }
}

}  // namespace

WindField load_wind_field(std::istream& in, const std::string& name) {
    const int first = in.peek();
    if (first == std::char_traits<char>::to_int_type(kMagic[0])) {
        return load_wind_binary(in, name);
    }
    return load_wind_csv(in, name);
}

WindField load_wind_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path + ": cannot open wind file");
    return load_wind_field(in, path);
}

void save_wind_field_binary(const WindField& field, std::ostream& out) {
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(field.n_time()));
    write_pod(out, static_cast<std::uint32_t>(field.n_lon()));
    write_pod(out, static_cast<std::uint32_t>(field.n_lat()));
    write_pod(out, static_cast<std::uint32_t>(field.n_alt()));
    auto write_vec = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_vec(field.time_axis());
    write_vec(field.lon_axis());
    write_vec(field.lat_axis());
    write_vec(field.alt_axis());
    write_vec(field.zonal());
    write_vec(field.meridional());
}

void save_wind_field_csv(const WindField& field, std::ostream& out) {
    out << "time_s,lon_deg,lat_deg,alt_m,zonal_ms,meridional_ms\n";
    char buf[256];
    for (int it = 0; it < field.n_time(); ++it) {
        for (int i = 0; i < field.n_lon(); ++i) {
            for (int j = 0; j < field.n_lat(); ++j) {
                for (int k = 0; k < field.n_alt(); ++k) {
                    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                                  field.time_axis()[it], rad_to_deg(field.lon_axis()[i]),
                                  rad_to_deg(field.lat_axis()[j]), field.alt_axis()[k],
                                  field.zonal_at(it, i, j, k), field.meridional_at(it, i, j, k));
                    out << buf;
                }
            }
        }
    }
}

void save_wind_field(const WindField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path + ": cannot open for writing");
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        save_wind_field_csv(field, out);
    } else {
        save_wind_field_binary(field, out);
    }
    if (!out) throw LoadError(path + ": write failed");
}

}  // namespace aeroguide
