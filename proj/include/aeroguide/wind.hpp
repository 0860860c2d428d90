#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aeroguide/geo.hpp"

namespace aeroguide {

/// Gridded time-varying horizontal wind samples. Axes are strictly
/// increasing; longitude and latitude axes are uniform cell centers, the
/// longitude axis is periodic. Values are indexed (t, lon, lat, alt) row-major
/// with altitude fastest.
class WindField {
public:
    static WindField create(std::vector<double> time_s, std::vector<double> lon_rad,
                            std::vector<double> lat_rad, std::vector<double> alt_m,
                            std::vector<double> zonal, std::vector<double> meridional);

    int n_time() const { return static_cast<int>(time_s_.size()); }
    int n_lon() const { return static_cast<int>(lon_rad_.size()); }
    int n_lat() const { return static_cast<int>(lat_rad_.size()); }
    int n_alt() const { return static_cast<int>(alt_m_.size()); }

    const std::vector<double>& time_axis() const { return time_s_; }
    const std::vector<double>& lon_axis() const { return lon_rad_; }
    const std::vector<double>& lat_axis() const { return lat_rad_; }
    const std::vector<double>& alt_axis() const { return alt_m_; }
    const std::vector<double>& zonal() const { return zonal_; }
    const std::vector<double>& meridional() const { return meridional_; }

    double alt_min() const { return alt_m_.front(); }
    double alt_max() const { return alt_m_.back(); }

    /// Length of the representative horizon; queries past the end roll over
    /// to the first time step.
    double time_period() const { return time_s_.back() - time_s_.front(); }

    std::size_t index(int it, int ilon, int ilat, int ialt) const {
        return ((static_cast<std::size_t>(it) * lon_rad_.size() + ilon) * lat_rad_.size() + ilat) *
                   alt_m_.size() +
               ialt;
    }

    double zonal_at(int it, int ilon, int ilat, int ialt) const {
        return zonal_[index(it, ilon, ilat, ialt)];
    }
    double meridional_at(int it, int ilon, int ilat, int ialt) const {
        return meridional_[index(it, ilon, ilat, ialt)];
    }

    /// Index of the grid cell containing a point (cells are centered on the
    /// axis values; longitude wraps, latitude/altitude clamp).
    int lon_cell(double lon) const;
    int lat_cell(double lat) const;
    int alt_cell(double alt) const;

private:
    WindField() = default;
    std::vector<double> time_s_, lon_rad_, lat_rad_, alt_m_;
    std::vector<double> zonal_, meridional_;
};

struct WindSample {
    double zonal = 0.0;
    double meridional = 0.0;
};

/// Multilinear interpolation in (t, lon, lat, alt). Longitude is periodic and
/// latitude clamps to the axis range. Time is periodic with period t_F - t_0:
/// a query at or past t_F rolls over to the first time step, so the final
/// sample only closes the loop. Throws SimError if the altitude is outside
/// the covered envelope.
WindSample sample_wind(const WindField& field, double t, const GeoPoint& p);

struct VelocityAtom {
    double zonal = 0.0;
    double meridional = 0.0;
    double weight = 0.0;
};

/// Empirical per-cell distribution of the horizontal wind vector over the
/// model horizon. Weights are uniform over time steps, duplicates merged.
struct VelocityDistribution {
    std::vector<VelocityAtom> atoms;
    int lon_idx = 0, lat_idx = 0, alt_idx = 0;
};

VelocityDistribution empirical_distribution(const WindField& field, int lon_idx, int lat_idx,
                                            int alt_idx);

/// Synthetic super-rotating wind model used when no gridded circulation data
/// is available. The mean zonal speed varies with altitude and a Hadley-like
/// meridional component reverses sign across the altitude band, so altitude
/// choice changes both drift speed and direction. Smooth traveling-wave
/// perturbations are layered on top.
struct WindSynthesisParams {
    int n_lon = 48;
    int n_lat = 24;
    int n_alt = 17;
    double alt_min_m = 47'000.0;
    double alt_max_m = 63'000.0;
    double time_step_s = 21'600.0;          // 6 h
    double horizon_s = 117.0 * 86'400.0;    // one Venus solar day

    // Mean zonal wind, linear in altitude (negative = westward, matching
    // Venus's retrograde super-rotation).
    double zonal_at_alt_min = -34.0;
    double zonal_at_alt_max = -94.0;

    // Meridional Hadley amplitude A(h) in v = A(h) * sin(2*lat); linear in
    // altitude. Positive A drives flow poleward.
    double meridional_at_alt_min = -9.0;
    double meridional_at_alt_max = 11.0;

    // Traveling-wave noise (m/s, one sigma-ish amplitude per component).
    double noise_zonal = 12.0;
    double noise_meridional = 8.0;
    int noise_modes = 8;
};

WindField synthesize_wind_field(const WindSynthesisParams& params, std::uint64_t seed);

/// Read a gridded wind file; the format (binary or CSV) is sniffed from the
/// leading bytes. Throws LoadError naming the offending record on invalid
/// input.
WindField load_wind_field(const std::string& path);
WindField load_wind_field(std::istream& in, const std::string& name);

/// Write the binary format (or CSV when the path ends in ".csv").
void save_wind_field(const WindField& field, const std::string& path);
void save_wind_field_binary(const WindField& field, std::ostream& out);
void save_wind_field_csv(const WindField& field, std::ostream& out);

}  // namespace aeroguide
