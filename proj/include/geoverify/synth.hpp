#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "geoverify/grid.hpp"
#include "geoverify/tc.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

/// Radially symmetric test vortex: a Gaussian MSL depression and a 10 m wind
/// profile that rises linearly to a flat ring of exactly `vmax`.
struct VortexSpec {
    LatLon center;
    double env_pa = 101000.0;
    double depth_hpa = 30.0;
    double pressure_radius_km = 200.0;
    float vmax = 45.5f;
    double rmax_km = 80.0;
    /// Half-width of the vmax plateau. Must exceed half the node spacing so the
    /// ring maximum lands on grid nodes; 0 selects one grid diagonal.
    double plateau_half_width_km = 0.0;
};

inline double default_plateau_km(const GridSpec& g, double lat) {
    const double dy = std::abs(g.lat_step) * kEarthRadiusKm * kDegToRad;
    const double dx = g.lon_step * kEarthRadiusKm * kDegToRad * std::max(cos_deg(lat), 0.0);
    return std::sqrt(dx * dx + dy * dy);
}

inline double vortex_wind(const VortexSpec& v, double r_km, double half_width_km) {
    const double inner = std::max(v.rmax_km - half_width_km, 1e-3);
    const double outer = v.rmax_km + half_width_km;
    const double vmax = static_cast<double>(v.vmax);
    if (r_km < inner) return vmax * r_km / inner;
    if (r_km <= outer) return vmax;
    return vmax * std::sqrt(outer / r_km);
}

/// Cube with channels (MSL [Pa], WS10M [m/s]) holding one planted vortex.
inline FieldCube make_vortex_cube(const GridSpec& g, UnixTime valid_time, const VortexSpec& v) {
    VariableCatalog catalog({{"MSL", kSurface}, {"WS10M", kSurface}});
    FieldCube cube(g, catalog, valid_time);
    const double hw = v.plateau_half_width_km > 0.0 ? v.plateau_half_width_km
                                                    : default_plateau_km(g, v.center.lat);
    auto msl = cube.channel_mut(0);
    auto ws = cube.channel_mut(1);
    for (std::size_t i = 0; i < g.n_lat; ++i) {
        for (std::size_t j = 0; j < g.n_lon; ++j) {
            const double r = great_circle_km(v.center, {g.latitude(i), g.longitude(j)});
            const double q = r / v.pressure_radius_km;
            msl[i * g.n_lon + j] =
                static_cast<float>(v.env_pa - v.depth_hpa * 100.0 * std::exp(-q * q));
            ws[i * g.n_lon + j] = static_cast<float>(vortex_wind(v, r, hw));
        }
    }
    return cube;
}

/// Cube with uniform MSL and calm winds; no vortex to find.
inline FieldCube make_flat_cube(const GridSpec& g, UnixTime valid_time, double env_pa = 101000.0) {
    VariableCatalog catalog({{"MSL", kSurface}, {"WS10M", kSurface}});
    FieldCube cube(g, catalog, valid_time);
    auto msl = cube.channel_mut(0);
    std::fill(msl.begin(), msl.end(), static_cast<float>(env_pa));
    return cube;
}

/// Point reached from `start` after travelling `distance_km` along the
/// initial bearing (degrees clockwise from north).
inline LatLon destination(LatLon start, double bearing_deg, double distance_km) {
    const double d = distance_km / kEarthRadiusKm;
    const double b = bearing_deg * kDegToRad;
    const double p1 = start.lat * kDegToRad;
    const double l1 = start.lon * kDegToRad;
    const double p2 = std::asin(std::sin(p1) * std::cos(d) + std::cos(p1) * std::sin(d) * std::cos(b));
    const double l2 = l1 + std::atan2(std::sin(b) * std::sin(d) * std::cos(p1),
                                      std::cos(d) - std::sin(p1) * std::sin(p2));
    return {p2 / kDegToRad, normalize_lon(l2 / kDegToRad)};
}

}  // namespace geoverify
