#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/parallel.hpp"

namespace geoverify {

namespace detail {

/// Position of a coordinate along one source axis: lower node index and the
/// fractional weight of the upper node.
struct AxisPos {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double frac = 0.0;
};

inline constexpr double kSnapSteps = 1e-9;

inline double snap(double steps) {
    const double r = std::round(steps);
    return std::abs(steps - r) < kSnapSteps ? r : steps;
}

inline AxisPos locate_lat(const GridSpec& src, double lat, bool clamp_poles) {
    double s = snap((lat - src.lat_start) / src.lat_step);
    const double last = static_cast<double>(src.n_lat - 1);
    if (s < 0.0 || s > last) {
        if (!clamp_poles)
            throw Error(ErrorKind::OutOfExtent,
                        "target latitude " + std::to_string(lat) + " outside source grid");
        s = s < 0.0 ? 0.0 : last;
    }
    AxisPos p;
    p.lo = static_cast<std::size_t>(std::floor(s));
    if (p.lo >= src.n_lat - 1) p.lo = src.n_lat - 1;
    p.frac = s - static_cast<double>(p.lo);
    p.hi = p.frac > 0.0 ? p.lo + 1 : p.lo;
    return p;
}

inline AxisPos locate_lon(const GridSpec& src, double lon) {
    double offset = normalize_lon(lon - src.lon_start);
    if (360.0 - offset < kNodeTolDeg) offset = 0.0;
    double s = snap(offset / src.lon_step);
    AxisPos p;
    if (src.is_global_lon()) {
        const double n = static_cast<double>(src.n_lon);
        if (s >= n) s -= n;
        p.lo = static_cast<std::size_t>(std::floor(s));
        if (p.lo >= src.n_lon) p.lo = src.n_lon - 1;
        p.frac = s - static_cast<double>(p.lo);
        p.hi = p.frac > 0.0 ? (p.lo + 1) % src.n_lon : p.lo;
        return p;
    }
    const double last = static_cast<double>(src.n_lon - 1);
    if (s > last)
        throw Error(ErrorKind::OutOfExtent,
                    "target longitude " + std::to_string(lon) + " outside source grid");
    p.lo = static_cast<std::size_t>(std::floor(s));
    if (p.lo >= src.n_lon - 1) p.lo = src.n_lon - 1;
    p.frac = s - static_cast<double>(p.lo);
    p.hi = p.frac > 0.0 ? p.lo + 1 : p.lo;
    return p;
}

}  // namespace detail

/// Bilinear interpolation of every channel onto `target`. Global sources wrap
/// across the 0/360 seam and clamp target rows beyond the first/last source
/// latitude to that row; regional sources never extrapolate.
inline FieldCube bilinear_upsample(const FieldCube& cube, const GridSpec& target,
                                   unsigned threads = 1) {
    target.validate();
    const GridSpec& src = cube.spec();
    const bool global = src.is_global_lon();

    std::vector<detail::AxisPos> rows(target.n_lat);
    std::vector<detail::AxisPos> cols(target.n_lon);
    for (std::size_t i = 0; i < target.n_lat; ++i)
        rows[i] = detail::locate_lat(src, target.latitude(i), global);
    for (std::size_t j = 0; j < target.n_lon; ++j)
        cols[j] = detail::locate_lon(src, target.longitude(j));

    const std::size_t n_chan = cube.n_chan();
    std::vector<float> out(n_chan * target.size());
    parallel_for(n_chan * target.n_lat, threads, [&](std::size_t unit) {
        const std::size_t c = unit / target.n_lat;
        const std::size_t i = unit % target.n_lat;
        const FieldView f = cube.channel(c);
        const detail::AxisPos& r = rows[i];
        float* dst = out.data() + c * target.size() + i * target.n_lon;
        for (std::size_t j = 0; j < target.n_lon; ++j) {
            const detail::AxisPos& q = cols[j];
            const double v00 = f(r.lo, q.lo);
            double v;
            if (r.frac == 0.0 && q.frac == 0.0) {
                v = v00;
            } else {
                const double v01 = f(r.lo, q.hi);
                const double v10 = f(r.hi, q.lo);
                const double v11 = f(r.hi, q.hi);
                const double top = v00 + q.frac * (v01 - v00);
                const double bottom = v10 + q.frac * (v11 - v10);
                v = top + r.frac * (bottom - top);
            }
            dst[j] = static_cast<float>(v);
        }
    });
    return FieldCube(target, cube.catalog(), cube.valid_time(), std::move(out));
}

}  // namespace geoverify
