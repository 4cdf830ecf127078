#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "geoverify/error.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Tolerance used when deciding whether a coordinate lands on a grid node.
inline constexpr double kNodeTolDeg = 1e-6;

/// cos of an angle in degrees, exactly zero at the poles.
inline double cos_deg(double deg) {
    if (std::abs(std::abs(deg) - 90.0) < 1e-12) return 0.0;
    return std::cos(deg * kDegToRad);
}

/// Maps any longitude into [0, 360).
inline double normalize_lon(double lon) {
    double r = std::fmod(lon, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r -= 360.0;
    return r;
}

// ---------------------------------------------------------------------------
// Variables
// ---------------------------------------------------------------------------

enum class Role : std::uint8_t { InputOutput = 0, InputOnly = 1 };

/// Pressure level in hPa; 0 denotes a surface (single-level) variable.
inline constexpr int kSurface = 0;

struct VariableId {
    std::string name;
    int level = kSurface;
    Role role = Role::InputOutput;

    bool is_surface() const { return level == kSurface; }

    /// "Z500", "T2M"
    std::string label() const {
        return is_surface() ? name : name + std::to_string(level);
    }

    std::string level_text() const {
        return is_surface() ? std::string("surface") : std::to_string(level);
    }

    // Identity is (name, level); role is an attribute.
    friend bool operator==(const VariableId& a, const VariableId& b) {
        return a.name == b.name && a.level == b.level;
    }
    friend bool operator<(const VariableId& a, const VariableId& b) {
        return std::tie(a.name, a.level) < std::tie(b.name, b.level);
    }
};

inline constexpr int kPressureLevels[13] = {50,  100, 150, 200, 250, 300, 400,
                                            500, 600, 700, 850, 925, 1000};
inline constexpr std::string_view kUpperAirNames[5] = {"Z", "T", "U", "V", "Q"};
inline constexpr std::string_view kSurfaceNames[5] = {"T2M", "MSL", "U10M", "V10M", "WS10M"};
inline constexpr std::string_view kInputOnlyNames[7] = {"OR",   "LSM", "LAT", "LON",
                                                        "HOUR", "DOY", "STEP"};

class VariableCatalog {
public:
    VariableCatalog() = default;

    explicit VariableCatalog(std::vector<VariableId> entries) : entries_(std::move(entries)) {
        for (std::size_t a = 0; a < entries_.size(); ++a) {
            for (std::size_t b = a + 1; b < entries_.size(); ++b) {
                if (entries_[a] == entries_[b]) {
                    throw Error(ErrorKind::InvalidGrid,
                                "duplicate catalog entry " + entries_[a].label());
                }
            }
        }
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const VariableId& operator[](std::size_t c) const { return entries_[c]; }
    const std::vector<VariableId>& entries() const { return entries_; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::optional<std::size_t> index_of(const VariableId& var) const {
        for (std::size_t c = 0; c < entries_.size(); ++c) {
            if (entries_[c] == var) return c;
        }
        return std::nullopt;
    }

    std::size_t require(const VariableId& var) const {
        if (auto c = index_of(var)) return *c;
        throw Error(ErrorKind::UnknownVariable, var.label() + " not in catalog");
    }

    friend bool operator==(const VariableCatalog& a, const VariableCatalog& b) {
        if (a.entries_.size() != b.entries_.size()) return false;
        for (std::size_t c = 0; c < a.entries_.size(); ++c) {
            if (!(a.entries_[c] == b.entries_[c]) || a.entries_[c].role != b.entries_[c].role)
                return false;
        }
        return true;
    }

private:
    std::vector<VariableId> entries_;
};

/// The 70 input-output weather channels: (Z,T,U,V,Q) outer, levels ascending
/// inner, then the surface variables.
inline VariableCatalog weather_catalog() {
    std::vector<VariableId> v;
    v.reserve(70);
    for (auto name : kUpperAirNames) {
        for (int lev : kPressureLevels) v.push_back({std::string(name), lev, Role::InputOutput});
    }
    for (auto name : kSurfaceNames) v.push_back({std::string(name), kSurface, Role::InputOutput});
    return VariableCatalog(std::move(v));
}

/// Parses a label such as "Z500", "T2M" or "WS10M". Known surface and
/// input-only names are matched whole; otherwise trailing digits are the
/// pressure level.
inline VariableId parse_variable(std::string_view text) {
    for (auto name : kSurfaceNames) {
        if (text == name) return {std::string(name), kSurface, Role::InputOutput};
    }
    for (auto name : kInputOnlyNames) {
        if (text == name) return {std::string(name), kSurface, Role::InputOnly};
    }
    std::size_t split = text.size();
    while (split > 0 && text[split - 1] >= '0' && text[split - 1] <= '9') --split;
    if (split == 0)
        throw Error(ErrorKind::UnknownVariable, "cannot parse variable '" + std::string(text) + "'");
    if (split == text.size()) return {std::string(text), kSurface};
    return {std::string(text.substr(0, split)), std::stoi(std::string(text.substr(split)))};
}

// ---------------------------------------------------------------------------
// Grid geometry
// ---------------------------------------------------------------------------

struct GridSpec {
    std::size_t n_lat = 0;
    std::size_t n_lon = 0;
    double lat_start = 0.0;
    double lat_step = 0.0;  // negative for north-to-south storage
    double lon_start = 0.0;
    double lon_step = 0.0;

    double latitude(std::size_t i) const { return lat_start + static_cast<double>(i) * lat_step; }
    double longitude(std::size_t j) const {
        return normalize_lon(lon_start + static_cast<double>(j) * lon_step);
    }
    std::size_t size() const { return n_lat * n_lon; }

    /// Longitudes close the full circle, so column n_lon wraps to column 0.
    bool is_global_lon() const {
        return std::abs(static_cast<double>(n_lon) * lon_step - 360.0) < kNodeTolDeg;
    }

    double lat_min() const { return std::min(latitude(0), latitude(n_lat - 1)); }
    double lat_max() const { return std::max(latitude(0), latitude(n_lat - 1)); }

    void validate() const {
        if (n_lat < 2 || n_lon < 1)
            throw Error(ErrorKind::InvalidGrid, "grid needs n_lat >= 2 and n_lon >= 1");
        if (!std::isfinite(lat_start) || !std::isfinite(lat_step) || !std::isfinite(lon_start) ||
            !std::isfinite(lon_step))
            throw Error(ErrorKind::InvalidGrid, "non-finite grid geometry");
        if (lat_step == 0.0) throw Error(ErrorKind::InvalidGrid, "lat_step must be non-zero");
        if (lon_step <= 0.0 && n_lon > 1)
            throw Error(ErrorKind::InvalidGrid, "lon_step must be positive");
        if (lat_min() < -90.0 - kNodeTolDeg || lat_max() > 90.0 + kNodeTolDeg)
            throw Error(ErrorKind::InvalidGrid, "latitudes outside [-90, 90]");
        if (static_cast<double>(n_lon) * lon_step > 360.0 + kNodeTolDeg)
            throw Error(ErrorKind::InvalidGrid, "longitudes overlap the full circle");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Regular global grid stored north-to-south from 90 and west-to-east from 0.
inline GridSpec global_grid(double resolution_deg) {
    GridSpec g;
    g.n_lat = static_cast<std::size_t>(std::lround(180.0 / resolution_deg)) + 1;
    g.n_lon = static_cast<std::size_t>(std::lround(360.0 / resolution_deg));
    g.lat_start = 90.0;
    g.lat_step = -resolution_deg;
    g.lon_start = 0.0;
    g.lon_step = resolution_deg;
    return g;
}

/// North-to-south regional grid covering [south, north] x [west, east] inclusive.
inline GridSpec regional_grid(double north, double south, double west, double east,
                              double resolution_deg) {
    GridSpec g;
    g.n_lat = static_cast<std::size_t>(std::lround((north - south) / resolution_deg)) + 1;
    g.n_lon = static_cast<std::size_t>(std::lround((east - west) / resolution_deg)) + 1;
    g.lat_start = north;
    g.lat_step = -resolution_deg;
    g.lon_start = normalize_lon(west);
    g.lon_step = resolution_deg;
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// Read-only H x W slab, row-major.
struct FieldView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    FieldView() = default;
    FieldView(std::span<const float> d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {
        if (d.size() != r * c)
            throw Error(ErrorKind::ShapeMismatch, "field view length does not match rows*cols");
    }

    float operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<const float> row(std::size_t i) const { return data.subspan(i * cols, cols); }
    std::size_t size() const { return data.size(); }
};

class FieldCube {
public:
    FieldCube() = default;

    FieldCube(GridSpec spec, VariableCatalog catalog, UnixTime valid_time, std::vector<float> values)
        : spec_(spec), catalog_(std::move(catalog)), valid_time_(valid_time),
          values_(std::move(values)) {
        spec_.validate();
        if (values_.size() != catalog_.size() * spec_.size()) {
            throw Error(ErrorKind::ShapeMismatch,
                        "cube holds " + std::to_string(values_.size()) + " values, expected " +
                            std::to_string(catalog_.size() * spec_.size()));
        }
    }

    /// Zero-filled cube.
    FieldCube(GridSpec spec, VariableCatalog catalog, UnixTime valid_time)
        : FieldCube(spec, catalog, valid_time, std::vector<float>(catalog.size() * spec.size())) {}

    const GridSpec& spec() const { return spec_; }
    const VariableCatalog& catalog() const { return catalog_; }
    UnixTime valid_time() const { return valid_time_; }
    std::span<const float> values() const { return values_; }
    std::size_t n_chan() const { return catalog_.size(); }

    FieldView channel(std::size_t c) const {
        return {std::span<const float>(values_).subspan(c * spec_.size(), spec_.size()),
                spec_.n_lat, spec_.n_lon};
    }
    std::span<float> channel_mut(std::size_t c) {
        return std::span<float>(values_).subspan(c * spec_.size(), spec_.size());
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
    }

    friend bool operator==(const FieldCube& a, const FieldCube& b) {
        return a.spec_ == b.spec_ && a.catalog_ == b.catalog_ && a.valid_time_ == b.valid_time_ &&
               std::equal(a.values_.begin(), a.values_.end(), b.values_.begin(), b.values_.end(),
                          [](float x, float y) {
                              return std::bit_cast<std::uint32_t>(x) ==
                                     std::bit_cast<std::uint32_t>(y);
                          });
    }

private:
    GridSpec spec_;
    VariableCatalog catalog_;
    UnixTime valid_time_ = 0;
    std::vector<float> values_;
};

// ---------------------------------------------------------------------------
// Latitude weights
// ---------------------------------------------------------------------------

struct LatWeights {
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }
};

/// a_i = H cos(phi_i) / sum_k cos(phi_k)
inline LatWeights latitude_weights(std::span<const double> latitudes_deg) {
    LatWeights w;
    w.weights.resize(latitudes_deg.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < latitudes_deg.size(); ++i) {
        w.weights[i] = std::max(0.0, cos_deg(latitudes_deg[i]));
        sum += w.weights[i];
    }
    if (!(sum > 0.0)) throw Error(ErrorKind::ZeroWeightSum, "sum of cos(latitude) is zero");
    const double scale = static_cast<double>(latitudes_deg.size()) / sum;
    for (double& x : w.weights) x *= scale;
    return w;
}

inline LatWeights latitude_weights(const GridSpec& spec) {
    spec.validate();
    std::vector<double> lats(spec.n_lat);
    for (std::size_t i = 0; i < spec.n_lat; ++i) lats[i] = spec.latitude(i);
    return latitude_weights(lats);
}

// ---------------------------------------------------------------------------
// Channel selection and cropping
// ---------------------------------------------------------------------------

inline FieldView select_channel(const FieldCube& cube, const VariableId& var) {
    return cube.channel(cube.catalog().require(var));
}

/// Returns the sub-cube whose nodes fall inside the closed ranges. Bounds that
/// fall inside the grid must coincide with grid nodes; bounds beyond the grid
/// are clipped. Longitude ranges may cross the 0/360 seam on global grids
/// (west > east).
inline FieldCube regional_crop(const FieldCube& cube, std::pair<double, double> lat_range,
                               std::pair<double, double> lon_range) {
    const GridSpec& g = cube.spec();
    const double lo = std::min(lat_range.first, lat_range.second);
    const double hi = std::max(lat_range.first, lat_range.second);

    auto check_lat_bound = [&](double b) {
        if (b < g.lat_min() - kNodeTolDeg || b > g.lat_max() + kNodeTolDeg) return;
        const double steps = (b - g.lat_start) / g.lat_step;
        if (std::abs(steps - std::round(steps)) * std::abs(g.lat_step) > kNodeTolDeg)
            throw Error(ErrorKind::MisalignedRange,
                        "latitude bound " + std::to_string(b) + " is not a grid node");
    };
    check_lat_bound(lo);
    check_lat_bound(hi);

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < g.n_lat; ++i) {
        const double lat = g.latitude(i);
        if (lat >= lo - kNodeTolDeg && lat <= hi + kNodeTolDeg) rows.push_back(i);
    }

    // Longitude: distance east of the west bound, in [0, 360).
    const double west = normalize_lon(lon_range.first);
    const double raw_span = lon_range.second - lon_range.first;
    const bool full_circle = raw_span >= 360.0 - kNodeTolDeg;
    double span = full_circle ? 360.0 : normalize_lon(raw_span);
    if (!full_circle && std::abs(span - 360.0) < kNodeTolDeg) span = 0.0;

    auto east_of_west = [&](double lon) {
        double d = normalize_lon(lon - west);
        if (360.0 - d < kNodeTolDeg) d = 0.0;
        return d;
    };
    auto covers = [&](double lon) {
        if (g.is_global_lon()) return true;
        const double d = normalize_lon(lon - g.lon_start);
        const double extent = static_cast<double>(g.n_lon - 1) * g.lon_step;
        return d <= extent + kNodeTolDeg || 360.0 - d < kNodeTolDeg;
    };
    auto check_lon_bound = [&](double b) {
        if (!covers(b)) return;
        double steps = normalize_lon(b - g.lon_start) / g.lon_step;
        if (360.0 - normalize_lon(b - g.lon_start) < kNodeTolDeg) steps = 0.0;
        if (std::abs(steps - std::round(steps)) * g.lon_step > kNodeTolDeg)
            throw Error(ErrorKind::MisalignedRange,
                        "longitude bound " + std::to_string(b) + " is not a grid node");
    };
    if (!full_circle) {
        check_lon_bound(lon_range.first);
        check_lon_bound(lon_range.second);
    }

    std::vector<std::size_t> cols;
    if (full_circle) {
        for (std::size_t j = 0; j < g.n_lon; ++j) cols.push_back(j);
    } else if (g.is_global_lon()) {
        // Walk east from the west-most selected column, wrapping the seam.
        std::size_t start = g.n_lon;
        double best = 361.0;
        for (std::size_t j = 0; j < g.n_lon; ++j) {
            const double d = east_of_west(g.longitude(j));
            if (d <= span + kNodeTolDeg && d < best) {
                best = d;
                start = j;
            }
        }
        if (start < g.n_lon) {
            for (std::size_t k = 0; k < g.n_lon; ++k) {
                const std::size_t j = (start + k) % g.n_lon;
                if (east_of_west(g.longitude(j)) > span + kNodeTolDeg) break;
                cols.push_back(j);
            }
        }
    } else {
        for (std::size_t j = 0; j < g.n_lon; ++j) {
            if (east_of_west(g.longitude(j)) <= span + kNodeTolDeg) cols.push_back(j);
        }
        for (std::size_t k = 1; k < cols.size(); ++k) {
            if (cols[k] != cols[k - 1] + 1)
                throw Error(ErrorKind::MisalignedRange, "longitude range splits the regional grid");
        }
    }

    if (rows.empty() || cols.empty())
        throw Error(ErrorKind::EmptyRegion, "requested range does not intersect the grid");
    if (rows.size() < 2)
        throw Error(ErrorKind::EmptyRegion, "crop must keep at least two latitude rows");

    GridSpec out;
    out.n_lat = rows.size();
    out.n_lon = cols.size();
    out.lat_start = g.latitude(rows.front());
    out.lat_step = g.lat_step;
    out.lon_start = g.longitude(cols.front());
    out.lon_step = g.lon_step;
    if (rows.size() == g.n_lat && cols.size() == g.n_lon && cols.front() == 0) {
        out.lat_start = g.lat_start;
        out.lon_start = g.lon_start;
    }

    std::vector<float> values;
    values.reserve(cube.n_chan() * out.size());
    for (std::size_t c = 0; c < cube.n_chan(); ++c) {
        const FieldView f = cube.channel(c);
        for (std::size_t i : rows) {
            for (std::size_t j : cols) values.push_back(f(i, j));
        }
    }
    return FieldCube(out, cube.catalog(), cube.valid_time(), std::move(values));
}

}  // namespace geoverify
