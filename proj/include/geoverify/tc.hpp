#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/report.hpp"
#include "geoverify/time.hpp"
#include "geoverify/track.hpp"

namespace geoverify {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

/// Haversine distance on a sphere of radius 6371 km.
inline double great_circle_km(LatLon a, LatLon b) {
    const double p1 = a.lat * kDegToRad;
    const double p2 = b.lat * kDegToRad;
    const double dp = (b.lat - a.lat) * kDegToRad;
    const double dl = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dp / 2.0);
    const double s2 = std::sin(dl / 2.0);
    const double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// ---------------------------------------------------------------------------
// Vortex tracker
// ---------------------------------------------------------------------------

struct TrackerParams {
    double search_radius_km = 250.0;     // per 6 h step
    double intensity_radius_km = 250.0;  // window for ws_max
    double ring_radius_km = 250.0;       // closed-low test ring
    double closed_low_hpa = 0.5;         // center must sit this far below the ring mean
    double msl_to_hpa = 0.01;            // MSL channel assumed in Pa
};

enum class TrackEnd {
    Exhausted,     // every cube produced a center
    NoCandidate,   // no MSL local minimum within the search radius
    NotClosedLow,  // best minimum failed the closed-low test
};

constexpr std::string_view to_string(TrackEnd e) {
    switch (e) {
    case TrackEnd::Exhausted: return "exhausted";
    case TrackEnd::NoCandidate: return "no_candidate";
    case TrackEnd::NotClosedLow: return "not_closed_low";
    }
    return "unknown";
}

struct TrackResult {
    TcTrack track;
    TrackEnd end = TrackEnd::Exhausted;
    /// True when no cube yielded a center; the track then holds only the seed.
    bool seed_only = false;
};

namespace detail {

struct NodeIndex {
    std::size_t i = 0;
    std::size_t j = 0;
};

/// Nodes within radius_km of `center`, in row-major order.
template <class Fn>
void for_nodes_within(const GridSpec& g, LatLon center, double radius_km, Fn&& fn) {
    const double radius_deg = radius_km / (kEarthRadiusKm * kDegToRad);
    // Longitude half-width of a spherical cap: asin(sin(r/R) / cos(lat_c)).
    const double cap = std::sin(std::min(radius_km / kEarthRadiusKm, std::numbers::pi / 2));
    const double cc = cos_deg(center.lat);
    const double dlon_limit = cap < cc ? std::asin(cap / cc) / kDegToRad + g.lon_step : 360.0;
    for (std::size_t i = 0; i < g.n_lat; ++i) {
        const double lat = g.latitude(i);
        if (std::abs(lat - center.lat) > radius_deg + std::abs(g.lat_step)) continue;
        for (std::size_t j = 0; j < g.n_lon; ++j) {
            const double lon = g.longitude(j);
            if (dlon_limit < 180.0) {
                double dl = std::abs(lon - normalize_lon(center.lon));
                dl = std::min(dl, 360.0 - dl);
                if (dl > dlon_limit) continue;
            }
            const double d = great_circle_km(center, {lat, lon});
            if (d <= radius_km) fn(NodeIndex{i, j}, d);
        }
    }
}

inline bool is_local_min(const FieldView& f, const GridSpec& g, std::size_t i, std::size_t j) {
    const float v = f(i, j);
    const bool wrap = g.is_global_lon();
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const long ii = static_cast<long>(i) + di;
            long jj = static_cast<long>(j) + dj;
            if (ii < 0 || ii >= static_cast<long>(g.n_lat)) continue;
            if (jj < 0 || jj >= static_cast<long>(g.n_lon)) {
                if (!wrap) continue;
                jj = (jj + static_cast<long>(g.n_lon)) % static_cast<long>(g.n_lon);
            }
            if (f(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)) < v) return false;
        }
    }
    return true;
}

inline bool inside_grid(const GridSpec& g, LatLon p) {
    if (p.lat < g.lat_min() - kNodeTolDeg || p.lat > g.lat_max() + kNodeTolDeg) return false;
    if (g.is_global_lon()) return true;
    const double d = normalize_lon(p.lon - g.lon_start);
    return d <= static_cast<double>(g.n_lon - 1) * g.lon_step + kNodeTolDeg ||
           360.0 - d < kNodeTolDeg;
}

}  // namespace detail

/// Follows an MSL minimum through time-ordered cubes starting from `seed`.
/// Each step picks the lowest MSL local minimum (8-neighbour) within the
/// search radius of the previous center; the center snaps to that node.
/// Tracking stops when no minimum is found or the minimum is not at least
/// closed_low_hpa below the mean MSL on the ring at ring_radius_km.
inline TrackResult track_cyclone(std::span<const FieldCube> cubes, const TcPoint& seed,
                                 const TrackerParams& params = {},
                                 const std::string& storm_id = "", const std::string& name = "") {
    const VariableId msl_var{"MSL", kSurface};
    const VariableId ws_var{"WS10M", kSurface};
    for (const FieldCube& c : cubes) {
        if (!c.catalog().index_of(msl_var) || !c.catalog().index_of(ws_var))
            throw Error(ErrorKind::MissingChannel,
                        "cube at " + format_iso(c.valid_time()) + " lacks MSL or WS10M");
    }
    if (cubes.empty()) throw Error(ErrorKind::EmptyInput, "no cubes to track through");
    if (seed.time != cubes.front().valid_time())
        throw Error(ErrorKind::InvalidTime, "seed time " + format_iso(seed.time) +
                                                " does not match first cube " +
                                                format_iso(cubes.front().valid_time()));
    if (!detail::inside_grid(cubes.front().spec(), {seed.lat, seed.lon}))
        throw Error(ErrorKind::SeedOutsideGrid, "seed outside the cube grid");
    for (std::size_t k = 1; k < cubes.size(); ++k) {
        if (cubes[k].valid_time() <= cubes[k - 1].valid_time())
            throw Error(ErrorKind::NonMonotonicTime, "cubes are not in increasing time order");
    }

    TrackResult result;
    result.track.storm_id = storm_id;
    result.track.storm_name = name;
    LatLon prev{seed.lat, normalize_lon(seed.lon)};

    for (const FieldCube& cube : cubes) {
        const GridSpec& g = cube.spec();
        const FieldView msl = select_channel(cube, msl_var);
        const FieldView ws = select_channel(cube, ws_var);

        std::optional<detail::NodeIndex> best;
        double best_val = std::numeric_limits<double>::infinity();
        double best_dist = std::numeric_limits<double>::infinity();
        detail::for_nodes_within(g, prev, params.search_radius_km,
                                 [&](detail::NodeIndex n, double d) {
                                     if (!detail::is_local_min(msl, g, n.i, n.j)) return;
                                     const double v = msl(n.i, n.j);
                                     if (v < best_val || (v == best_val && d < best_dist)) {
                                         best = n;
                                         best_val = v;
                                         best_dist = d;
                                     }
                                 });
        if (!best) {
            result.end = TrackEnd::NoCandidate;
            break;
        }
        const LatLon center{g.latitude(best->i), g.longitude(best->j)};

        const double half_width = 0.75 * std::abs(g.lat_step) * kEarthRadiusKm * kDegToRad;
        double ring_sum = 0.0;
        std::size_t ring_n = 0;
        detail::for_nodes_within(g, center, params.ring_radius_km + half_width,
                                 [&](detail::NodeIndex n, double d) {
                                     if (std::abs(d - params.ring_radius_km) <= half_width) {
                                         ring_sum += msl(n.i, n.j);
                                         ++ring_n;
                                     }
                                 });
        const double center_hpa = best_val * params.msl_to_hpa;
        if (ring_n == 0 ||
            !(center_hpa <= ring_sum / static_cast<double>(ring_n) * params.msl_to_hpa -
                                params.closed_low_hpa)) {
            result.end = TrackEnd::NotClosedLow;
            break;
        }

        double ws_max = 0.0;
        detail::for_nodes_within(g, center, params.intensity_radius_km,
                                 [&](detail::NodeIndex n, double) {
                                     ws_max = std::max(ws_max, static_cast<double>(ws(n.i, n.j)));
                                 });

        if (great_circle_km(prev, center) > params.search_radius_km)
            throw std::logic_error("tracker moved farther than the search radius");

        result.track.points.push_back({cube.valid_time(), center.lat, center.lon, ws_max, center_hpa});
        prev = center;
    }

    if (result.track.points.empty()) {
        result.seed_only = true;
        result.track.points.push_back(seed);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Track and intensity scores
// ---------------------------------------------------------------------------

struct MatchedPoint {
    UnixTime time = 0;
    int lead_hours = 0;
    double distance_km = 0.0;
    double ws_forecast = 0.0;
    double ws_reference = 0.0;
};

/// Points present in both tracks at the same valid time, optionally limited to
/// `allowed` times. Lead is measured from the forecast track's first point.
inline std::vector<MatchedPoint> match_points(const TcTrack& forecast, const TcTrack& reference,
                                              const std::set<UnixTime>* allowed = nullptr) {
    std::vector<MatchedPoint> out;
    if (forecast.empty()) return out;
    const UnixTime init = forecast.points.front().time;
    std::map<UnixTime, const TcPoint*> ref;
    for (const TcPoint& p : reference.points) ref.emplace(p.time, &p);
    for (const TcPoint& p : forecast.points) {
        auto it = ref.find(p.time);
        if (it == ref.end()) continue;
        if (allowed && !allowed->count(p.time)) continue;
        MatchedPoint m;
        m.time = p.time;
        m.lead_hours = static_cast<int>((p.time - init) / kSecondsPerHour);
        m.distance_km = great_circle_km({p.lat, p.lon}, {it->second->lat, it->second->lon});
        m.ws_forecast = p.ws_max;
        m.ws_reference = it->second->ws_max;
        out.push_back(m);
    }
    return out;
}

inline const VariableId kTrackVariable{"track_km", kSurface};
inline const VariableId kIntensityPooled{"intensity_pooled", kSurface};
inline const VariableId kIntensityPerLeadMean{"intensity_per_lead_mean", kSurface};

/// Mean great-circle distance over matched points; one record for all leads
/// plus one per lead when `by_lead`.
inline std::vector<MetricRecord> track_mae(std::span<const MatchedPoint> matched, bool by_lead) {
    if (matched.empty()) throw Error(ErrorKind::NoOverlap, "tracks share no valid time");
    std::vector<MetricRecord> out;
    double total = 0.0;
    std::map<int, std::pair<double, std::size_t>> per_lead;
    for (const MatchedPoint& m : matched) {
        total += m.distance_km;
        auto& acc = per_lead[m.lead_hours];
        acc.first += m.distance_km;
        ++acc.second;
    }
    out.push_back({kTrackVariable, kAllLeads, Metric::mae,
                   total / static_cast<double>(matched.size()), matched.size()});
    if (by_lead) {
        for (const auto& [lead, acc] : per_lead)
            out.push_back({kTrackVariable, lead, Metric::mae,
                           acc.first / static_cast<double>(acc.second), acc.second});
    }
    return out;
}

inline std::vector<MetricRecord> track_mae(const TcTrack& forecast, const TcTrack& reference,
                                           bool by_lead) {
    return track_mae(match_points(forecast, reference), by_lead);
}

/// Pooled RMSE of ws_max over matched points.
inline MetricRecord intensity_rmse(std::span<const MatchedPoint> matched) {
    if (matched.empty()) throw Error(ErrorKind::NoOverlap, "tracks share no valid time");
    double s = 0.0;
    for (const MatchedPoint& m : matched) {
        const double d = m.ws_forecast - m.ws_reference;
        s += d * d;
    }
    return {kIntensityPooled, kAllLeads, Metric::rmse,
            std::sqrt(s / static_cast<double>(matched.size())), matched.size()};
}

inline MetricRecord intensity_rmse(const TcTrack& forecast, const TcTrack& reference) {
    return intensity_rmse(match_points(forecast, reference));
}

/// Intensity RMSE per lead, the pooled overall value, and the mean of the
/// per-lead values.
inline std::vector<MetricRecord> intensity_rmse_by_lead(std::span<const MatchedPoint> matched) {
    std::vector<MetricRecord> out;
    out.push_back(intensity_rmse(matched));
    std::map<int, std::pair<double, std::size_t>> per_lead;
    for (const MatchedPoint& m : matched) {
        const double d = m.ws_forecast - m.ws_reference;
        auto& acc = per_lead[m.lead_hours];
        acc.first += d * d;
        ++acc.second;
    }
    double mean_of_leads = 0.0;
    for (const auto& [lead, acc] : per_lead) {
        const double r = std::sqrt(acc.first / static_cast<double>(acc.second));
        mean_of_leads += r;
        out.push_back({kIntensityPooled, lead, Metric::rmse, r, acc.second});
    }
    out.push_back({kIntensityPerLeadMean, kAllLeads, Metric::rmse,
                   mean_of_leads / static_cast<double>(per_lead.size()), matched.size()});
    return out;
}

// ---------------------------------------------------------------------------
// Concurrent detection
// ---------------------------------------------------------------------------

struct MatchedCase {
    std::string storm_id;
    UnixTime time = 0;

    friend auto operator<=>(const MatchedCase&, const MatchedCase&) = default;
};

/// (storm, valid time) pairs present in every source and in the reference.
inline std::vector<MatchedCase> concurrent_match(
    const std::map<std::string, std::vector<TcTrack>>& tracks_by_source,
    const std::vector<TcTrack>& reference) {
    if (tracks_by_source.size() < 2)
        throw Error(ErrorKind::EmptyInput, "concurrent matching needs at least two sources");
    auto cases_of = [](const std::vector<TcTrack>& tracks) {
        std::set<MatchedCase> s;
        for (const TcTrack& t : tracks)
            for (const TcPoint& p : t.points) s.insert({t.storm_id, p.time});
        return s;
    };
    std::set<MatchedCase> common = cases_of(reference);
    for (const auto& [source, tracks] : tracks_by_source) {
        const std::set<MatchedCase> mine = cases_of(tracks);
        std::set<MatchedCase> next;
        std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(),
                              std::inserter(next, next.end()));
        common = std::move(next);
    }
    return {common.begin(), common.end()};
}

// ---------------------------------------------------------------------------
// Training-pair filter
// ---------------------------------------------------------------------------

enum class FilterAction { Exclude, Strengthen, Weaken, Keep };

constexpr std::string_view to_string(FilterAction a) {
    switch (a) {
    case FilterAction::Exclude: return "Exclude";
    case FilterAction::Strengthen: return "Strengthen";
    case FilterAction::Weaken: return "Weaken";
    case FilterAction::Keep: return "Keep";
    }
    return "Unknown";
}

struct FilterParams {
    double comparable_tol = 1.0;       // m/s
    double track_threshold_km = 10.0;
};

struct FilterDecision {
    std::string case_id;
    FilterAction decision = FilterAction::Keep;
    std::string reason;
};

/// Rules, first match wins:
///   1. |model MBE| < |WRF MBE|                         -> Exclude
///   2. |model - WRF| <= tol and track error > threshold -> Exclude
///   3. both underestimate                               -> Strengthen
///   4. both overestimate                                -> Weaken
///   5. otherwise                                        -> Keep
inline FilterDecision filter_case(std::string case_id, double model_mbe, double wrf_mbe,
                                  bool both_under, bool both_over, double track_err_km,
                                  const FilterParams& params = {}) {
    if (!std::isfinite(model_mbe) || !std::isfinite(wrf_mbe))
        throw Error(ErrorKind::InvalidFlags, "case " + case_id + ": MBE must be finite");
    if (both_under && both_over)
        throw Error(ErrorKind::InvalidFlags,
                    "case " + case_id + ": both_under and both_over cannot both hold");
    FilterDecision d{std::move(case_id), FilterAction::Keep, "no_rule"};
    if (std::abs(model_mbe) < std::abs(wrf_mbe)) {
        d.decision = FilterAction::Exclude;
        d.reason = "model_less_biased";
    } else if (std::abs(model_mbe - wrf_mbe) <= params.comparable_tol &&
               track_err_km > params.track_threshold_km) {
        d.decision = FilterAction::Exclude;
        d.reason = "comparable_mbe_track_error";
    } else if (both_under) {
        d.decision = FilterAction::Strengthen;
        d.reason = "both_underestimate";
    } else if (both_over) {
        d.decision = FilterAction::Weaken;
        d.reason = "both_overestimate";
    }
    return d;
}

}  // namespace geoverify
