#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoverify/csv.hpp"
#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

inline constexpr UnixTime kTrackCadence = 6 * kSecondsPerHour;

struct TcPoint {
    UnixTime time = 0;
    double lat = 0.0;
    double lon = 0.0;
    double ws_max = 0.0;             // m/s
    std::optional<double> msl_min;   // hPa
};

struct TcTrack {
    std::string storm_id;
    std::string storm_name;
    std::vector<TcPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// Times must increase strictly and every step must be a whole number of
/// 6-hour intervals.
inline void validate_track_times(const TcTrack& track) {
    for (std::size_t k = 1; k < track.points.size(); ++k) {
        const UnixTime dt = track.points[k].time - track.points[k - 1].time;
        if (dt <= 0)
            throw Error(ErrorKind::NonMonotonicTime,
                        "storm " + track.storm_id + " repeats or reverses time at " +
                            format_iso(track.points[k].time));
        if (dt % kTrackCadence != 0)
            throw Error(ErrorKind::IrregularCadence,
                        "storm " + track.storm_id + " step of " + std::to_string(dt) +
                            " s is not a multiple of 6 h");
    }
}

/// Reads storm_id,name,time,lat,lon,ws_max,msl_min. Tracks come back ordered
/// by storm_id, points ordered by time.
inline std::vector<TcTrack> read_tracks(const std::filesystem::path& path) {
    const csv::Table t = csv::read_table(path);
    const std::size_t c_id = t.column("storm_id");
    const std::size_t c_name = t.column("name");
    const std::size_t c_time = t.column("time");
    const std::size_t c_lat = t.column("lat");
    const std::size_t c_lon = t.column("lon");
    const std::size_t c_ws = t.column("ws_max");
    const std::size_t c_msl = t.column("msl_min");

    std::map<std::string, TcTrack> by_id;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::size_t row = t.line_numbers[r];
        if (f[c_id].empty()) throw ParseError(row, "empty storm_id");
        TcPoint p;
        const auto time = try_parse_iso(f[c_time]);
        if (!time) throw ParseError(row, "bad time '" + f[c_time] + "'");
        p.time = *time;
        p.lat = csv::parse_double(f[c_lat], row, "lat");
        p.lon = csv::parse_double(f[c_lon], row, "lon");
        p.ws_max = csv::parse_double(f[c_ws], row, "ws_max");
        if (!std::isfinite(p.lat) || p.lat < -90.0 || p.lat > 90.0)
            throw ParseError(row, "lat " + f[c_lat] + " outside [-90, 90]");
        if (!std::isfinite(p.lon)) throw ParseError(row, "non-finite lon");
        p.lon = normalize_lon(p.lon);
        if (!std::isfinite(p.ws_max) || p.ws_max < 0.0)
            throw ParseError(row, "ws_max must be finite and non-negative");
        if (!f[c_msl].empty()) {
            const double msl = csv::parse_double(f[c_msl], row, "msl_min");
            if (!std::isfinite(msl)) throw ParseError(row, "non-finite msl_min");
            p.msl_min = msl;
        }
        TcTrack& track = by_id[f[c_id]];
        if (track.storm_id.empty()) {
            track.storm_id = f[c_id];
            track.storm_name = f[c_name];
        }
        track.points.push_back(p);
    }

    std::vector<TcTrack> tracks;
    tracks.reserve(by_id.size());
    for (auto& [id, track] : by_id) {
        std::stable_sort(track.points.begin(), track.points.end(),
                         [](const TcPoint& a, const TcPoint& b) { return a.time < b.time; });
        validate_track_times(track);
        tracks.push_back(std::move(track));
    }
    return tracks;
}

inline std::string format_tracks(const std::vector<TcTrack>& tracks,
                                 const std::optional<std::string>& params_line = std::nullopt) {
    std::string out;
    if (params_line) out += *params_line + "\n";
    out += "storm_id,name,time,lat,lon,ws_max,msl_min\n";
    char buf[32];
    for (const TcTrack& track : tracks) {
        for (const TcPoint& p : track.points) {
            std::vector<std::string> f;
            f.push_back(track.storm_id);
            f.push_back(track.storm_name);
            f.push_back(format_iso(p.time));
            std::snprintf(buf, sizeof buf, "%.6f", p.lat);
            f.emplace_back(buf);
            std::snprintf(buf, sizeof buf, "%.6f", p.lon);
            f.emplace_back(buf);
            f.push_back(csv::format_g6(p.ws_max));
            f.push_back(p.msl_min ? csv::format_g6(*p.msl_min) : std::string());
            out += csv::join(f) + "\n";
        }
    }
    return out;
}

inline void write_tracks(const std::vector<TcTrack>& tracks, const std::filesystem::path& path,
                         const std::optional<std::string>& params_line = std::nullopt) {
    csv::write_text(path, format_tracks(tracks, params_line));
}

}  // namespace geoverify
