#pragma once

// On-disk layout used by the batch tools:
//   forecast cubes   <dir>/<init, basic ISO>_<lead hours>.gvc   e.g. 20240101T0000Z_24.gvc
//   reference cubes  <dir>/<valid, basic ISO>.gvc               e.g. 20240102T0000Z.gvc

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoverify/cube_io.hpp"
#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/metrics.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

inline std::string forecast_file_name(UnixTime init, int lead_hours) {
    return format_iso_basic(init) + "_" + std::to_string(lead_hours) + ".gvc";
}

inline std::string reference_file_name(UnixTime valid) {
    return format_iso_basic(valid) + ".gvc";
}

/// "6:24:6" (start:stop:step, inclusive), "6,12,24", or "24".
inline std::vector<int> parse_leads(std::string_view spec) {
    auto to_int = [&](std::string_view s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(std::string(s), &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::logic_error&) {
            throw ParseError(0, "bad lead spec '" + std::string(spec) + "'");
        }
    };
    std::vector<int> leads;
    if (spec.find(':') != std::string_view::npos) {
        const auto a = spec.find(':');
        const auto b = spec.find(':', a + 1);
        if (b == std::string_view::npos) throw ParseError(0, "lead range needs start:stop:step");
        const int start = to_int(spec.substr(0, a));
        const int stop = to_int(spec.substr(a + 1, b - a - 1));
        const int step = to_int(spec.substr(b + 1));
        if (step <= 0 || stop < start) throw ParseError(0, "empty lead range '" + std::string(spec) + "'");
        for (int v = start; v <= stop; v += step) leads.push_back(v);
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            const auto comma = spec.find(',', pos);
            const auto end = comma == std::string_view::npos ? spec.size() : comma;
            leads.push_back(to_int(spec.substr(pos, end - pos)));
            pos = end + 1;
        }
    }
    for (int v : leads) {
        if (v <= 0 || v % 6 != 0 || v > 240)
            throw ParseError(0, "lead " + std::to_string(v) + " h is not a multiple of 6 in (0, 240]");
    }
    std::sort(leads.begin(), leads.end());
    leads.erase(std::unique(leads.begin(), leads.end()), leads.end());
    return leads;
}

/// Comma-separated labels such as "Z500,T2M,WS10M".
inline std::vector<VariableId> parse_variable_list(std::string_view list) {
    std::vector<VariableId> vars;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const auto end = comma == std::string_view::npos ? list.size() : comma;
        auto tok = list.substr(pos, end - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        if (!tok.empty()) vars.push_back(parse_variable(tok));
        pos = end + 1;
    }
    if (vars.empty()) throw ParseError(0, "empty variable list");
    return vars;
}

/// One timestamp per line; blank lines and '#' comments skipped. Sorted on return.
inline std::vector<UnixTime> read_init_times(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<UnixTime> times;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
        const auto t = try_parse_iso(line);
        if (!t) throw ParseError(row, "bad init time '" + line + "'");
        times.push_back(*t);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

/// Loads forecast cubes from a directory; absent files yield nullopt. The
/// header's valid time must equal init + lead.
inline ForecastSource directory_forecasts(std::filesystem::path dir) {
    return [dir = std::move(dir)](UnixTime init, int lead) -> std::optional<FieldCube> {
        const auto path = dir / forecast_file_name(init, lead);
        if (!std::filesystem::exists(path)) return std::nullopt;
        FieldCube cube = read_cube(path);
        const UnixTime expected = init + static_cast<UnixTime>(lead) * kSecondsPerHour;
        if (cube.valid_time() != expected)
            throw Error(ErrorKind::InvalidTime, path.string() + ": header valid time " +
                                                    format_iso(cube.valid_time()) +
                                                    " != init + lead " + format_iso(expected));
        return cube;
    };
}

inline ReferenceSource directory_references(std::filesystem::path dir) {
    return [dir = std::move(dir)](UnixTime valid) -> std::optional<FieldCube> {
        const auto path = dir / reference_file_name(valid);
        if (!std::filesystem::exists(path)) return std::nullopt;
        FieldCube cube = read_cube(path);
        if (cube.valid_time() != valid)
            throw Error(ErrorKind::InvalidTime, path.string() + ": header valid time " +
                                                    format_iso(cube.valid_time()) +
                                                    " does not match file name");
        return cube;
    };
}

/// *.gvc files in `dir`, sorted by name.
inline std::vector<std::filesystem::path> list_cubes(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorKind::IoError, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".gvc") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace geoverify
