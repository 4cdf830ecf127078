#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoverify/csv.hpp"
#include "geoverify/cube_io.hpp"
#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/parallel.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

/// (calendar day in a 366-day year, UTC hour in {0, 6, 12, 18})
struct ClimKey {
    int day = 1;
    int hour = 0;

    friend auto operator<=>(const ClimKey&, const ClimKey&) = default;
};

inline ClimKey climatology_key(UnixTime valid_time) {
    const CivilTime c = to_civil(valid_time);
    if (c.minute != 0 || c.second != 0 || c.hour % 6 != 0)
        throw Error(ErrorKind::InvalidTime,
                    format_iso(valid_time) + " is not a 00/06/12/18 UTC synoptic time");
    return {calendar_day_366(valid_time), c.hour};
}

/// A time in leap year 2000 that maps to `key`; used to stamp stored fields.
inline UnixTime representative_time(ClimKey key) {
    static constexpr int kCumulative[12] = {0, 31, 60, 91, 121, 152, 182, 213, 244, 274, 305, 335};
    unsigned month = 12;
    while (month > 1 && kCumulative[month - 1] >= key.day) --month;
    CivilTime c;
    c.year = 2000;
    c.month = month;
    c.day = static_cast<unsigned>(key.day - kCumulative[month - 1]);
    c.hour = key.hour;
    return from_civil(c);
}

class Climatology {
public:
    struct Entry {
        std::vector<float> mean;  // C x H x W
        std::size_t count = 0;
    };

    Climatology(GridSpec spec, VariableCatalog catalog, std::map<ClimKey, Entry> entries)
        : spec_(spec), catalog_(std::move(catalog)), entries_(std::move(entries)) {}

    const GridSpec& spec() const { return spec_; }
    const VariableCatalog& catalog() const { return catalog_; }
    const std::map<ClimKey, Entry>& entries() const { return entries_; }

    bool contains(ClimKey key) const { return entries_.count(key) != 0; }

    const Entry& at(ClimKey key) const {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw Error(ErrorKind::MissingKey, "no climatology for day " + std::to_string(key.day) +
                                                   " hour " + std::to_string(key.hour));
        return it->second;
    }

private:
    GridSpec spec_;
    VariableCatalog catalog_;
    std::map<ClimKey, Entry> entries_;
};

/// Mean field M for the calendar key of `valid_time`, stamped with that time.
inline FieldCube lookup(const Climatology& clim, UnixTime valid_time) {
    const auto& entry = clim.at(climatology_key(valid_time));
    return FieldCube(clim.spec(), clim.catalog(), valid_time, entry.mean);
}

/// Accumulates cubes in the order they are added. Feed it in sorted
/// valid-time order to get results independent of file discovery order.
class ClimatologyBuilder {
public:
    void add(const FieldCube& cube) {
        if (!spec_) {
            spec_ = cube.spec();
            catalog_ = cube.catalog();
        } else if (!(cube.spec() == *spec_) || !(cube.catalog() == catalog_)) {
            throw Error(ErrorKind::SpecMismatch,
                        "cube at " + format_iso(cube.valid_time()) +
                            " differs in grid or catalog from the first cube");
        }
        Accumulator& acc = sums_[climatology_key(cube.valid_time())];
        if (acc.sum.empty()) acc.sum.assign(cube.values().size(), 0.0);
        const auto v = cube.values();
        for (std::size_t k = 0; k < v.size(); ++k) acc.sum[k] += static_cast<double>(v[k]);
        ++acc.count;
    }

    Climatology finish() && {
        if (!spec_) throw Error(ErrorKind::EmptyInput, "no cubes given to climatology builder");
        std::map<ClimKey, Climatology::Entry> entries;
        for (auto& [key, acc] : sums_) {
            Climatology::Entry e;
            e.count = acc.count;
            e.mean.resize(acc.sum.size());
            const double n = static_cast<double>(acc.count);
            for (std::size_t k = 0; k < acc.sum.size(); ++k)
                e.mean[k] = static_cast<float>(acc.sum[k] / n);
            entries.emplace(key, std::move(e));
        }
        return Climatology(*spec_, std::move(catalog_), std::move(entries));
    }

private:
    struct Accumulator {
        std::vector<double> sum;
        std::size_t count = 0;
    };
    std::optional<GridSpec> spec_;
    VariableCatalog catalog_;
    std::map<ClimKey, Accumulator> sums_;
};

/// Per-key arithmetic mean. Inputs are canonically ordered by valid time
/// (ties broken by value bits) so any permutation yields identical output.
/// Keys are accumulated in parallel; each key's sum stays sequential.
inline Climatology build_climatology(std::span<const FieldCube> cubes, unsigned threads = 1) {
    if (cubes.empty()) throw Error(ErrorKind::EmptyInput, "no cubes given to build_climatology");
    for (const FieldCube& c : cubes) {
        if (!(c.spec() == cubes[0].spec()) || !(c.catalog() == cubes[0].catalog()))
            throw Error(ErrorKind::SpecMismatch, "cube at " + format_iso(c.valid_time()) +
                                                     " differs in grid or catalog");
    }
    std::vector<std::size_t> order(cubes.size());
    std::iota(order.begin(), order.end(), 0);
    auto bits_less = [](std::span<const float> a, std::span<const float> b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                            [](float x, float y) {
                                                return std::bit_cast<std::uint32_t>(x) <
                                                       std::bit_cast<std::uint32_t>(y);
                                            });
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cubes[a].valid_time() != cubes[b].valid_time())
            return cubes[a].valid_time() < cubes[b].valid_time();
        return bits_less(cubes[a].values(), cubes[b].values());
    });

    std::map<ClimKey, std::vector<std::size_t>> groups;
    for (std::size_t idx : order) groups[climatology_key(cubes[idx].valid_time())].push_back(idx);

    std::vector<std::pair<ClimKey, std::vector<std::size_t>>> work(groups.begin(), groups.end());
    std::vector<Climatology::Entry> results(work.size());
    const std::size_t n_values = cubes[0].values().size();
    parallel_for(work.size(), threads, [&](std::size_t w) {
        std::vector<double> sum(n_values, 0.0);
        for (std::size_t idx : work[w].second) {
            const auto v = cubes[idx].values();
            for (std::size_t k = 0; k < n_values; ++k) sum[k] += static_cast<double>(v[k]);
        }
        Climatology::Entry& e = results[w];
        e.count = work[w].second.size();
        e.mean.resize(n_values);
        const double n = static_cast<double>(e.count);
        for (std::size_t k = 0; k < n_values; ++k) e.mean[k] = static_cast<float>(sum[k] / n);
    });

    std::map<ClimKey, Climatology::Entry> entries;
    for (std::size_t w = 0; w < work.size(); ++w) entries.emplace(work[w].first, std::move(results[w]));
    return Climatology(cubes[0].spec(), cubes[0].catalog(), std::move(entries));
}

inline std::string climatology_file_name(ClimKey key) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "clim_%03d_%02d.gvc", key.day, key.hour);
    return buf;
}

/// Writes one cube per key plus manifest.csv (day,hour,count,file) into `dir`.
/// Returns the manifest path.
inline std::filesystem::path save_climatology(const Climatology& clim,
                                              const std::filesystem::path& dir,
                                              const std::string& params_line = "# params:") {
    std::filesystem::create_directories(dir);
    std::string manifest = params_line + "\nday,hour,count,file\n";
    for (const auto& [key, entry] : clim.entries()) {
        const std::string name = climatology_file_name(key);
        write_cube(FieldCube(clim.spec(), clim.catalog(), representative_time(key), entry.mean),
                   dir / name);
        manifest += std::to_string(key.day) + "," + std::to_string(key.hour) + "," +
                    std::to_string(entry.count) + "," + name + "\n";
    }
    const auto path = dir / "manifest.csv";
    csv::write_text(path, manifest);
    return path;
}

inline Climatology load_climatology(const std::filesystem::path& manifest_path) {
    if (!std::filesystem::exists(manifest_path))
        throw Error(ErrorKind::IoError, "climatology manifest " + manifest_path.string() +
                                            " does not exist");
    const csv::Table t = csv::read_table(manifest_path);
    const std::size_t c_day = t.column("day");
    const std::size_t c_hour = t.column("hour");
    const std::size_t c_count = t.column("count");
    const std::size_t c_file = t.column("file");
    const auto base = manifest_path.parent_path();

    std::optional<GridSpec> spec;
    VariableCatalog catalog;
    std::map<ClimKey, Climatology::Entry> entries;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::size_t row = t.line_numbers[r];
        ClimKey key;
        key.day = static_cast<int>(csv::parse_double(f[c_day], row, "day"));
        key.hour = static_cast<int>(csv::parse_double(f[c_hour], row, "hour"));
        const double count = csv::parse_double(f[c_count], row, "count");
        if (key.day < 1 || key.day > 366 || key.hour < 0 || key.hour > 23 || key.hour % 6 != 0 ||
            count < 1.0)
            throw ParseError(row, "invalid climatology key or count");
        FieldCube cube = read_cube(base / f[c_file]);
        if (!spec) {
            spec = cube.spec();
            catalog = cube.catalog();
        } else if (!(cube.spec() == *spec) || !(cube.catalog() == catalog)) {
            throw Error(ErrorKind::SpecMismatch, f[c_file] + " differs from other climatology files");
        }
        Climatology::Entry e;
        e.count = static_cast<std::size_t>(count);
        e.mean.assign(cube.values().begin(), cube.values().end());
        entries.emplace(key, std::move(e));
    }
    if (!spec) throw Error(ErrorKind::EmptyInput, manifest_path.string() + " lists no fields");
    return Climatology(*spec, std::move(catalog), std::move(entries));
}

}  // namespace geoverify
