#pragma once

// Shared fixtures for the unit and acceptance tests: seeded generators for
// small random grids/cubes, scratch directories, and brute-force oracles that
// deliberately avoid the library's reduction helpers.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geoverify/geoverify.hpp"

namespace gvtest {

using namespace geoverify;
namespace fs = std::filesystem;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t pick(std::mt19937_64& g, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

/// Random regular grid: 2..max_lat rows on a step that keeps all latitudes
/// strictly inside (-90, 90), either orientation.
inline GridSpec random_grid(std::mt19937_64& g, std::size_t max_lat, std::size_t max_lon) {
    GridSpec s;
    s.n_lat = pick(g, 2, max_lat);
    s.n_lon = pick(g, 1, max_lon);
    const double step = uniform(g, 0.25, 170.0 / static_cast<double>(s.n_lat));
    const double span = step * static_cast<double>(s.n_lat - 1);
    const double south = uniform(g, -89.0, 89.0 - span);
    if (pick(g, 0, 1) == 0) {
        s.lat_start = south + span;
        s.lat_step = -step;
    } else {
        s.lat_start = south;
        s.lat_step = step;
    }
    s.lon_step = uniform(g, 0.25, 300.0 / static_cast<double>(s.n_lon + 1));
    s.lon_start = uniform(g, 0.0, 360.0);
    s.lon_start = normalize_lon(s.lon_start);
    return s;
}

inline VariableCatalog small_catalog(std::size_t n) {
    static const std::vector<VariableId> pool = {
        {"Z", 500, Role::InputOutput},  {"T", 850, Role::InputOutput},
        {"T2M", kSurface, Role::InputOutput}, {"MSL", kSurface, Role::InputOutput},
        {"U", 250, Role::InputOutput},  {"LSM", kSurface, Role::InputOnly},
    };
    return VariableCatalog(std::vector<VariableId>(pool.begin(), pool.begin() + static_cast<long>(n)));
}

inline FieldCube random_cube(std::mt19937_64& g, const GridSpec& spec, const VariableCatalog& cat,
                             UnixTime t, double lo = -50.0, double hi = 50.0) {
    std::vector<float> v(spec.size() * cat.size());
    for (float& x : v) x = static_cast<float>(uniform(g, lo, hi));
    return FieldCube(spec, cat, t, std::move(v));
}

inline FieldCube constant_cube(const GridSpec& spec, const VariableCatalog& cat, UnixTime t, float c) {
    return FieldCube(spec, cat, t, std::vector<float>(spec.size() * cat.size(), c));
}

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("geoverify_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline bool rel_close(double a, double b, double rel) {
    if (a == b) return true;
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// --- naive oracles -------------------------------------------------------

inline std::vector<double> oracle_weights(const GridSpec& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.n_lat; ++i) sum += std::cos(s.latitude(i) * std::numbers::pi / 180.0);
    std::vector<double> w(s.n_lat);
    for (std::size_t i = 0; i < s.n_lat; ++i)
        w[i] = static_cast<double>(s.n_lat) * std::cos(s.latitude(i) * std::numbers::pi / 180.0) / sum;
    return w;
}

inline double oracle_rmse(const FieldView& f, const FieldView& r, const std::vector<double>& w) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < f.rows; ++i)
        for (std::size_t j = 0; j < f.cols; ++j) {
            const long double d = static_cast<long double>(f(i, j)) - static_cast<long double>(r(i, j));
            acc += static_cast<long double>(w[i]) * d * d;
        }
    return static_cast<double>(std::sqrt(acc / static_cast<long double>(f.rows * f.cols)));
}

inline double oracle_acc(const FieldView& f, const FieldView& r, const FieldView& m,
                         const std::vector<double>& w) {
    long double c = 0.0L, ff = 0.0L, rr = 0.0L;
    for (std::size_t i = 0; i < f.rows; ++i)
        for (std::size_t j = 0; j < f.cols; ++j) {
            const long double fa = static_cast<long double>(f(i, j)) - m(i, j);
            const long double ra = static_cast<long double>(r(i, j)) - m(i, j);
            c += w[i] * fa * ra;
            ff += w[i] * fa * fa;
            rr += w[i] * ra * ra;
        }
    return static_cast<double>(c / std::sqrt(ff * rr));
}

inline double oracle_psnr(const FieldView& c, const FieldView& r, double peak) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const long double d = static_cast<long double>(c.data[k]) - r.data[k];
        s += d * d;
    }
    const long double m = s / static_cast<long double>(c.size());
    return static_cast<double>(10.0L * std::log10(static_cast<long double>(peak) * peak / m));
}

inline double oracle_mbe(const std::vector<double>& f, const std::vector<double>& r) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < f.size(); ++k) s += static_cast<long double>(f[k]) - r[k];
    return static_cast<double>(s / static_cast<long double>(f.size()));
}

/// In-memory forecast/reference sources keyed by (init, lead) / valid time.
struct MemoryStore {
    std::map<std::pair<UnixTime, int>, FieldCube> forecasts;
    std::map<UnixTime, FieldCube> references;

    ForecastSource forecast_source() const {
        return [this](UnixTime t0, int lead) -> std::optional<FieldCube> {
            auto it = forecasts.find({t0, lead});
            if (it == forecasts.end()) return std::nullopt;
            return it->second;
        };
    }
    ReferenceSource reference_source() const {
        return [this](UnixTime t) -> std::optional<FieldCube> {
            auto it = references.find(t);
            if (it == references.end()) return std::nullopt;
            return it->second;
        };
    }
};

/// Writes a directory fixture for the verify subcommand: forecasts and
/// references with random values plus a climatology built from references.
struct VerifyFixture {
    fs::path root;
    fs::path fc_dir, ref_dir, clim_manifest, init_file;
};

inline VerifyFixture write_verify_fixture(const std::string& name, const GridSpec& grid,
                                          const VariableCatalog& cat,
                                          const std::vector<UnixTime>& inits,
                                          const std::vector<int>& leads, std::uint64_t seed) {
    VerifyFixture fx;
    fx.root = scratch_dir(name);
    fx.fc_dir = fx.root / "fc";
    fx.ref_dir = fx.root / "ref";
    fs::create_directories(fx.fc_dir);
    fs::create_directories(fx.ref_dir);
    auto g = rng(seed);
    std::set<UnixTime> valids;
    std::string init_text;
    for (UnixTime t0 : inits) {
        init_text += format_iso(t0) + "\n";
        for (int lead : leads) {
            const UnixTime v = t0 + static_cast<UnixTime>(lead) * kSecondsPerHour;
            valids.insert(v);
            write_cube(random_cube(g, grid, cat, v), fx.fc_dir / forecast_file_name(t0, lead));
        }
    }
    std::vector<FieldCube> history;
    for (UnixTime v : valids) {
        write_cube(random_cube(g, grid, cat, v), fx.ref_dir / reference_file_name(v));
        history.push_back(random_cube(g, grid, cat, v));
    }
    fx.init_file = fx.root / "inits.txt";
    spit(fx.init_file, init_text);
    const Climatology clim = build_climatology(history);
    fx.clim_manifest = save_climatology(clim, fx.root / "clim", "# params: fixture=true");
    return fx;
}

}  // namespace gvtest
