// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>

#include "support.hpp"

using namespace gvtest;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GEOVERIFY_CLI) + " " + args + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t lines_in(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// xorshift fill for the large fixtures, where mt19937 would dominate setup time
void fast_fill(std::vector<float>& v, std::uint64_t seed, float lo, float hi) {
    std::uint64_t s = seed * 0x9E3779B97F4A7C15ull + 1;
    const float scale = (hi - lo) / static_cast<float>(1u << 24);
    for (float& x : v) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        x = lo + static_cast<float>(s >> 40) * scale;
    }
}

Outcome metric_oracles() {
    const auto t = Clock::now();
    auto g = rng(1001);
    double worst = 0.0;
    std::size_t checks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const GridSpec s = random_grid(g, 5, 6);
        const VariableCatalog cat = small_catalog(pick(g, 1, 3));
        const FieldCube f = random_cube(g, s, cat, 0);
        const FieldCube r = random_cube(g, s, cat, 0);
        const FieldCube m = random_cube(g, s, cat, 0, -5, 5);
        const LatWeights w = latitude_weights(s);
        const std::vector<double> ow = oracle_weights(s);
        for (std::size_t c = 0; c < cat.size(); ++c) {
            const FieldView fv = f.channel(c), rv = r.channel(c), mv = m.channel(c);
            worst = std::max(worst, rel_err(weighted_rmse(fv, rv, w), oracle_rmse(fv, rv, ow)));
            worst = std::max(worst, rel_err(weighted_acc(fv, rv, mv, w), oracle_acc(fv, rv, mv, ow)));
            const double peak = dynamic_range(rv);
            worst = std::max(worst, rel_err(psnr(fv, rv, peak), oracle_psnr(fv, rv, peak)));
            checks += 3;
        }
        std::vector<double> fs_(pick(g, 1, 30)), rs_(fs_.size());
        for (std::size_t k = 0; k < fs_.size(); ++k) {
            fs_[k] = uniform(g, 0, 80);
            rs_[k] = uniform(g, 0, 80);
        }
        worst = std::max(worst, rel_err(mbe(fs_, rs_), oracle_mbe(fs_, rs_)));
        ++checks;
    }
    const double secs = seconds_since(t);
    return {worst <= 1e-12 && secs < 5.0,
            fmt("%zu comparisons, max rel err %.3g (limit 1e-12), %.3f s (limit 5 s)", checks, worst, secs)};
}

Outcome set_mean_of_roots() {
    // rows mirrored about the equator keep every weight at exactly 1
    GridSpec s;
    s.n_lat = 2;
    s.n_lon = 8;
    s.lat_start = 10.0;
    s.lat_step = -20.0;
    s.lon_start = 120.0;
    s.lon_step = 1.0;
    const VariableCatalog cat = small_catalog(1);
    const UnixTime t0 = parse_iso("2024-01-01T00:00Z");
    const UnixTime t1 = t0 + 12 * kSecondsPerHour;
    MemoryStore store;
    for (auto [t, off] : {std::pair{t0, 1.0f}, std::pair{t1, 3.0f}}) {
        const UnixTime v = t + 24 * kSecondsPerHour;
        store.forecasts[{t, 24}] = constant_cube(s, cat, v, 500.0f + off);
        store.references[v] = constant_cube(s, cat, v, 500.0f);
    }
    const auto recs = rmse_over_set(store.forecast_source(), store.reference_source(), {{t0, t1}, {24}}, cat[0]);
    const double per0 = weighted_rmse(store.forecasts[{t0, 24}].channel(0), store.references[t0 + 24 * kSecondsPerHour].channel(0),
                                      latitude_weights(s));
    const double per1 = weighted_rmse(store.forecasts[{t1, 24}].channel(0), store.references[t1 + 24 * kSecondsPerHour].channel(0),
                                      latitude_weights(s));
    const bool ok = recs.size() == 1 && per0 == 1.0 && per1 == 3.0 && recs[0].value == 2.0;
    return {ok, fmt("per-time %.17g and %.17g, set score %.17g (want exactly 2; pooled would be %.6f)", per0, per1,
                    recs.empty() ? std::nan("") : recs[0].value, std::sqrt(5.0))};
}

Outcome acc_bounds() {
    auto g = rng(1003);
    std::size_t out_of_range = 0;
    double worst_scale = 0.0, worst_self = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const GridSpec s = random_grid(g, 6, 6);
        const VariableCatalog cat = small_catalog(1);
        const FieldCube zero = constant_cube(s, cat, 0, 0.0f);
        FieldCube fa = random_cube(g, s, cat, 0);
        const FieldCube ra = random_cube(g, s, cat, 0);
        // rank-one anomalies push acc to the clamp edge
        if (trial % 10 == 0) fa = ra;
        const LatWeights w = latitude_weights(s);
        const double acc = weighted_acc(fa.channel(0), ra.channel(0), zero.channel(0), w);
        if (!(acc >= -1.0 && acc <= 1.0)) ++out_of_range;

        const float c = std::ldexp(1.0f, static_cast<int>(pick(g, 0, 20)) - 10);
        std::vector<float> fs(fa.values().begin(), fa.values().end()), rs(ra.values().begin(), ra.values().end());
        for (float& x : fs) x *= c;
        for (float& x : rs) x *= c;
        const FieldCube fsc(s, cat, 0, std::move(fs)), rsc(s, cat, 0, std::move(rs));
        worst_scale = std::max(worst_scale, std::abs(weighted_acc(fsc.channel(0), rsc.channel(0), zero.channel(0), w) - acc));

        const FieldCube m = random_cube(g, s, cat, 0, -5, 5);
        worst_self = std::max(worst_self, std::abs(weighted_acc(ra.channel(0), ra.channel(0), m.channel(0), w) - 1.0));
    }
    const bool ok = out_of_range == 0 && worst_scale < 1e-12 && worst_self <= 1e-12;
    return {ok, fmt("%zu of 1000 outside [-1,1]; max change under rescaling %.3g (limit 1e-12); max |acc(x,x)-1| %.3g",
                    out_of_range, worst_scale, worst_self)};
}

Outcome bilinear_exactness() {
    const GridSpec src = regional_grid(49.5, 0.0, 100.5, 160.5, 1.5);
    const GridSpec dst = regional_grid(49.5, 0.0, 100.5, 160.5, 0.25);
    auto g = rng(1004);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const double a = uniform(g, -500, 500), b = uniform(g, -20, 20), cc = uniform(g, -20, 20);
        auto fn = [&](double lat, double lon) { return 1000.0 + a + b * lat + cc * lon; };
        FieldCube in(src, small_catalog(1), 0);
        for (std::size_t i = 0; i < src.n_lat; ++i)
            for (std::size_t j = 0; j < src.n_lon; ++j)
                in.channel_mut(0)[i * src.n_lon + j] = static_cast<float>(fn(src.latitude(i), src.longitude(j)));
        const FieldCube out = bilinear_upsample(in, dst);
        const FieldView v = out.channel(0);
        for (std::size_t i = 0; i < dst.n_lat; ++i)
            for (std::size_t j = 0; j < dst.n_lon; ++j)
                worst = std::max(worst, rel_err(v(i, j), fn(dst.latitude(i), dst.longitude(j))));
    }
    std::size_t ulp_violations = 0;
    for (float c : {287.3f, -0.1f, 101325.0f, 5.0e-3f}) {
        const FieldCube out = bilinear_upsample(constant_cube(global_grid(1.5), small_catalog(1), 0, c), global_grid(0.25));
        const float lo = std::nextafter(c, -std::numeric_limits<float>::infinity());
        const float hi = std::nextafter(c, std::numeric_limits<float>::infinity());
        for (float x : out.values())
            if (x < lo || x > hi) ++ulp_violations;
    }
    return {worst <= 1e-6 && ulp_violations == 0,
            fmt("linear fields max rel err %.3g (limit 1e-6); %zu constant-field nodes beyond 1 ULP", worst, ulp_violations)};
}

Outcome vortex_tracking() {
    const GridSpec grid = regional_grid(50, 0, 100, 160, 0.25);
    auto g = rng(1005);
    auto within_cell = [&](const TcPoint& p, LatLon c) {
        return std::abs(p.lat - c.lat) <= std::abs(grid.lat_step) + 1e-9 && std::abs(p.lon - c.lon) <= grid.lon_step + 1e-9;
    };
    std::size_t bad_center = 0, bad_ws = 0, short_tracks = 0;
    double worst_ws = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LatLon> centers{{uniform(g, 15, 35), uniform(g, 120, 140)}};
        for (int k = 1; k < 5; ++k) centers.push_back(destination(centers.back(), uniform(g, 0, 360), uniform(g, 0, 200)));
        VortexSpec v;
        v.vmax = static_cast<float>(uniform(g, 18, 75));
        v.depth_hpa = uniform(g, 10, 60);
        std::vector<FieldCube> cubes;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            v.center = centers[k];
            cubes.push_back(make_vortex_cube(grid, static_cast<UnixTime>(6 * k) * kSecondsPerHour, v));
        }
        const TrackResult r = track_cyclone(cubes, {0, centers[0].lat, centers[0].lon, 0.0, std::nullopt});
        if (r.track.size() != centers.size()) {
            ++short_tracks;
            continue;
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (!within_cell(r.track.points[k], centers[k])) ++bad_center;
            const double d = std::abs(r.track.points[k].ws_max - static_cast<double>(v.vmax));
            worst_ws = std::max(worst_ws, d);
            if (d > 1e-6) ++bad_ws;
        }
    }
    std::size_t false_tracks = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const double env = uniform(g, 99000, 103000);
        std::vector<FieldCube> cubes;
        for (int k = 0; k < 5; ++k) cubes.push_back(make_flat_cube(grid, static_cast<UnixTime>(6 * k) * kSecondsPerHour, env));
        const TrackResult r = track_cyclone(cubes, {0, uniform(g, 15, 35), uniform(g, 120, 140), 0.0, std::nullopt});
        if (!r.seed_only || r.track.size() != 1) ++false_tracks;
    }
    const bool ok = bad_center == 0 && bad_ws == 0 && short_tracks == 0 && false_tracks == 0;
    return {ok, fmt("50 vortices: %zu short tracks, %zu centers off by more than a cell, max ws error %.3g (limit 1e-6); "
                    "%zu false tracks on 20 flat fields",
                    short_tracks, bad_center, worst_ws, false_tracks)};
}

Outcome haversine_spots() {
    const double anti = great_circle_km({0, 0}, {0, 180});
    const double quarter = great_circle_km({0, 0}, {0, 90});
    const double pole = great_circle_km({90, 0}, {-90, 0});
    const double e1 = rel_err(anti, std::numbers::pi * 6371.0);
    const double e2 = rel_err(quarter, std::numbers::pi * 6371.0 / 2.0);
    const double e3 = rel_err(pole, std::numbers::pi * 6371.0);
    return {std::max({e1, e2, e3}) <= 1e-9,
            fmt("antipodal %.6f km (rel err %.3g), pole-to-pole rel err %.3g, quarter %.6f km (rel err %.3g)", anti, e1, e3,
                quarter, e2)};
}

Outcome filter_table() {
    const auto t = Clock::now();
    enum class Bias { model_closer, wrf_closer, comparable };
    enum class Flags { under, over, mixed };
    auto expected = [](Bias b, Flags f, bool far) {
        if (b == Bias::model_closer) return FilterAction::Exclude;
        if (b == Bias::comparable && far) return FilterAction::Exclude;
        if (f == Flags::under) return FilterAction::Strengthen;
        if (f == Flags::over) return FilterAction::Weaken;
        return FilterAction::Keep;
    };
    std::size_t n = 0, wrong = 0;
    for (Bias b : {Bias::model_closer, Bias::wrf_closer, Bias::comparable})
        for (Flags f : {Flags::under, Flags::over, Flags::mixed})
            for (double track : {0.0, 3.0, 10.0, 10.001, 15.0, 250.0})
                for (double scale : {0.5, 1.0, 3.0}) {
                    double m = 0, w = 0;
                    switch (b) {
                    case Bias::model_closer: m = 2.0 * scale; w = 5.0 * scale; break;
                    case Bias::wrf_closer: m = 6.0 * scale; w = 1.0 * scale; break;
                    case Bias::comparable: m = 4.0 + 0.3 * scale; w = 4.0; break;
                    }
                    // opposite signs are only comparable near zero
                    if (b == Bias::comparable && f == Flags::mixed) {
                        m = 0.3 + 0.1 * scale;
                        w = 0.2;
                    }
                    const double sm = f == Flags::over ? 1.0 : -1.0;
                    const double sw = f == Flags::under ? -1.0 : 1.0;
                    const FilterDecision d = filter_case("c", sm * m, sw * w, f == Flags::under, f == Flags::over, track);
                    ++n;
                    if (d.decision != expected(b, f, track > 10.0)) ++wrong;
                }
    std::size_t invalid_ok = 0;
    for (double track : {3.0, 15.0}) {
        try {
            filter_case("c", -3, -2, true, true, track);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidFlags) ++invalid_ok;
        }
    }
    const double secs = seconds_since(t);
    return {wrong == 0 && invalid_ok == 2 && secs < 1.0,
            fmt("%zu cases, %zu mismatches, contradictory flags rejected %zu/2, %.4f s (limit 1 s)", n, wrong, invalid_ok, secs)};
}

Outcome vqa_fixture() {
    const fs::path path = fs::path(GEOVERIFY_TEST_DATA) / "vqa_fixture.csv";
    const auto items = vqa::read_items(path);
    const csv::Table t = csv::read_table(path);
    auto fraction = [](const std::string& s) {
        const auto slash = s.find('/');
        return slash == std::string::npos ? std::stod(s) : std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    };
    std::size_t mismatches = 0;
    double closed_sum = 0, open_sum = 0;
    std::size_t nc = 0, no = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
        const double want = fraction(t.rows[k][t.column("expected")]);
        double got;
        if (items[k].type == vqa::QuestionType::closed) {
            got = vqa::closed_match(items[k].prediction, items[k].ground_truth) ? 1.0 : 0.0;
            closed_sum += want;
            ++nc;
        } else {
            got = vqa::open_token_recall(items[k].prediction, items[k].ground_truth);
            open_sum += want;
            ++no;
        }
        if (got != want) ++mismatches;
    }
    const auto s = vqa::score(items);
    const bool agg = s.closed_accuracy && s.open_recall && *s.closed_accuracy == closed_sum / static_cast<double>(nc) &&
                     *s.open_recall == open_sum / static_cast<double>(no);
    return {items.size() == 30 && mismatches == 0 && agg,
            fmt("%zu items, %zu per-item mismatches, closed accuracy %.6f, open recall %.6f", items.size(), mismatches,
                s.closed_accuracy.value_or(std::nan("")), s.open_recall.value_or(std::nan("")))};
}

Outcome verify_determinism() {
    // one init with five leads: five forecast and five reference cubes
    const auto fx = write_verify_fixture("acceptance_det", regional_grid(40, 0, 100, 160, 0.5), small_catalog(4),
                                         {parse_iso("2024-08-01T00:00Z")}, {6, 12, 18, 24, 30}, 1009);
    std::vector<std::string> reports;
    for (const char* threads : {"1", "1", "8", "8"}) {
        const fs::path out = fx.root / (std::string("r") + std::to_string(reports.size()) + ".csv");
        const int code = run_cli("verify --forecast " + q(fx.fc_dir) + " --reference " + q(fx.ref_dir) + " --climatology " +
                                 q(fx.clim_manifest) + " --variables Z500,T850,T2M --init-times " + q(fx.init_file) +
                                 " --leads 6:30:6 --threads " + threads + " --out " + q(out));
        if (code != 0) return {false, fmt("verify exited %d", code)};
        reports.push_back(slurp(out));
    }
    const bool same = reports[1] == reports[0] && reports[2] == reports[0] && reports[3] == reports[0];
    fs::remove_all(fx.root);
    return {same && !reports[0].empty(), fmt("4 runs (threads 1,1,8,8), %zu-byte reports, byte-identical: %s", reports[0].size(),
                                             same ? "yes" : "no")};
}

Outcome performance() {
    double rmse_secs = 0.0;
    {
        const GridSpec s = global_grid(0.25);
        const VariableCatalog cat = weather_catalog();
        std::vector<float> a(s.size() * cat.size()), b(a.size());
        fast_fill(a, 1, 200.0f, 300.0f);
        fast_fill(b, 2, 200.0f, 300.0f);
        const FieldCube f(s, cat, 0, std::move(a)), r(s, cat, 0, std::move(b));
        const auto t = Clock::now();
        const LatWeights w = latitude_weights(s);
        double sink = 0.0;
        for (std::size_t c = 0; c < cat.size(); ++c) sink += weighted_rmse(f.channel(c), r.channel(c), w);
        rmse_secs = seconds_since(t);
        if (!std::isfinite(sink)) return {false, "non-finite rmse"};
    }

    // 40 inits x 10 leads on the 0.25 degree global grid, three verified channels per cube
    const fs::path root = scratch_dir("acceptance_perf");
    const fs::path fc = root / "fc", ref = root / "ref";
    fs::create_directories(fc);
    fs::create_directories(ref);
    const GridSpec s = global_grid(0.25);
    const VariableCatalog cat({parse_variable("Z500"), parse_variable("T850"), parse_variable("T2M")});
    const UnixTime first = parse_iso("2024-01-01T00:00Z");
    std::vector<UnixTime> inits;
    std::string init_text;
    for (int k = 0; k < 40; ++k) {
        inits.push_back(first + static_cast<UnixTime>(6 * k) * kSecondsPerHour);
        init_text += format_iso(inits.back()) + "\n";
    }
    spit(root / "inits.txt", init_text);
    std::vector<float> base(s.size() * cat.size());
    fast_fill(base, 3, 250.0f, 290.0f);
    auto perturbed = [&](UnixTime t, std::uint64_t seed) {
        std::vector<float> v = base;
        std::uint64_t x = seed * 2654435761u + 7;
        for (std::size_t k = x % 31; k < v.size(); k += 31) {
            x = x * 6364136223846793005ull + 1442695040888963407ull;
            v[k] += static_cast<float>(x >> 44) * 1e-5f;
        }
        return FieldCube(s, cat, t, std::move(v));
    };
    std::set<UnixTime> valids;
    std::uint64_t seed = 10;
    for (UnixTime t0 : inits)
        for (int lead = 6; lead <= 60; lead += 6) {
            const UnixTime v = t0 + static_cast<UnixTime>(lead) * kSecondsPerHour;
            valids.insert(v);
            write_cube(perturbed(v, ++seed), fc / forecast_file_name(t0, lead));
        }
    ClimatologyBuilder builder;
    for (UnixTime v : valids) {
        write_cube(perturbed(v, ++seed), ref / reference_file_name(v));
        builder.add(perturbed(v, ++seed));
    }
    base = {};
    const fs::path manifest = save_climatology(std::move(builder).finish(), root / "clim", "# params: perf=true");

    const auto t = Clock::now();
    const int code = run_cli("verify --forecast " + q(fc) + " --reference " + q(ref) + " --climatology " + q(manifest) +
                             " --variables Z500,T850,T2M --init-times " + q(root / "inits.txt") +
                             " --leads 6:60:6 --threads 1 --out " + q(root / "report.csv"));
    const double verify_secs = seconds_since(t);
    const std::size_t rows = lines_in(slurp(root / "report.csv"));
    fs::remove_all(root);
    const bool ok = rmse_secs < 1.0 && code == 0 && verify_secs < 60.0 && rows == 62;
    return {ok, fmt("weighted_rmse over 70x721x1440 pair %.3f s (limit 1 s); verify 40 inits x 10 leads x 3 vars "
                    "(%zu cubes) exit %d, %zu report lines, %.1f s (limit 60 s)",
                    rmse_secs, 400 + valids.size(), code, rows, verify_secs)};
}

}  // namespace

int main() {
    report(1, "metric oracle equivalence", metric_oracles);
    report(2, "set score is mean of per-time rmse", set_mean_of_roots);
    report(3, "acc bounds and invariances", acc_bounds);
    report(4, "bilinear exactness", bilinear_exactness);
    report(5, "synthetic vortex tracking", vortex_tracking);
    report(6, "haversine spot values", haversine_spots);
    report(7, "filter truth table", filter_table);
    report(8, "vqa hand-scored fixture", vqa_fixture);
    report(9, "verify determinism across threads", verify_determinism);
    report(10, "performance", performance);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
