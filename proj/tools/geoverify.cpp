// geoverify: batch front end for forecast verification, downscaling scores,
// cyclone tracking and evaluation, training-pair filtering and VQA scoring.
//
// Exit codes: 0 success, 2 data error, 3 parse error, 4 configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geoverify/geoverify.hpp"

namespace fs = std::filesystem;
using namespace geoverify;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitParse = 3;
constexpr int kExitConfig = 4;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ParseError: return kExitParse;
    case ErrorKind::Config: return kExitConfig;
    default: return kExitData;
    }
}

unsigned default_threads() {
    if (const char* env = std::getenv("GEOVERIFY_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::logic_error&) {
        }
        throw Error(ErrorKind::Config, "GEOVERIFY_THREADS must be a positive integer");
    }
    return 1;
}

std::string fmt_param(double v) { return csv::format_g6(v); }

std::string join_labels(const std::vector<VariableId>& vars) {
    std::string s;
    for (std::size_t k = 0; k < vars.size(); ++k) s += (k ? ";" : "") + vars[k].label();
    return s;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOptions {
    std::string forecast, reference, climatology, variables, init_times, leads, out;
    unsigned threads = 0;
};

int run_verify(const VerifyOptions& o) {
    const auto vars = parse_variable_list(o.variables);
    EvaluationSet set;
    set.lead_hours = parse_leads(o.leads);
    set.init_times = read_init_times(o.init_times);
    if (set.init_times.empty()) throw ParseError(0, o.init_times + " lists no init times");

    std::optional<Climatology> clim;
    if (!o.climatology.empty()) {
        if (!fs::exists(o.climatology))
            throw Error(ErrorKind::MissingKey,
                        "climatology manifest " + o.climatology + " not found; acc needs it");
        clim = load_climatology(o.climatology);
    }

    const auto records =
        evaluate_over_set(directory_forecasts(o.forecast), directory_references(o.reference),
                          clim ? &*clim : nullptr, set, vars, o.threads);

    std::string leads;
    for (int l : set.lead_hours) leads += (leads.empty() ? "" : ";") + std::to_string(l);
    const auto params = csv::params_line({{"command", "verify"},
                                          {"forecast", o.forecast},
                                          {"reference", o.reference},
                                          {"climatology", o.climatology.empty() ? "none" : o.climatology},
                                          {"variables", join_labels(vars)},
                                          {"leads", leads},
                                          {"init_times", std::to_string(set.init_times.size())},
                                          {"weighting", "cos_lat"},
                                          {"set_mean", "mean_of_per_time_scores"}});
    write_report(records, o.out, params);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rmse-map
// ---------------------------------------------------------------------------

struct RmseMapOptions {
    std::string forecast, reference, init_times, variable, out;
    int lead = 0;
};

int run_rmse_map(const RmseMapOptions& o) {
    const VariableId var = parse_variable(o.variable);
    const auto inits = read_init_times(o.init_times);
    if (inits.empty()) throw ParseError(0, o.init_times + " lists no init times");
    const auto fc_src = directory_forecasts(o.forecast);
    const auto ref_src = directory_references(o.reference);
    std::vector<FieldCube> fcs, refs;
    for (UnixTime t0 : inits) {
        const UnixTime valid = t0 + static_cast<UnixTime>(o.lead) * kSecondsPerHour;
        auto fc = fc_src(t0, o.lead);
        auto ref = ref_src(valid);
        if (!fc || !ref)
            throw Error(ErrorKind::MissingCube, "missing cube for init " + format_iso(t0) +
                                                    " lead " + std::to_string(o.lead) + " h");
        fcs.push_back(std::move(*fc));
        refs.push_back(std::move(*ref));
    }
    std::vector<FieldView> fv, rv;
    for (std::size_t k = 0; k < fcs.size(); ++k) {
        fv.push_back(select_channel(fcs[k], var));
        rv.push_back(select_channel(refs[k], var));
    }
    const auto map = rmse_map(fv, rv);
    std::vector<float> values(map.begin(), map.end());
    VariableCatalog catalog({var});
    write_cube(FieldCube(refs.front().spec(), catalog, refs.front().valid_time(), std::move(values)),
               o.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// downscale-eval
// ---------------------------------------------------------------------------

struct DownscaleOptions {
    std::string coarse, truth, model, out, variables;
    double psnr_peak = 0.0;
    unsigned threads = 0;
};

int run_downscale(const DownscaleOptions& o) {
    const auto truth_files = list_cubes(o.truth);
    if (truth_files.empty()) throw Error(ErrorKind::EmptyInput, o.truth + " holds no cubes");
    const std::string peak_mode = o.psnr_peak > 0.0 ? "fixed:" + fmt_param(o.psnr_peak) : "range";

    struct Row {
        UnixTime time;
        VariableId var;
        std::string method, metric;
        double value;
        double peak;
    };
    std::vector<Row> rows;
    // (variable label, metric) -> samples
    std::map<std::pair<std::string, std::string>, std::vector<MonthHourSample>> samples;
    std::vector<VariableId> vars;
    if (!o.variables.empty()) vars = parse_variable_list(o.variables);
    bool mismatches = false;

    for (const fs::path& truth_path : truth_files) {
        const std::string name = truth_path.filename().string();
        const fs::path coarse_path = fs::path(o.coarse) / name;
        const fs::path model_path = fs::path(o.model) / name;
        if (!fs::exists(coarse_path) || !fs::exists(model_path)) {
            std::cerr << "downscale-eval: " << name << ": missing coarse or model file\n";
            mismatches = true;
            continue;
        }
        const FieldCube truth = read_cube(truth_path);
        const FieldCube coarse = read_cube(coarse_path);
        const FieldCube model = read_cube(model_path);
        if (!(model.spec() == truth.spec())) {
            std::cerr << "downscale-eval: " << name << ": model grid differs from truth grid\n";
            mismatches = true;
            continue;
        }
        FieldCube baseline;
        try {
            baseline = bilinear_upsample(coarse, truth.spec(), o.threads);
        } catch (const Error& e) {
            std::cerr << "downscale-eval: " << name << ": " << e.what() << "\n";
            mismatches = true;
            continue;
        }
        std::vector<VariableId> use = vars;
        if (use.empty()) {
            for (const VariableId& v : truth.catalog())
                if (v.role == Role::InputOutput) use.push_back(v);
        }
        const LatWeights w = latitude_weights(truth.spec());
        for (const VariableId& var : use) {
            const FieldView t = select_channel(truth, var);
            const FieldView b = select_channel(baseline, var);
            const FieldView m = select_channel(model, var);
            const double peak = o.psnr_peak > 0.0 ? o.psnr_peak : dynamic_range(t);
            const double rmse_b = weighted_rmse(b, t, w, o.threads);
            const double rmse_m = weighted_rmse(m, t, w, o.threads);
            auto psnr_or_inf = [&](const FieldView& cand) {
                try {
                    return psnr(cand, t, peak, o.threads);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::PerfectMatch)
                        return std::numeric_limits<double>::infinity();
                    throw;
                }
            };
            const double psnr_b = psnr_or_inf(b);
            const double psnr_m = psnr_or_inf(m);
            const UnixTime vt = truth.valid_time();
            rows.push_back({vt, var, "bilinear", "rmse", rmse_b, peak});
            rows.push_back({vt, var, "model", "rmse", rmse_m, peak});
            rows.push_back({vt, var, "bilinear", "psnr", psnr_b, peak});
            rows.push_back({vt, var, "model", "psnr", psnr_m, peak});
            samples[{var.label(), "rmse"}].push_back({vt, rmse_m, rmse_b});
            samples[{var.label(), "psnr"}].push_back({vt, psnr_m, psnr_b});
        }
    }

    const auto params = csv::params_line({{"command", "downscale-eval"},
                                          {"coarse", o.coarse},
                                          {"truth", o.truth},
                                          {"model", o.model},
                                          {"baseline", "bilinear"},
                                          {"rmse", "cos_lat_weighted"},
                                          {"psnr_mse", "unweighted"},
                                          {"psnr_peak", peak_mode},
                                          {"norm_diff", "(model-baseline)/|baseline|"}});
    std::string text = params + "\ntime,variable,level,method,metric,value,peak\n";
    for (const Row& r : rows) {
        text += csv::join({format_iso(r.time), r.var.name, r.var.level_text(), r.method, r.metric,
                           csv::format_g6(r.value), csv::format_g6(r.peak)}) +
                "\n";
    }
    csv::write_text(o.out, text);

    const fs::path out(o.out);
    for (const auto& [key, s] : samples) {
        const auto matrix = month_hour_matrix(s);
        const fs::path mpath = out.parent_path() / (out.stem().string() + "_" + key.first + "_" +
                                                    key.second + "_nd.csv");
        csv::write_text(mpath, format_month_hour_matrix(matrix, params));
    }
    return mismatches ? kExitData : kExitOk;
}

// ---------------------------------------------------------------------------
// climatology
// ---------------------------------------------------------------------------

struct ClimOptions {
    std::string cubes, out;
    unsigned threads = 0;
};

int run_climatology(const ClimOptions& o) {
    const auto files = list_cubes(o.cubes);
    if (files.empty()) throw Error(ErrorKind::EmptyInput, o.cubes + " holds no cubes");
    std::vector<FieldCube> cubes;
    for (const auto& f : files) cubes.push_back(read_cube(f));
    const Climatology clim = build_climatology(cubes, o.threads);
    save_climatology(clim, o.out,
                     csv::params_line({{"command", "climatology"},
                                       {"cubes", o.cubes},
                                       {"samples", std::to_string(cubes.size())},
                                       {"key", "day366_hour"},
                                       {"smoothing", "none"}}));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tc-track
// ---------------------------------------------------------------------------

struct TrackOptions {
    std::string cubes, seeds, out;
    TrackerParams params;
    unsigned threads = 0;
};

std::string tracker_params_line(const TrackerParams& p, const std::string& extra_key,
                                const std::string& extra_value) {
    return csv::params_line({{"command", "tc-track"},
                             {extra_key, extra_value},
                             {"search_radius_km", fmt_param(p.search_radius_km)},
                             {"intensity_radius_km", fmt_param(p.intensity_radius_km)},
                             {"ring_radius_km", fmt_param(p.ring_radius_km)},
                             {"closed_low_hpa", fmt_param(p.closed_low_hpa)},
                             {"msl_to_hpa", fmt_param(p.msl_to_hpa)}});
}

int run_track(const TrackOptions& o) {
    const auto seeds = read_tracks(o.seeds);
    std::vector<FieldCube> cubes;
    for (const auto& f : list_cubes(o.cubes)) cubes.push_back(read_cube(f));
    std::sort(cubes.begin(), cubes.end(),
              [](const FieldCube& a, const FieldCube& b) { return a.valid_time() < b.valid_time(); });

    std::vector<TrackResult> results(seeds.size());
    parallel_for(seeds.size(), o.threads, [&](std::size_t k) {
        const TcTrack& s = seeds[k];
        const TcPoint& seed = s.points.front();
        auto first = std::find_if(cubes.begin(), cubes.end(),
                                  [&](const FieldCube& c) { return c.valid_time() >= seed.time; });
        if (first == cubes.end() || first->valid_time() != seed.time)
            throw Error(ErrorKind::MissingCube,
                        "no cube at seed time " + format_iso(seed.time) + " for " + s.storm_id);
        const std::span<const FieldCube> run(&*first, static_cast<std::size_t>(cubes.end() - first));
        results[k] = track_cyclone(run, seed, o.params, s.storm_id, s.storm_name);
    });

    std::string text = tracker_params_line(o.params, "cubes", o.cubes) + "\n";
    std::vector<TcTrack> tracks;
    for (const TrackResult& r : results) {
        text += "# status: " + r.track.storm_id + " end=" + std::string(to_string(r.end)) +
                " points=" + std::to_string(r.track.size()) +
                " seed_only=" + (r.seed_only ? "true" : "false") + "\n";
        tracks.push_back(r.track);
    }
    text += format_tracks(tracks);
    csv::write_text(o.out, text);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tc-eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::vector<std::string> forecasts;
    std::vector<std::string> sources;
    std::string reference, out;
    bool by_lead = true;
};

/// Forecast storm ids may carry an init suffix ("WP012024@20240101T00Z"); the
/// part before '@' names the reference storm.
std::string base_storm_id(const std::string& id) { return id.substr(0, id.find('@')); }

int run_eval(const EvalOptions& o) {
    std::vector<std::string> names = o.sources;
    if (names.empty()) {
        for (std::size_t k = 0; k < o.forecasts.size(); ++k)
            names.push_back(o.forecasts.size() == 1 ? "forecast" : "source" + std::to_string(k + 1));
    }
    if (names.size() != o.forecasts.size())
        throw Error(ErrorKind::Config, "--sources must name each --forecast file");
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
        throw Error(ErrorKind::Config, "--sources names must be unique");

    const auto reference = read_tracks(o.reference);
    std::map<std::string, const TcTrack*> ref_by_id;
    for (const TcTrack& t : reference) ref_by_id[t.storm_id] = &t;

    std::map<std::string, std::vector<TcTrack>> by_source;
    for (std::size_t k = 0; k < names.size(); ++k) by_source[names[k]] = read_tracks(o.forecasts[k]);

    // Concurrent detection: reference tracks are re-labelled to every forecast
    // id that points at them, so matching runs on (forecast id, time).
    std::optional<std::set<MatchedCase>> allowed;
    if (by_source.size() >= 2) {
        std::set<std::string> ids;
        for (const auto& [src, tracks] : by_source)
            for (const TcTrack& t : tracks) ids.insert(t.storm_id);
        std::vector<TcTrack> expanded;
        for (const std::string& id : ids) {
            auto it = ref_by_id.find(base_storm_id(id));
            if (it == ref_by_id.end()) continue;
            TcTrack copy = *it->second;
            copy.storm_id = id;
            expanded.push_back(std::move(copy));
        }
        const auto cases = concurrent_match(by_source, expanded);
        allowed.emplace(cases.begin(), cases.end());
    }

    std::string text = csv::params_line({{"command", "tc-eval"},
                                         {"reference", o.reference},
                                         {"sources", [&] {
                                              std::string s;
                                              for (const auto& n : names) s += (s.empty() ? "" : ";") + n;
                                              return s;
                                          }()},
                                         {"concurrent", allowed ? "true" : "false"},
                                         {"distance", "haversine_R6371km"},
                                         {"lead_origin", "first_forecast_point"}}) +
                       "\nsource,variable,lead_hours,metric,value,n_samples\n";
    bool any = false;
    for (const auto& [src, tracks] : by_source) {
        std::vector<MatchedPoint> matched;
        for (const TcTrack& t : tracks) {
            auto it = ref_by_id.find(base_storm_id(t.storm_id));
            if (it == ref_by_id.end()) continue;
            std::set<UnixTime> times;
            if (allowed) {
                for (const MatchedCase& c : *allowed)
                    if (c.storm_id == t.storm_id) times.insert(c.time);
            }
            auto m = match_points(t, *it->second, allowed ? &times : nullptr);
            matched.insert(matched.end(), m.begin(), m.end());
        }
        if (matched.empty()) {
            std::cerr << "tc-eval: source " << src << " has no points matching the reference\n";
            continue;
        }
        any = true;
        std::vector<MetricRecord> recs = track_mae(matched, o.by_lead);
        auto intensity = intensity_rmse_by_lead(matched);
        if (!o.by_lead) {
            std::erase_if(intensity, [](const MetricRecord& r) { return r.lead_hours != kAllLeads; });
        }
        recs.insert(recs.end(), intensity.begin(), intensity.end());
        std::sort(recs.begin(), recs.end(), report_order);
        for (const MetricRecord& r : recs) {
            text += csv::join({src, r.variable.name,
                               r.lead_hours == kAllLeads ? "all" : std::to_string(r.lead_hours),
                               std::string(to_string(r.metric)), csv::format_g6(r.value),
                               std::to_string(r.n_samples)}) +
                    "\n";
        }
    }
    csv::write_text(o.out, text);
    if (!any) throw Error(ErrorKind::NoOverlap, "no forecast track overlaps the reference");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tc-filter
// ---------------------------------------------------------------------------

struct FilterOptions {
    std::string cases, out;
    FilterParams params;
};

bool parse_flag(const std::string& s, std::size_t row, const char* what) {
    const std::string v = vqa::normalize_answer(s);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ParseError(row, std::string("bad ") + what + " flag '" + s + "'");
}

int run_filter(const FilterOptions& o) {
    const csv::Table t = csv::read_table(o.cases);
    const std::size_t c_id = t.column("case_id");
    const std::size_t c_model = t.column("model_mbe");
    const std::size_t c_wrf = t.column("wrf_mbe");
    const std::size_t c_under = t.column("both_under");
    const std::size_t c_over = t.column("both_over");
    const std::size_t c_track = t.column("track_err_km");
    std::string text = csv::params_line({{"command", "tc-filter"},
                                         {"cases", o.cases},
                                         {"comparable_tol", fmt_param(o.params.comparable_tol)},
                                         {"track_threshold_km", fmt_param(o.params.track_threshold_km)},
                                         {"mbe_comparison", "absolute"}}) +
                       "\ncase_id,decision,reason\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::size_t row = t.line_numbers[r];
        const auto d = filter_case(f[c_id], csv::parse_double(f[c_model], row, "model_mbe"),
                                   csv::parse_double(f[c_wrf], row, "wrf_mbe"),
                                   parse_flag(f[c_under], row, "both_under"),
                                   parse_flag(f[c_over], row, "both_over"),
                                   csv::parse_double(f[c_track], row, "track_err_km"), o.params);
        text += csv::join({d.case_id, std::string(to_string(d.decision)), d.reason}) + "\n";
    }
    csv::write_text(o.out, text);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth-vortex
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::string out, start = "2024-07-01T00:00:00Z", storm_id = "SYN01", grid = "50,0,100,160,0.25";
    double lat0 = 20.0, lon0 = 130.0, step_km = 100.0, bearing = 315.0;
    double depth_hpa = 30.0, pressure_radius_km = 200.0, rmax_km = 80.0;
    float vmax = 45.5f;
    int steps = 5;
    bool flat = false;
};

GridSpec parse_grid(const std::string& text) {
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto end = comma == std::string::npos ? text.size() : comma;
        v.push_back(csv::parse_double(text.substr(pos, end - pos), 0, "grid"));
        pos = end + 1;
    }
    if (v.size() != 5) throw Error(ErrorKind::Config, "--grid needs north,south,west,east,resolution");
    return regional_grid(v[0], v[1], v[2], v[3], v[4]);
}

int run_synth(const SynthOptions& o) {
    if (o.steps < 1) throw Error(ErrorKind::Config, "--steps must be >= 1");
    const GridSpec grid = parse_grid(o.grid);
    const UnixTime t0 = parse_iso(o.start);
    fs::create_directories(o.out);
    TcTrack truth{o.storm_id, o.storm_id, {}};
    LatLon c{o.lat0, normalize_lon(o.lon0)};
    for (int k = 0; k < o.steps; ++k) {
        const UnixTime t = t0 + k * kTrackCadence;
        VortexSpec v;
        v.center = c;
        v.depth_hpa = o.depth_hpa;
        v.pressure_radius_km = o.pressure_radius_km;
        v.rmax_km = o.rmax_km;
        v.vmax = o.vmax;
        const FieldCube cube = o.flat ? make_flat_cube(grid, t) : make_vortex_cube(grid, t, v);
        write_cube(cube, fs::path(o.out) / reference_file_name(t));
        truth.points.push_back({t, c.lat, c.lon, o.flat ? 0.0 : static_cast<double>(o.vmax),
                                (v.env_pa - (o.flat ? 0.0 : o.depth_hpa * 100.0)) / 100.0});
        c = destination(c, o.bearing, o.step_km);
    }
    const auto params = csv::params_line({{"command", "synth-vortex"},
                                          {"grid", o.grid},
                                          {"lat0", fmt_param(o.lat0)},
                                          {"lon0", fmt_param(o.lon0)},
                                          {"step_km", fmt_param(o.step_km)},
                                          {"bearing", fmt_param(o.bearing)},
                                          {"steps", std::to_string(o.steps)},
                                          {"vmax", fmt_param(o.vmax)},
                                          {"depth_hpa", fmt_param(o.depth_hpa)},
                                          {"flat", o.flat ? "true" : "false"}});
    write_tracks({truth}, fs::path(o.out) / "truth.csv", params);
    TcTrack seed = truth;
    seed.points.resize(1);
    write_tracks({seed}, fs::path(o.out) / "seeds.csv", params);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// vqa-score
// ---------------------------------------------------------------------------

struct VqaOptions {
    std::string items, benchmark, out;
    bool append = false;
};

int run_vqa(const VqaOptions& o) {
    const auto items = vqa::read_items(o.items);
    if (items.empty()) throw Error(ErrorKind::EmptySet, o.items + " holds no items");
    const auto s = vqa::score(items);
    std::vector<MetricRecord> records;
    if (o.append && fs::exists(o.out)) records = read_report(o.out);
    const VariableId bench{o.benchmark, kSurface};
    std::erase_if(records, [&](const MetricRecord& r) { return r.variable == bench; });
    if (s.closed_accuracy)
        records.push_back({bench, 0, Metric::closed_acc, *s.closed_accuracy, s.n_closed});
    if (s.open_recall) records.push_back({bench, 0, Metric::open_recall, *s.open_recall, s.n_open});
    write_report(records, o.out,
                 csv::params_line({{"command", "vqa-score"},
                                   {"closed", "normalized_exact_match"},
                                   {"open", "unique_token_recall"},
                                   {"stopwords", "kept"}}));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast verification and tropical-cyclone diagnostics"};
    app.require_subcommand(1);

    unsigned threads = 0;
    auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "Worker threads (default: GEOVERIFY_THREADS or 1)")
            ->check(CLI::PositiveNumber);
    };

    VerifyOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "Latitude-weighted RMSE and ACC per variable and lead");
    verify_cmd->add_option("--forecast", verify.forecast, "Directory of <init>_<lead>.gvc cubes")->required();
    verify_cmd->add_option("--reference", verify.reference, "Directory of <valid>.gvc cubes")->required();
    verify_cmd->add_option("--climatology", verify.climatology, "Climatology manifest.csv (enables acc)");
    verify_cmd->add_option("--variables", verify.variables, "Comma list, e.g. Z500,T2M")->required();
    verify_cmd->add_option("--init-times", verify.init_times, "File with one init time per line")->required();
    verify_cmd->add_option("--leads", verify.leads, "start:stop:step or comma list, hours")->required();
    verify_cmd->add_option("--out", verify.out, "Report CSV")->required();
    add_threads(verify_cmd);

    RmseMapOptions rmap;
    auto* rmap_cmd = app.add_subcommand("rmse-map", "Unweighted per-gridpoint RMSE over init times");
    rmap_cmd->add_option("--forecast", rmap.forecast)->required();
    rmap_cmd->add_option("--reference", rmap.reference)->required();
    rmap_cmd->add_option("--init-times", rmap.init_times)->required();
    rmap_cmd->add_option("--lead", rmap.lead)->required()->check(CLI::PositiveNumber);
    rmap_cmd->add_option("--variable", rmap.variable)->required();
    rmap_cmd->add_option("--out", rmap.out, "Output .gvc cube holding the map")->required();

    DownscaleOptions down;
    auto* down_cmd = app.add_subcommand("downscale-eval", "Bilinear baseline vs model RMSE/PSNR");
    down_cmd->add_option("--coarse", down.coarse, "Coarse input cubes")->required();
    down_cmd->add_option("--truth", down.truth, "Fine-resolution truth cubes")->required();
    down_cmd->add_option("--model", down.model, "Model output cubes on the truth grid")->required();
    down_cmd->add_option("--out", down.out, "Per-sample CSV; matrices go next to it")->required();
    down_cmd->add_option("--variables", down.variables, "Comma list (default: all io channels)");
    down_cmd->add_option("--psnr-peak", down.psnr_peak, "Fixed PSNR peak (default: truth max-min)")
        ->check(CLI::PositiveNumber);
    add_threads(down_cmd);

    ClimOptions clim;
    auto* clim_cmd = app.add_subcommand("climatology", "Per (day, hour) mean fields");
    clim_cmd->add_option("--cubes", clim.cubes)->required();
    clim_cmd->add_option("--out", clim.out, "Output directory (manifest.csv + cubes)")->required();
    add_threads(clim_cmd);

    TrackOptions track;
    auto* track_cmd = app.add_subcommand("tc-track", "Track MSL minima from seed positions");
    track_cmd->add_option("--cubes", track.cubes)->required();
    track_cmd->add_option("--seeds", track.seeds, "Track CSV; first point of each storm seeds it")->required();
    track_cmd->add_option("--out", track.out)->required();
    track_cmd->add_option("--search-radius-km", track.params.search_radius_km)->check(CLI::PositiveNumber);
    track_cmd->add_option("--intensity-radius-km", track.params.intensity_radius_km)->check(CLI::PositiveNumber);
    track_cmd->add_option("--ring-radius-km", track.params.ring_radius_km)->check(CLI::PositiveNumber);
    track_cmd->add_option("--closed-low-hpa", track.params.closed_low_hpa)->check(CLI::NonNegativeNumber);
    track_cmd->add_option("--msl-to-hpa", track.params.msl_to_hpa)->check(CLI::PositiveNumber);
    add_threads(track_cmd);

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("tc-eval", "Track MAE and intensity RMSE against a reference");
    eval_cmd->add_option("--forecast", eval.forecasts, "Forecast track CSV (repeat per source)")->required();
    eval_cmd->add_option("--sources", eval.sources, "Source names, one per --forecast")->delimiter(',');
    eval_cmd->add_option("--reference", eval.reference, "Best-track CSV")->required();
    eval_cmd->add_option("--out", eval.out)->required();
    eval_cmd->add_flag("!--no-by-lead", eval.by_lead, "Only emit all-lead aggregates");

    FilterOptions filt;
    auto* filt_cmd = app.add_subcommand("tc-filter", "Apply the training-pair filter rules");
    filt_cmd->add_option("--cases", filt.cases)->required();
    filt_cmd->add_option("--out", filt.out)->required();
    filt_cmd->add_option("--comparable-tol", filt.params.comparable_tol, "m/s")->check(CLI::NonNegativeNumber);
    filt_cmd->add_option("--track-threshold-km", filt.params.track_threshold_km)->check(CLI::NonNegativeNumber);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth-vortex", "Write synthetic vortex cubes and truth track");
    synth_cmd->add_option("--out", synth.out)->required();
    synth_cmd->add_option("--grid", synth.grid, "north,south,west,east,resolution");
    synth_cmd->add_option("--start", synth.start);
    synth_cmd->add_option("--storm-id", synth.storm_id);
    synth_cmd->add_option("--lat0", synth.lat0);
    synth_cmd->add_option("--lon0", synth.lon0);
    synth_cmd->add_option("--steps", synth.steps);
    synth_cmd->add_option("--step-km", synth.step_km);
    synth_cmd->add_option("--bearing", synth.bearing);
    synth_cmd->add_option("--vmax", synth.vmax);
    synth_cmd->add_option("--depth-hpa", synth.depth_hpa);
    synth_cmd->add_option("--pressure-radius-km", synth.pressure_radius_km);
    synth_cmd->add_option("--rmax-km", synth.rmax_km);
    synth_cmd->add_flag("--flat", synth.flat, "Uniform MSL, no vortex");

    VqaOptions vq;
    auto* vqa_cmd = app.add_subcommand("vqa-score", "Closed exact-match accuracy and open token recall");
    vqa_cmd->add_option("--items", vq.items, "CSV question_id,type,prediction,ground_truth")->required();
    vqa_cmd->add_option("--benchmark", vq.benchmark, "Name written to the variable column")->required();
    vqa_cmd->add_option("--out", vq.out)->required();
    vqa_cmd->add_flag("--append", vq.append, "Merge into an existing report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (threads == 0) threads = default_threads();
        if (*verify_cmd) {
            verify.threads = threads;
            return run_verify(verify);
        }
        if (*rmap_cmd) return run_rmse_map(rmap);
        if (*down_cmd) {
            down.threads = threads;
            return run_downscale(down);
        }
        if (*clim_cmd) {
            clim.threads = threads;
            return run_climatology(clim);
        }
        if (*track_cmd) {
            track.threads = threads;
            return run_track(track);
        }
        if (*eval_cmd) return run_eval(eval);
        if (*filt_cmd) return run_filter(filt);
        if (*synth_cmd) return run_synth(synth);
        if (*vqa_cmd) return run_vqa(vq);
    } catch (const Error& e) {
        std::cerr << "geoverify: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "geoverify: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
