#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoverify/climatology.hpp"
#include "geoverify/csv.hpp"
#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/parallel.hpp"
#include "geoverify/report.hpp"
#include "geoverify/time.hpp"

namespace geoverify {

inline void require_same_shape(const FieldView& a, const FieldView& b, const char* what = "fields") {
    if (a.rows != b.rows || a.cols != b.cols)
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(what) + " differ in shape: " + std::to_string(a.rows) + "x" +
                        std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                        std::to_string(b.cols));
}

inline void require_weights(const FieldView& f, const LatWeights& w) {
    if (w.size() != f.rows)
        throw Error(ErrorKind::ShapeMismatch, "weights length " + std::to_string(w.size()) +
                                                  " != field rows " + std::to_string(f.rows));
}

// ---------------------------------------------------------------------------
// Single-field scores. Every reduction sums one row at a time in double and
// then adds the row partials in row order, so the result does not depend on
// the thread count.
// ---------------------------------------------------------------------------

/// sqrt( 1/(H W) sum_i sum_j a_i (forecast - reference)^2 )
inline double weighted_rmse(const FieldView& forecast, const FieldView& reference,
                            const LatWeights& w, unsigned threads = 1) {
    require_same_shape(forecast, reference);
    require_weights(forecast, w);
    const double total = ordered_row_sum(forecast.rows, threads, [&](std::size_t i) {
        const auto f = forecast.row(i);
        const auto r = reference.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = static_cast<double>(f[j]) - static_cast<double>(r[j]);
            s += d * d;
        }
        return w[i] * s;
    });
    return std::sqrt(total / static_cast<double>(forecast.size()));
}

/// Latitude-weighted mean squared error.
inline double weighted_mse(const FieldView& forecast, const FieldView& reference,
                           const LatWeights& w, unsigned threads = 1) {
    const double r = weighted_rmse(forecast, reference, w, threads);
    return r * r;
}

/// Unweighted mean squared error.
inline double mse(const FieldView& candidate, const FieldView& reference, unsigned threads = 1) {
    require_same_shape(candidate, reference);
    const double total = ordered_row_sum(candidate.rows, threads, [&](std::size_t i) {
        const auto f = candidate.row(i);
        const auto r = reference.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = static_cast<double>(f[j]) - static_cast<double>(r[j]);
            s += d * d;
        }
        return s;
    });
    return total / static_cast<double>(candidate.size());
}

/// Unweighted mean absolute error.
inline double mae(const FieldView& candidate, const FieldView& reference, unsigned threads = 1) {
    require_same_shape(candidate, reference);
    const double total = ordered_row_sum(candidate.rows, threads, [&](std::size_t i) {
        const auto f = candidate.row(i);
        const auto r = reference.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j)
            s += std::abs(static_cast<double>(f[j]) - static_cast<double>(r[j]));
        return s;
    });
    return total / static_cast<double>(candidate.size());
}

/// Weighted cosine similarity of the anomalies (forecast - M) and
/// (reference - M).
inline double weighted_acc(const FieldView& forecast, const FieldView& reference,
                           const FieldView& clim, const LatWeights& w, unsigned threads = 1) {
    require_same_shape(forecast, reference);
    require_same_shape(forecast, clim, "forecast and climatology");
    require_weights(forecast, w);
    struct Sums {
        double cross = 0.0, ff = 0.0, rr = 0.0;
    };
    std::vector<Sums> rows(forecast.rows);
    parallel_for(forecast.rows, threads, [&](std::size_t i) {
        const auto f = forecast.row(i);
        const auto r = reference.row(i);
        const auto m = clim.row(i);
        Sums s;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double fa = static_cast<double>(f[j]) - static_cast<double>(m[j]);
            const double ra = static_cast<double>(r[j]) - static_cast<double>(m[j]);
            s.cross += fa * ra;
            s.ff += fa * fa;
            s.rr += ra * ra;
        }
        rows[i] = {w[i] * s.cross, w[i] * s.ff, w[i] * s.rr};
    });
    Sums t;
    for (const Sums& s : rows) {
        t.cross += s.cross;
        t.ff += s.ff;
        t.rr += s.rr;
    }
    if (!(t.ff > 0.0) || !(t.rr > 0.0))
        throw Error(ErrorKind::ZeroAnomalyVariance, "forecast or reference anomaly is zero everywhere");
    const double acc = t.cross / std::sqrt(t.ff * t.rr);
    return std::clamp(acc, -1.0, 1.0);
}

/// mean(forecast - reference); negative means underestimation.
inline double mbe(std::span<const double> forecast, std::span<const double> reference) {
    if (forecast.empty() || reference.empty())
        throw Error(ErrorKind::EmptySeries, "mean bias error of an empty series");
    if (forecast.size() != reference.size())
        throw Error(ErrorKind::ShapeMismatch, "series lengths differ");
    double s = 0.0;
    for (std::size_t k = 0; k < forecast.size(); ++k) s += forecast[k] - reference[k];
    return s / static_cast<double>(forecast.size());
}

/// 10 log10(peak^2 / MSE) with unweighted MSE.
inline double psnr(const FieldView& candidate, const FieldView& reference, double peak,
                   unsigned threads = 1) {
    if (!(peak > 0.0) || !std::isfinite(peak))
        throw Error(ErrorKind::NonPositivePeak, "PSNR peak must be positive, got " + std::to_string(peak));
    const double m = mse(candidate, reference, threads);
    if (m == 0.0) throw Error(ErrorKind::PerfectMatch, "candidate equals reference; PSNR is unbounded");
    return 10.0 * std::log10(peak * peak / m);
}

/// max - min of a field.
inline double dynamic_range(const FieldView& f) {
    if (f.size() == 0) throw Error(ErrorKind::ShapeMismatch, "empty field");
    const auto [lo, hi] = std::minmax_element(f.data.begin(), f.data.end());
    return static_cast<double>(*hi) - static_cast<double>(*lo);
}

/// (model - baseline) / |baseline|
inline double normalized_difference(double model_metric, double baseline_metric) {
    if (baseline_metric == 0.0)
        throw Error(ErrorKind::ZeroBaseline, "normalized difference against a zero baseline");
    return (model_metric - baseline_metric) / std::abs(baseline_metric);
}

/// Per-gridpoint RMSE over a series of (forecast, reference) pairs, no
/// latitude weighting. Result is H x W row-major.
inline std::vector<double> rmse_map(std::span<const FieldView> forecasts,
                                    std::span<const FieldView> references) {
    if (forecasts.empty() || forecasts.size() != references.size())
        throw Error(ErrorKind::EmptySeries, "rmse_map needs equal, non-empty series");
    const std::size_t n = forecasts[0].size();
    std::vector<double> acc(n, 0.0);
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        require_same_shape(forecasts[t], forecasts[0]);
        require_same_shape(forecasts[t], references[t]);
        for (std::size_t k = 0; k < n; ++k) {
            const double d = static_cast<double>(forecasts[t].data[k]) -
                             static_cast<double>(references[t].data[k]);
            acc[k] += d * d;
        }
    }
    for (double& v : acc) v = std::sqrt(v / static_cast<double>(forecasts.size()));
    return acc;
}

// ---------------------------------------------------------------------------
// Evaluation over a set of initialization times
// ---------------------------------------------------------------------------

struct EvaluationSet {
    std::vector<UnixTime> init_times;  // sorted
    std::vector<int> lead_hours;       // positive multiples of 6

    void validate() const {
        if (init_times.empty() || lead_hours.empty())
            throw Error(ErrorKind::EmptyInput, "evaluation set needs init times and lead times");
        if (!std::is_sorted(init_times.begin(), init_times.end()))
            throw Error(ErrorKind::InvalidTime, "init times must be sorted");
        for (int lead : lead_hours) {
            if (lead <= 0 || lead % 6 != 0 || lead > 240)
                throw Error(ErrorKind::InvalidTime,
                            "lead " + std::to_string(lead) + " h is not a multiple of 6 in (0, 240]");
        }
    }
};

/// forecast(t0, lead_hours) -> optional cube; reference(valid_time) -> optional cube.
using ForecastSource = std::function<std::optional<FieldCube>(UnixTime, int)>;
using ReferenceSource = std::function<std::optional<FieldCube>(UnixTime)>;

/// RMSE (and ACC when a climatology is given) per (variable, lead), each the
/// arithmetic mean over init times of the per-time score. Work is spread over
/// (t0, lead) pairs; per-time scores are stored by index and averaged in
/// init-time order.
inline std::vector<MetricRecord> evaluate_over_set(const ForecastSource& forecasts,
                                                   const ReferenceSource& references,
                                                   const Climatology* clim,
                                                   const EvaluationSet& set,
                                                   const std::vector<VariableId>& variables,
                                                   unsigned threads = 1) {
    set.validate();
    const std::size_t n_t = set.init_times.size();
    const std::size_t n_l = set.lead_hours.size();
    const std::size_t n_v = variables.size();
    std::vector<double> rmse_vals(n_t * n_l * n_v, 0.0);
    std::vector<double> acc_vals(clim ? n_t * n_l * n_v : 0, 0.0);

    parallel_for(n_t * n_l, threads, [&](std::size_t unit) {
        const std::size_t t = unit / n_l;
        const std::size_t l = unit % n_l;
        const UnixTime t0 = set.init_times[t];
        const int lead = set.lead_hours[l];
        const UnixTime valid = t0 + static_cast<UnixTime>(lead) * kSecondsPerHour;
        auto missing = [&](const char* what) {
            return Error(ErrorKind::MissingCube, std::string(what) + " cube for init " +
                                                     format_iso(t0) + " lead " +
                                                     std::to_string(lead) + " h");
        };
        const std::optional<FieldCube> fc = forecasts(t0, lead);
        if (!fc) throw missing("forecast");
        const std::optional<FieldCube> ref = references(valid);
        if (!ref) throw missing("reference");
        if (fc->valid_time() != valid || ref->valid_time() != valid)
            throw Error(ErrorKind::InvalidTime,
                        "cube valid time does not equal init + lead for init " + format_iso(t0) +
                            " lead " + std::to_string(lead) + " h");
        if (!(fc->spec() == ref->spec()))
            throw Error(ErrorKind::ShapeMismatch, "forecast and reference grids differ at " +
                                                      format_iso(valid));
        const LatWeights w = latitude_weights(ref->spec());
        std::optional<FieldCube> m;
        if (clim) {
            if (!(clim->spec() == ref->spec()))
                throw Error(ErrorKind::SpecMismatch, "climatology grid differs from reference grid");
            m = lookup(*clim, valid);
        }
        for (std::size_t v = 0; v < n_v; ++v) {
            const FieldView f = select_channel(*fc, variables[v]);
            const FieldView r = select_channel(*ref, variables[v]);
            const std::size_t slot = (t * n_l + l) * n_v + v;
            rmse_vals[slot] = weighted_rmse(f, r, w);
            if (clim) acc_vals[slot] = weighted_acc(f, r, select_channel(*m, variables[v]), w);
        }
    });

    std::vector<MetricRecord> out;
    for (std::size_t v = 0; v < n_v; ++v) {
        for (std::size_t l = 0; l < n_l; ++l) {
            double rs = 0.0, as = 0.0;
            for (std::size_t t = 0; t < n_t; ++t) {
                const std::size_t slot = (t * n_l + l) * n_v + v;
                rs += rmse_vals[slot];
                if (clim) as += acc_vals[slot];
            }
            const double n = static_cast<double>(n_t);
            out.push_back({variables[v], set.lead_hours[l], Metric::rmse, rs / n, n_t});
            if (clim) out.push_back({variables[v], set.lead_hours[l], Metric::acc, as / n, n_t});
        }
    }
    return out;
}

/// Mean over init times of the per-time weighted RMSE, one record per lead.
inline std::vector<MetricRecord> rmse_over_set(const ForecastSource& forecasts,
                                               const ReferenceSource& references,
                                               const EvaluationSet& set, const VariableId& var,
                                               unsigned threads = 1) {
    return evaluate_over_set(forecasts, references, nullptr, set, {var}, threads);
}

/// Mean over init times of the per-time weighted ACC, one record per lead.
inline std::vector<MetricRecord> acc_over_set(const ForecastSource& forecasts,
                                              const ReferenceSource& references,
                                              const Climatology& clim, const EvaluationSet& set,
                                              const VariableId& var, unsigned threads = 1) {
    auto all = evaluate_over_set(forecasts, references, &clim, set, {var}, threads);
    std::vector<MetricRecord> out;
    for (auto& r : all) {
        if (r.metric == Metric::acc) out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Month x hour normalized-difference matrices
// ---------------------------------------------------------------------------

struct MonthHourSample {
    UnixTime valid_time = 0;
    double model = 0.0;
    double baseline = 0.0;
};

struct MonthHourCell {
    std::size_t n = 0;
    double model_mean = 0.0;
    double baseline_mean = 0.0;
    std::optional<double> value;  // normalized difference; empty = missing
    bool capped = false;          // model aggregate was +inf, value pinned to +1
};

struct MonthHourMatrix {
    std::array<std::array<MonthHourCell, 4>, 12> cells{};

    const MonthHourCell& at(int month, int hour) const { return cells[month - 1][hour / 6]; }
    std::size_t populated() const {
        std::size_t n = 0;
        for (const auto& row : cells)
            for (const auto& c : row) n += c.value.has_value() ? 1 : 0;
        return n;
    }
};

/// Per (month, 6-hourly UTC hour) cell: mean model metric and mean baseline
/// metric over the cell's samples, then their normalized difference. An
/// infinite model mean (perfect PSNR) against a finite baseline is capped at
/// +1; a zero or infinite baseline leaves the cell missing.
inline MonthHourMatrix month_hour_matrix(std::span<const MonthHourSample> samples) {
    MonthHourMatrix m;
    for (const MonthHourSample& s : samples) {
        const CivilTime c = to_civil(s.valid_time);
        MonthHourCell& cell = m.cells[c.month - 1][static_cast<std::size_t>(c.hour / 6)];
        ++cell.n;
        cell.model_mean += s.model;
        cell.baseline_mean += s.baseline;
    }
    for (auto& row : m.cells) {
        for (MonthHourCell& cell : row) {
            if (cell.n == 0) continue;
            cell.model_mean /= static_cast<double>(cell.n);
            cell.baseline_mean /= static_cast<double>(cell.n);
            if (!std::isfinite(cell.baseline_mean) || cell.baseline_mean == 0.0) continue;
            if (std::isinf(cell.model_mean) && cell.model_mean > 0.0) {
                cell.value = 1.0;
                cell.capped = true;
            } else if (std::isfinite(cell.model_mean)) {
                cell.value = normalized_difference(cell.model_mean, cell.baseline_mean);
            }
        }
    }
    return m;
}

/// 12 rows (months) x 4 columns (00/06/12/18 UTC); "NA" marks missing cells.
inline std::string format_month_hour_matrix(const MonthHourMatrix& m,
                                            const std::optional<std::string>& params_line = {}) {
    std::string out;
    if (params_line) out += *params_line + "\n";
    std::string capped;
    for (int month = 1; month <= 12; ++month) {
        for (int h = 0; h < 4; ++h) {
            if (m.cells[month - 1][h].capped) {
                char buf[16];
                std::snprintf(buf, sizeof buf, " %02d-%02d", month, h * 6);
                capped += buf;
            }
        }
    }
    if (!capped.empty()) out += "# capped:" + capped + "\n";
    out += "month,h00,h06,h12,h18\n";
    for (int month = 1; month <= 12; ++month) {
        out += std::to_string(month);
        for (int h = 0; h < 4; ++h) {
            const auto& cell = m.cells[month - 1][h];
            out += ",";
            out += cell.value ? csv::format_g6(*cell.value) : std::string("NA");
        }
        out += "\n";
    }
    return out;
}

}  // namespace geoverify
