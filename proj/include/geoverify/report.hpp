#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "geoverify/csv.hpp"
#include "geoverify/grid.hpp"

namespace geoverify {

enum class Metric : std::uint8_t {
    rmse,
    acc,
    mse,
    mae,
    mbe,
    psnr,
    norm_diff,
    closed_acc,
    open_recall,
};

constexpr std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::rmse: return "rmse";
    case Metric::acc: return "acc";
    case Metric::mse: return "mse";
    case Metric::mae: return "mae";
    case Metric::mbe: return "mbe";
    case Metric::psnr: return "psnr";
    case Metric::norm_diff: return "norm_diff";
    case Metric::closed_acc: return "closed_acc";
    case Metric::open_recall: return "open_recall";
    }
    return "unknown";
}

/// lead_hours value for scores aggregated over every lead; printed as "all".
inline constexpr int kAllLeads = -1;

struct MetricRecord {
    VariableId variable;
    int lead_hours = 0;
    Metric metric = Metric::rmse;
    double value = 0.0;
    std::size_t n_samples = 1;
};

inline bool report_order(const MetricRecord& a, const MetricRecord& b) {
    const auto ka = std::make_tuple(a.variable.name, a.variable.level, a.lead_hours, a.metric,
                                    std::bit_cast<std::uint64_t>(a.value), a.n_samples);
    const auto kb = std::make_tuple(b.variable.name, b.variable.level, b.lead_hours, b.metric,
                                    std::bit_cast<std::uint64_t>(b.value), b.n_samples);
    return ka < kb;
}

/// CSV text for a report: optional "# params:" line, header
/// variable,level,lead_hours,metric,value, then rows sorted by
/// (variable, lead, metric). Values carry six significant digits.
inline std::string format_report(std::vector<MetricRecord> records,
                                 const std::optional<std::string>& params_line = std::nullopt) {
    std::sort(records.begin(), records.end(), report_order);
    std::string out;
    if (params_line) out += *params_line + "\n";
    out += "variable,level,lead_hours,metric,value\n";
    for (const MetricRecord& r : records) {
        const std::string lead =
            r.lead_hours == kAllLeads ? std::string("all") : std::to_string(r.lead_hours);
        out += csv::join({r.variable.name, r.variable.level_text(), lead,
                          std::string(to_string(r.metric)), csv::format_g6(r.value)});
        out += '\n';
    }
    return out;
}

inline void write_report(const std::vector<MetricRecord>& records,
                         const std::filesystem::path& path,
                         const std::optional<std::string>& params_line = std::nullopt) {
    csv::write_text(path, format_report(records, params_line));
}

inline Metric parse_metric(std::string_view s, std::size_t row = 0) {
    for (Metric m : {Metric::rmse, Metric::acc, Metric::mse, Metric::mae, Metric::mbe, Metric::psnr,
                     Metric::norm_diff, Metric::closed_acc, Metric::open_recall}) {
        if (to_string(m) == s) return m;
    }
    throw ParseError(row, "unknown metric '" + std::string(s) + "'");
}

/// Reads a report written by write_report; n_samples is not stored and comes
/// back as 1.
inline std::vector<MetricRecord> read_report(const std::filesystem::path& path) {
    const csv::Table t = csv::read_table(path);
    const std::size_t c_var = t.column("variable");
    const std::size_t c_level = t.column("level");
    const std::size_t c_lead = t.column("lead_hours");
    const std::size_t c_metric = t.column("metric");
    const std::size_t c_value = t.column("value");
    std::vector<MetricRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& f = t.rows[r];
        const std::size_t row = t.line_numbers[r];
        MetricRecord rec;
        rec.variable.name = f[c_var];
        rec.variable.level =
            f[c_level] == "surface" ? kSurface : static_cast<int>(csv::parse_double(f[c_level], row, "level"));
        rec.lead_hours =
            f[c_lead] == "all" ? kAllLeads : static_cast<int>(csv::parse_double(f[c_lead], row, "lead_hours"));
        rec.metric = parse_metric(f[c_metric], row);
        rec.value = f[c_value] == "inf"    ? std::numeric_limits<double>::infinity()
                    : f[c_value] == "-inf" ? -std::numeric_limits<double>::infinity()
                                           : csv::parse_double(f[c_value], row, "value");
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace geoverify
