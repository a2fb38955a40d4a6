#pragma once

// Table-style method summaries (overall and sub-cortical), statistical
// comparison of methods, and text / CSV / JSON rendering.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "metrics.hpp"
#include "records.hpp"
#include "stats.hpp"

namespace voxmetrics::report {

inline constexpr double undefined = std::numeric_limits<double>::quiet_NaN();

/// Interpretation notes carried in every JSON report.
inline constexpr const char* subcortical_definition = "DGM class (label 4)";
inline constexpr const char* sample_unit =
    "one value per case per method: mean of the metric over the defined foreground classes";
inline constexpr const char* undefined_policy = "classes absent from both masks are excluded from class averages";

/// Per-method means over cases. NaN marks a value with no defined inputs.
struct MethodSummary {
    std::string method;
    std::size_t n_cases = 0;
    double dsc_overall = undefined;
    double dsc_subcortical = undefined;
    double iou_overall = undefined;
    double iou_subcortical = undefined;
    double hd95_overall = undefined;
    double hd95_subcortical = undefined;

    bool hd95_infinite() const noexcept { return std::isinf(hd95_overall) || std::isinf(hd95_subcortical); }
};

inline bool same_value(double a, double b) noexcept { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline bool operator==(const MethodSummary& a, const MethodSummary& b) noexcept
{
    return a.method == b.method && a.n_cases == b.n_cases && same_value(a.dsc_overall, b.dsc_overall) &&
           same_value(a.dsc_subcortical, b.dsc_subcortical) && same_value(a.iou_overall, b.iou_overall) &&
           same_value(a.iou_subcortical, b.iou_subcortical) && same_value(a.hd95_overall, b.hd95_overall) &&
           same_value(a.hd95_subcortical, b.hd95_subcortical);
}

enum class Metric { dsc, iou, hd95 };

inline std::string metric_name(Metric m)
{
    switch (m) {
    case Metric::dsc: return "dsc";
    case Metric::iou: return "iou";
    case Metric::hd95: return "hd95";
    }
    return "?";
}

inline Metric metric_from_name(const std::string& s)
{
    if (s == "dsc")
        return Metric::dsc;
    if (s == "iou")
        return Metric::iou;
    if (s == "hd95")
        return Metric::hd95;
    throw Error(Errc::bad_parameter, "unknown metric '" + s + "' (expected dsc, iou or hd95)");
}

inline const std::optional<double>& select(const ClassMetrics& m, Metric metric)
{
    switch (metric) {
    case Metric::dsc: return m.dsc;
    case Metric::iou: return m.iou;
    case Metric::hd95: return m.hd95;
    }
    return m.dsc;
}

/// Mean of the metric over the defined foreground classes of one case.
inline std::optional<double> case_overall(const MetricsRecord& r, Metric metric)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& m : r.per_class)
        if (const auto& v = select(m, metric)) {
            sum += *v;
            ++n;
        }
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

inline std::optional<double> case_subcortical(const MetricsRecord& r, Metric metric)
{
    return select(r.at(TissueClass::dgm), metric);
}

namespace detail {

/// Records grouped by method, each group sorted by case id, with case sets checked equal.
inline std::map<std::string, std::vector<const MetricsRecord*>> by_method(const std::vector<MetricsRecord>& records)
{
    if (records.empty())
        throw Error(Errc::no_records, "no metrics records given");
    std::map<std::string, std::vector<const MetricsRecord*>> groups;
    for (const auto& r : records)
        groups[r.method].push_back(&r);
    std::optional<std::vector<std::string>> reference;
    std::string reference_method;
    for (auto& [method, recs] : groups) {
        std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->case_id < b->case_id; });
        std::vector<std::string> ids;
        for (const auto* r : recs) {
            if (!ids.empty() && ids.back() == r->case_id)
                throw Error(Errc::inconsistent_cases, "method '" + method + "' has case '" + r->case_id + "' twice");
            ids.push_back(r->case_id);
        }
        if (!reference) {
            reference = ids;
            reference_method = method;
        } else if (*reference != ids) {
            throw Error(Errc::inconsistent_cases,
                        "methods '" + reference_method + "' and '" + method + "' cover different cases");
        }
    }
    return groups;
}

inline double mean_defined(const std::vector<std::optional<double>>& values)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++n;
        }
    return n == 0 ? undefined : sum / static_cast<double>(n);
}

} // namespace detail

/// One summary per method, sorted by descending overall DSC (then by name).
inline std::vector<MethodSummary> aggregate(const std::vector<MetricsRecord>& records)
{
    std::vector<MethodSummary> out;
    for (const auto& [method, recs] : detail::by_method(records)) {
        MethodSummary s;
        s.method = method;
        s.n_cases = recs.size();
        auto column = [&](Metric m, bool overall) {
            std::vector<std::optional<double>> v;
            for (const auto* r : recs)
                v.push_back(overall ? case_overall(*r, m) : case_subcortical(*r, m));
            return detail::mean_defined(v);
        };
        s.dsc_overall = column(Metric::dsc, true);
        s.dsc_subcortical = column(Metric::dsc, false);
        s.iou_overall = column(Metric::iou, true);
        s.iou_subcortical = column(Metric::iou, false);
        s.hd95_overall = column(Metric::hd95, true);
        s.hd95_subcortical = column(Metric::hd95, false);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const MethodSummary& a, const MethodSummary& b) {
        const double da = std::isnan(a.dsc_overall) ? -1.0 : a.dsc_overall;
        const double db = std::isnan(b.dsc_overall) ? -1.0 : b.dsc_overall;
        if (da != db)
            return da > db;
        return a.method < b.method;
    });
    return out;
}

struct Comparison {
    Metric metric = Metric::dsc;
    stats::KruskalResult kruskal;
    stats::DunnResult dunn;
};

/// Kruskal-Wallis and Dunn over per-case overall values, one group per method (sorted by name).
inline Comparison compare_methods(const std::vector<MetricsRecord>& records, Metric metric,
                                  const std::string& adjustment = "bonferroni")
{
    stats::GroupedScores scores;
    scores.metric_name = metric_name(metric);
    for (const auto& [method, recs] : detail::by_method(records)) {
        stats::Group g{method, {}};
        for (const auto* r : recs) {
            const auto v = case_overall(*r, metric);
            if (!v)
                continue;
            if (std::isinf(*v))
                throw Error(Errc::infinite_values,
                            "case '" + r->case_id + "' of method '" + method +
                                "' has an infinite HD95; inspect it for a class predicted or annotated as empty");
            g.values.push_back(*v);
        }
        scores.groups.push_back(std::move(g));
    }
    Comparison c;
    c.metric = metric;
    c.kruskal = stats::kruskal_wallis(scores);
    c.dunn = stats::dunn_posthoc(scores, adjustment);
    return c;
}

struct QualityGate {
    double min_dsc = 0.0;
    double min_iou = 0.0;
    double max_hd95 = std::numeric_limits<double>::infinity();
};

/// Strict comparison of the overall columns against a gate.
inline bool passes(const MethodSummary& s, const QualityGate& g) noexcept
{
    return s.dsc_overall > g.min_dsc && s.iou_overall > g.min_iou && s.hd95_overall < g.max_hd95;
}

enum class Format { text, csv, json };

inline Format format_from_name(const std::string& s)
{
    if (s == "text")
        return Format::text;
    if (s == "csv")
        return Format::csv;
    if (s == "json")
        return Format::json;
    throw Error(Errc::bad_parameter, "unknown format '" + s + "' (expected text, csv or json)");
}

/// Fixed 4-decimal cell. Exact binary ties round half to even.
inline std::string fixed4(double v)
{
    if (std::isnan(v))
        return "n/a";
    if (std::isinf(v))
        return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline constexpr std::string_view csv_header =
    "method,n_cases,dsc_overall,dsc_subcortical,iou_overall,iou_subcortical,hd95_overall,hd95_subcortical";

namespace detail {

inline std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

inline nlohmann::ordered_json number_json(double v)
{
    if (std::isnan(v))
        return nullptr;
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const nlohmann::json& j)
{
    if (j.is_null())
        return undefined;
    if (j.is_string())
        return text::parse_double(j.get<std::string>());
    return j.get<double>();
}

inline std::string render_text(const std::vector<MethodSummary>& summaries, const std::vector<Comparison>& comparisons)
{
    std::size_t name_w = 5;
    for (const auto& s : summaries)
        name_w = std::max(name_w, s.method.size());
    name_w += 2;
    constexpr std::size_t cell = 9;

    std::string out;
    out += pad("Model", name_w) + pad("DSC", 2 * cell) + pad("IoU", 2 * cell) + "HD95\n";
    std::string sub = pad("", name_w);
    for (int m = 0; m < 3; ++m)
        sub += pad("Overall", cell) + pad("Sub-ctx", cell);
    while (!sub.empty() && sub.back() == ' ')
        sub.pop_back();
    out += sub + "\n";
    for (const auto& s : summaries) {
        std::string row = pad(s.method, name_w);
        for (double v : {s.dsc_overall, s.dsc_subcortical, s.iou_overall, s.iou_subcortical, s.hd95_overall,
                         s.hd95_subcortical})
            row += pad(fixed4(v), cell);
        while (!row.empty() && row.back() == ' ')
            row.pop_back();
        out += row + "\n";
    }
    out += "\nOverall: mean over the six tissue classes. Sub-ctx: ";
    out += subcortical_definition;
    out += ".\n";
    for (const auto& s : summaries)
        if (s.hd95_infinite())
            out += "warning: " + s.method + " has an infinite HD95 (a class is empty in exactly one mask)\n";

    for (const auto& c : comparisons) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "\nKruskal-Wallis (%s): H = %.4f, df = %d, p = %.4g, tie correction = %.4f\n",
                      metric_name(c.metric).c_str(), c.kruskal.h, c.kruskal.df, c.kruskal.p,
                      c.kruskal.tie_correction);
        out += buf;
        out += "Dunn post-hoc (" + c.dunn.adjustment + " adjusted):\n";
        for (const auto& p : c.dunn.pairs) {
            std::snprintf(buf, sizeof buf, "  %s vs %s: z = %.4f, p = %.4g, p_adj = %.4g%s\n", p.method_a.c_str(),
                          p.method_b.c_str(), p.z, p.p_raw, p.p_adjusted, p.p_adjusted < 0.05 ? " *" : "");
            out += buf;
        }
    }
    if (!comparisons.empty())
        out += std::string("Sample unit: ") + sample_unit + ".\n";
    return out;
}

inline std::string render_csv(const std::vector<MethodSummary>& summaries)
{
    std::string out(csv_header);
    out += "\r\n";
    for (const auto& s : summaries) {
        out += text::csv_field(s.method) + ',' + std::to_string(s.n_cases);
        for (double v : {s.dsc_overall, s.dsc_subcortical, s.iou_overall, s.iou_subcortical, s.hd95_overall,
                         s.hd95_subcortical})
            out += ',' + (std::isnan(v) ? std::string() : text::shortest(v));
        out += "\r\n";
    }
    return out;
}

} // namespace detail

inline nlohmann::ordered_json to_json(const Comparison& c)
{
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : c.dunn.pairs)
        pairs.push_back({{"method_a", p.method_a},
                         {"method_b", p.method_b},
                         {"z", p.z},
                         {"p_raw", p.p_raw},
                         {"p_adjusted", p.p_adjusted}});
    return {{"metric", metric_name(c.metric)},
            {"kruskal_wallis",
             {{"h", c.kruskal.h}, {"df", c.kruskal.df}, {"p", c.kruskal.p}, {"tie_correction", c.kruskal.tie_correction}}},
            {"dunn", {{"adjustment", c.dunn.adjustment}, {"pairs", std::move(pairs)}}}};
}

inline nlohmann::ordered_json to_json(const std::vector<MethodSummary>& summaries,
                                      const std::vector<Comparison>& comparisons = {})
{
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& s : summaries)
        rows.push_back({{"method", s.method},
                        {"n_cases", s.n_cases},
                        {"dsc_overall", detail::number_json(s.dsc_overall)},
                        {"dsc_subcortical", detail::number_json(s.dsc_subcortical)},
                        {"iou_overall", detail::number_json(s.iou_overall)},
                        {"iou_subcortical", detail::number_json(s.iou_subcortical)},
                        {"hd95_overall", detail::number_json(s.hd95_overall)},
                        {"hd95_subcortical", detail::number_json(s.hd95_subcortical)},
                        {"hd95_infinite", s.hd95_infinite()}});
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& c : comparisons)
        comps.push_back(to_json(c));
    return {{"summaries", std::move(rows)},
            {"metadata",
             {{"subcortical_definition", subcortical_definition},
              {"sample_unit", sample_unit},
              {"undefined_policy", undefined_policy},
              {"hd95_unit", "mm"},
              {"p_adjustment", comparisons.empty() ? nlohmann::ordered_json(nullptr)
                                                   : nlohmann::ordered_json(comparisons.front().dunn.adjustment)}}},
            {"comparisons", std::move(comps)}};
}

inline std::vector<MethodSummary> summaries_from_json(const nlohmann::json& j)
{
    try {
        std::vector<MethodSummary> out;
        for (const auto& r : j.at("summaries")) {
            MethodSummary s;
            s.method = r.at("method").get<std::string>();
            s.n_cases = r.at("n_cases").get<std::size_t>();
            s.dsc_overall = detail::number_from_json(r.at("dsc_overall"));
            s.dsc_subcortical = detail::number_from_json(r.at("dsc_subcortical"));
            s.iou_overall = detail::number_from_json(r.at("iou_overall"));
            s.iou_subcortical = detail::number_from_json(r.at("iou_subcortical"));
            s.hd95_overall = detail::number_from_json(r.at("hd95_overall"));
            s.hd95_subcortical = detail::number_from_json(r.at("hd95_subcortical"));
            out.push_back(std::move(s));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::bad_format, std::string("summary JSON: ") + e.what());
    }
}

inline std::string render(const std::vector<MethodSummary>& summaries, const std::vector<Comparison>& comparisons,
                          Format format)
{
    switch (format) {
    case Format::text: return detail::render_text(summaries, comparisons);
    case Format::csv: return detail::render_csv(summaries);
    case Format::json: return to_json(summaries, comparisons).dump(2) + "\n";
    }
    return {};
}

} // namespace voxmetrics::report
