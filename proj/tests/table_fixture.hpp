#pragma once

// Published per-method summary means, as plain data (shared by unit and acceptance tests).

#include <array>
#include <string>
#include <vector>

#include <voxmetrics/records.hpp>
#include <voxmetrics/report.hpp>

namespace fixture {

struct TableRow {
    std::string method;
    std::array<std::string, 6> cells; // DSC overall/sub, IoU overall/sub, HD95 overall/sub
};

inline const std::vector<TableRow> table_rows{
    {"nnUNetV2 basic", {"0.8727", "0.8833", "0.7904", "0.7919", "8.7832", "7.2816"}},
    {"Our Method", {"0.8843", "0.8891", "0.8059", "0.8013", "6.9927", "6.9507"}},
    {"nnUNet ResEnc L", {"0.8828", "0.8893", "0.8033", "0.8019", "8.4396", "7.0321"}},
    {"ANTs", {"0.7998", "0.7638", "0.6889", "0.6182", "14.1072", "7.7786"}},
};

/// Summaries built by parsing the cells above, sorted as a report would sort them.
inline std::vector<voxmetrics::report::MethodSummary> table_summaries()
{
    using voxmetrics::text::parse_double;
    std::vector<voxmetrics::report::MethodSummary> out;
    for (const auto& r : table_rows) {
        voxmetrics::report::MethodSummary s;
        s.method = r.method;
        s.n_cases = 6;
        s.dsc_overall = parse_double(r.cells[0]);
        s.dsc_subcortical = parse_double(r.cells[1]);
        s.iou_overall = parse_double(r.cells[2]);
        s.iou_subcortical = parse_double(r.cells[3]);
        s.hd95_overall = parse_double(r.cells[4]);
        s.hd95_subcortical = parse_double(r.cells[5]);
        out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.dsc_overall > b.dsc_overall; });
    return out;
}

} // namespace fixture
