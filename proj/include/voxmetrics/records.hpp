#pragma once

// MetricsRecord files: JSON and CSV (one row per case x class).

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "metrics.hpp"

namespace voxmetrics {

namespace text {

/// Shortest representation that reads back to the same double.
inline std::string shortest(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    if (s == "inf" || s == "+inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(Errc::bad_format, "not a number: '" + std::string(s) + "'");
    return v;
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Parses RFC 4180 text into rows of fields.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view in)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const char c = in[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < in.size() && in[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < in.size() && in[i + 1] == '\n')
                ++i;
            if (field_started || !field.empty() || !row.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted)
        throw Error(Errc::bad_format, "unterminated quoted CSV field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw Error(Errc::io, "write failed for " + path.string());
}

} // namespace text

namespace detail {

inline nlohmann::ordered_json metric_json(const std::optional<double>& v)
{
    if (!v)
        return nullptr;
    if (std::isinf(*v))
        return "inf";
    return *v;
}

inline std::optional<double> metric_from_json(const nlohmann::json& j)
{
    if (j.is_null())
        return std::nullopt;
    if (j.is_string())
        return text::parse_double(j.get<std::string>());
    return j.get<double>();
}

inline std::string metric_csv(const std::optional<double>& v) { return v ? text::shortest(*v) : std::string(); }

inline std::optional<double> metric_from_csv(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    return text::parse_double(s);
}

} // namespace detail

inline nlohmann::ordered_json records_to_json(const std::vector<MetricsRecord>& records)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json classes = nlohmann::ordered_json::array();
        for (const auto& m : r.per_class)
            classes.push_back({{"class", display_name(m.cls)},
                               {"code", code(m.cls)},
                               {"dsc", detail::metric_json(m.dsc)},
                               {"iou", detail::metric_json(m.iou)},
                               {"hd95", detail::metric_json(m.hd95)}});
        arr.push_back({{"case_id", r.case_id}, {"method", r.method}, {"classes", std::move(classes)}});
    }
    return {{"records", std::move(arr)}};
}

inline std::vector<MetricsRecord> records_from_json(const nlohmann::json& j)
{
    try {
        std::vector<MetricsRecord> out;
        for (const auto& jr : j.at("records")) {
            MetricsRecord r;
            r.case_id = jr.at("case_id").get<std::string>();
            r.method = jr.at("method").get<std::string>();
            const auto& classes = jr.at("classes");
            if (classes.size() != foreground_classes.size())
                throw Error(Errc::bad_format, "record '" + r.case_id + "' must list 6 classes");
            for (const auto& jc : classes) {
                const auto cls = tissue_from_code(jc.at("code").get<int>());
                if (cls == TissueClass::background)
                    throw Error(Errc::bad_format, "background is not a scored class");
                r.per_class[code(cls) - 1] = {cls, detail::metric_from_json(jc.at("dsc")),
                                              detail::metric_from_json(jc.at("iou")),
                                              detail::metric_from_json(jc.at("hd95"))};
            }
            validate(r);
            out.push_back(std::move(r));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::bad_format, std::string("metrics records: ") + e.what());
    }
}

inline constexpr std::string_view records_csv_header = "case_id,method,class,code,dsc,iou,hd95";

inline std::string records_to_csv(const std::vector<MetricsRecord>& records)
{
    std::string out(records_csv_header);
    out += "\r\n";
    for (const auto& r : records)
        for (const auto& m : r.per_class) {
            out += text::csv_field(r.case_id) + ',' + text::csv_field(r.method) + ',' +
                   std::string(display_name(m.cls)) + ',' + std::to_string(code(m.cls)) + ',' +
                   detail::metric_csv(m.dsc) + ',' + detail::metric_csv(m.iou) + ',' + detail::metric_csv(m.hd95) +
                   "\r\n";
        }
    return out;
}

inline std::vector<MetricsRecord> records_from_csv(std::string_view content)
{
    const auto rows = text::parse_csv(content);
    if (rows.empty() || rows[0].size() != 7)
        throw Error(Errc::bad_format, "records CSV needs the header " + std::string(records_csv_header));
    std::vector<MetricsRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 7)
            throw Error(Errc::bad_format, "records CSV row " + std::to_string(i) + " needs 7 fields");
        const int c = static_cast<int>(text::parse_double(row[3]));
        const auto cls = tissue_from_code(c);
        if (cls == TissueClass::background)
            throw Error(Errc::bad_format, "background is not a scored class");
        if (out.empty() || out.back().case_id != row[0] || out.back().method != row[1] ||
            out.back().per_class[code(cls) - 1].cls == cls) {
            MetricsRecord r;
            r.case_id = row[0];
            r.method = row[1];
            for (std::size_t k = 0; k < r.per_class.size(); ++k)
                r.per_class[k].cls = static_cast<TissueClass>(0xFF); // marks "not yet read"
            out.push_back(std::move(r));
        }
        out.back().per_class[code(cls) - 1] = {cls, detail::metric_from_csv(row[4]), detail::metric_from_csv(row[5]),
                                                detail::metric_from_csv(row[6])};
    }
    for (const auto& r : out)
        validate(r);
    return out;
}

/// Reads records from a .json or .csv file.
inline std::vector<MetricsRecord> read_records(const std::filesystem::path& path)
{
    const auto content = text::read_text(path);
    if (path.extension() == ".csv")
        return records_from_csv(content);
    try {
        return records_from_json(nlohmann::json::parse(content));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::bad_format, path.string() + ": " + e.what());
    }
}

inline void write_records(const std::vector<MetricsRecord>& records, const std::filesystem::path& path)
{
    if (path.extension() == ".csv")
        text::write_text(path, records_to_csv(records));
    else
        text::write_text(path, records_to_json(records).dump(2) + "\n");
}

} // namespace voxmetrics
