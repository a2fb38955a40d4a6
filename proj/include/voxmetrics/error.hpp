#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voxmetrics {

enum class Errc {
    io,
    magic_mismatch,
    unsupported_datatype,
    bad_dim,
    non_positive_spacing,
    truncated_data,
    non_integer_labels,
    invalid_label,
    grid_mismatch,
    empty_mask,
    bad_percentile,
    bad_parameter,
    not_normalized,
    degenerate_output,
    degenerate_data,
    too_few_groups,
    unknown_adjustment,
    inconsistent_cases,
    no_records,
    infinite_values,
    spec_too_small,
    bad_format,
};

constexpr std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::io: return "Io";
    case Errc::magic_mismatch: return "MagicMismatch";
    case Errc::unsupported_datatype: return "UnsupportedDatatype";
    case Errc::bad_dim: return "BadDim";
    case Errc::non_positive_spacing: return "NonPositiveSpacing";
    case Errc::truncated_data: return "TruncatedData";
    case Errc::non_integer_labels: return "NonIntegerLabels";
    case Errc::invalid_label: return "InvalidLabel";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::bad_percentile: return "BadPercentile";
    case Errc::bad_parameter: return "BadParameter";
    case Errc::not_normalized: return "NotNormalized";
    case Errc::degenerate_output: return "DegenerateOutput";
    case Errc::degenerate_data: return "DegenerateData";
    case Errc::too_few_groups: return "TooFewGroups";
    case Errc::unknown_adjustment: return "UnknownAdjustment";
    case Errc::inconsistent_cases: return "InconsistentCases";
    case Errc::no_records: return "NoRecords";
    case Errc::infinite_values: return "InfiniteValues";
    case Errc::spec_too_small: return "SpecTooSmall";
    case Errc::bad_format: return "BadFormat";
    }
    return "Unknown";
}

/// Data or validation failure. Carries a machine-checkable code; the CLI maps
/// every Error to exit status 2.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace voxmetrics
