#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "edt.hpp"
#include "error.hpp"
#include "percentile.hpp"
#include "volume.hpp"

namespace voxmetrics {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    friend constexpr bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline void require_same_grid(const LabelVolume& pred, const LabelVolume& gt)
{
    if (!pred.same_grid(gt))
        throw Error(Errc::grid_mismatch, "prediction and ground truth differ in dims or spacing");
}

inline ConfusionCounts confusion_counts(const LabelVolume& pred, const LabelVolume& gt, TissueClass cls)
{
    require_same_grid(pred, gt);
    const auto c = code(cls);
    ConfusionCounts n;
    const auto p = pred.data();
    const auto g = gt.data();
    for (std::size_t v = 0; v < p.size(); ++v) {
        const bool in_p = p[v] == c, in_g = g[v] == c;
        n.tp += in_p && in_g;
        n.fp += in_p && !in_g;
        n.fn += !in_p && in_g;
    }
    return n;
}

/// 2tp / (2tp + fp + fn); empty when neither mask contains the class.
inline std::optional<double> dice(const ConfusionCounts& n)
{
    const std::size_t denom = 2 * n.tp + n.fp + n.fn;
    if (denom == 0)
        return std::nullopt;
    return static_cast<double>(2 * n.tp) / static_cast<double>(denom);
}

inline std::optional<double> iou(const ConfusionCounts& n)
{
    const std::size_t denom = n.tp + n.fp + n.fn;
    if (denom == 0)
        return std::nullopt;
    return static_cast<double>(n.tp) / static_cast<double>(denom);
}

inline std::optional<double> dice(const LabelVolume& pred, const LabelVolume& gt, TissueClass cls)
{
    return dice(confusion_counts(pred, gt, cls));
}

inline std::optional<double> iou(const LabelVolume& pred, const LabelVolume& gt, TissueClass cls)
{
    return iou(confusion_counts(pred, gt, cls));
}

/// True voxels with at least one 6-neighbour that is false or outside the grid.
inline std::vector<Index3> surface_voxels(const Mask& mask)
{
    const auto& d = mask.dims();
    std::vector<Index3> out;
    for (std::size_t k = 0; k < d.z; ++k)
        for (std::size_t j = 0; j < d.y; ++j)
            for (std::size_t i = 0; i < d.x; ++i) {
                if (!mask(i, j, k))
                    continue;
                const bool border = i == 0 || j == 0 || k == 0 || i + 1 == d.x || j + 1 == d.y || k + 1 == d.z ||
                                    !mask(i - 1, j, k) || !mask(i + 1, j, k) || !mask(i, j - 1, k) ||
                                    !mask(i, j + 1, k) || !mask(i, j, k - 1) || !mask(i, j, k + 1);
                if (border)
                    out.push_back({i, j, k});
            }
    return out;
}

inline Mask surface_mask(const Mask& mask)
{
    std::vector<std::uint8_t> m(mask.size(), 0);
    for (const auto& p : surface_voxels(mask))
        m[mask.offset(p.i, p.j, p.k)] = 1;
    return mask.with_data(std::move(m));
}

/// Distances (mm) from each surface voxel of `from` to the nearest surface voxel of `to`.
inline std::vector<double> directed_surface_distances(const Mask& from, const Mask& to)
{
    const auto dt = distance_transform(surface_mask(to));
    const auto pts = surface_voxels(from);
    std::vector<double> d;
    d.reserve(pts.size());
    for (const auto& p : pts)
        d.push_back(dt(p.i, p.j, p.k));
    return d;
}

/// Symmetric percentile Hausdorff distance for one class: max of the two directed
/// q-th percentile surface distances. q = 95 gives HD95, q = 100 the classic Hausdorff.
/// Empty when both masks are empty; +inf when exactly one is.
inline std::optional<double> hausdorff_percentile(const LabelVolume& pred, const LabelVolume& gt, TissueClass cls,
                                                  double q)
{
    require_same_grid(pred, gt);
    const Mask mp = class_mask(pred, cls);
    const Mask mg = class_mask(gt, cls);
    const bool has_p = std::any_of(mp.data().begin(), mp.data().end(), [](auto v) { return v != 0; });
    const bool has_g = std::any_of(mg.data().begin(), mg.data().end(), [](auto v) { return v != 0; });
    if (!has_p && !has_g)
        return std::nullopt;
    if (has_p != has_g)
        return std::numeric_limits<double>::infinity();
    auto pg = directed_surface_distances(mp, mg);
    auto gp = directed_surface_distances(mg, mp);
    std::sort(pg.begin(), pg.end());
    std::sort(gp.begin(), gp.end());
    return std::max(percentile_sorted(pg, q), percentile_sorted(gp, q));
}

inline std::optional<double> hd95(const LabelVolume& pred, const LabelVolume& gt, TissueClass cls)
{
    return hausdorff_percentile(pred, gt, cls, 95.0);
}

struct ClassMetrics {
    TissueClass cls = TissueClass::csf;
    std::optional<double> dsc;
    std::optional<double> iou;
    std::optional<double> hd95;
    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct MetricsRecord {
    std::string case_id;
    std::string method;
    std::array<ClassMetrics, 6> per_class{};

    const ClassMetrics& at(TissueClass c) const
    {
        for (const auto& m : per_class)
            if (m.cls == c)
                return m;
        throw Error(Errc::invalid_label, "no metrics for class " + std::string(display_name(c)));
    }
    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline void validate(const MetricsRecord& r)
{
    if (r.case_id.empty() || r.method.empty())
        throw Error(Errc::bad_format, "metrics record needs a case id and a method");
    for (std::size_t c = 0; c < foreground_classes.size(); ++c) {
        const auto& m = r.per_class[c];
        if (m.cls != foreground_classes[c])
            throw Error(Errc::bad_format, "metrics record classes out of order");
        if (m.dsc.has_value() != m.iou.has_value())
            throw Error(Errc::bad_format, "dsc and iou must be both defined or both undefined");
    }
}

inline MetricsRecord evaluate_case(const LabelVolume& pred, const LabelVolume& gt, std::string case_id,
                                   std::string method)
{
    require_same_grid(pred, gt);
    validate_labels(pred);
    validate_labels(gt);
    MetricsRecord rec{std::move(case_id), std::move(method), {}};
    for (std::size_t c = 0; c < foreground_classes.size(); ++c) {
        const auto cls = foreground_classes[c];
        const auto counts = confusion_counts(pred, gt, cls);
        rec.per_class[c] = {cls, dice(counts), iou(counts), hd95(pred, gt, cls)};
    }
    validate(rec);
    return rec;
}

} // namespace voxmetrics
