#pragma once

// Command-line front end. run() returns the process exit status:
// 0 success, 1 usage error, 2 data error, 3 internal error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "augment.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "nifti.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "preprocess.hpp"
#include "records.hpp"
#include "report.hpp"
#include "resample.hpp"

namespace voxmetrics::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, usage = 1, data = 2, internal = 3 };

namespace detail {

inline std::string case_id_of(const fs::path& p)
{
    std::string name = p.filename().string();
    for (std::string_view ext : {".nii.gz", ".nii"})
        if (name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0)
            return name.substr(0, name.size() - ext.size());
    return name;
}

inline std::vector<std::string> nifti_files(const fs::path& dir)
{
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && nifti::has_nifti_extension(e.path()))
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

inline std::string join(const std::vector<std::string>& v)
{
    std::string s;
    for (const auto& x : v)
        s += (s.empty() ? "" : ", ") + x;
    return s;
}

inline Spacing to_spacing(const std::vector<double>& v)
{
    if (v.size() != 3)
        throw Error(Errc::bad_parameter, "spacing needs three comma-separated values");
    const Spacing s{v[0], v[1], v[2]};
    if (!s.positive())
        throw Error(Errc::non_positive_spacing, "spacing must be > 0");
    return s;
}

inline void emit(const std::string& content, const std::string& out_path, std::ostream& out)
{
    if (out_path.empty())
        out << content;
    else
        text::write_text(out_path, content);
}

inline std::vector<MetricsRecord> load_records(const std::vector<std::string>& paths)
{
    std::vector<MetricsRecord> all;
    for (const auto& p : paths) {
        auto r = read_records(p);
        all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return all;
}

} // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"voxmetrics: volumetric segmentation preprocessing and evaluation"};
    app.require_subcommand(1, 1);
    app.fallthrough(); // --jobs may follow the subcommand
    std::size_t jobs = default_jobs();
    app.add_option("--jobs", jobs, "worker threads (default: $VOXMETRICS_JOBS or 1)")->check(CLI::PositiveNumber);

    // preprocess
    std::string pp_in, pp_out;
    double pp_clip = default_clip_percentile;
    auto* pp = app.add_subcommand("preprocess", "percentile clip then min-max scale an intensity volume");
    pp->add_option("--in", pp_in)->required()->check(CLI::ExistingFile);
    pp->add_option("--out", pp_out)->required();
    pp->add_option("--clip-percentile", pp_clip, "upper clip percentile")->capture_default_str();

    // resample
    std::string rs_in, rs_out;
    std::vector<double> rs_spacing;
    bool rs_labels = false;
    auto* rs = app.add_subcommand("resample", "resample to a target voxel spacing");
    rs->add_option("--in", rs_in)->required()->check(CLI::ExistingFile);
    rs->add_option("--out", rs_out)->required();
    rs->add_option("--spacing", rs_spacing, "target spacing in mm, e.g. 1.0,1.0,1.0")
        ->required()
        ->delimiter(',')
        ->expected(3);
    rs->add_flag("--labels", rs_labels, "treat input as a label map (nearest neighbour)");

    // augment
    std::string au_image, au_labels, au_out_dir, au_config;
    std::uint64_t au_seed = 0;
    std::size_t au_count = 1;
    auto* au = app.add_subcommand("augment", "write N augmented image/label pairs");
    au->add_option("--image", au_image)->required()->check(CLI::ExistingFile);
    au->add_option("--labels", au_labels)->required()->check(CLI::ExistingFile);
    au->add_option("--out-dir", au_out_dir)->required();
    au->add_option("--seed", au_seed)->required();
    au->add_option("--config", au_config, "JSON overrides for the augmentation spec")->check(CLI::ExistingFile);
    au->add_option("--count", au_count)->check(CLI::PositiveNumber)->capture_default_str();

    // evaluate
    std::string ev_pred, ev_gt, ev_method, ev_out;
    auto* ev = app.add_subcommand("evaluate", "score predicted label maps against ground truth");
    ev->add_option("--pred-dir", ev_pred)->required()->check(CLI::ExistingDirectory);
    ev->add_option("--gt-dir", ev_gt)->required()->check(CLI::ExistingDirectory);
    ev->add_option("--method", ev_method)->required();
    ev->add_option("--out", ev_out, "records file (.csv or .json)")->required();

    // compare
    std::vector<std::string> cmp_records;
    std::string cmp_metric = "dsc", cmp_adjust = "bonferroni", cmp_format = "text", cmp_out;
    auto* cmp = app.add_subcommand("compare", "Kruskal-Wallis and Dunn comparison of methods");
    cmp->add_option("--records", cmp_records)->required()->check(CLI::ExistingFile);
    cmp->add_option("--metric", cmp_metric)->check(CLI::IsMember({"dsc", "iou", "hd95"}))->capture_default_str();
    cmp->add_option("--adjust", cmp_adjust)->check(CLI::IsMember(stats::known_adjustments()))->capture_default_str();
    cmp->add_option("--format", cmp_format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    cmp->add_option("--out", cmp_out, "write here instead of stdout");

    // report
    std::vector<std::string> rp_records;
    std::string rp_format = "text", rp_out, rp_adjust = "bonferroni";
    bool rp_stats = false;
    auto* rp = app.add_subcommand("report", "per-method summary table");
    rp->add_option("--records", rp_records)->required()->check(CLI::ExistingFile);
    rp->add_option("--format", rp_format)->check(CLI::IsMember({"text", "csv", "json"}))->capture_default_str();
    rp->add_option("--out", rp_out, "write here instead of stdout");
    rp->add_flag("--stats", rp_stats, "append comparisons for dsc, iou and hd95");
    rp->add_option("--adjust", rp_adjust)->check(CLI::IsMember(stats::known_adjustments()))->capture_default_str();

    // phantom
    std::string ph_out_dir, ph_name;
    std::vector<std::size_t> ph_dims{64, 64, 64};
    std::vector<double> ph_spacing{1.0, 1.0, 1.0};
    std::uint64_t ph_seed = 0;
    double ph_noise = phantom::PhantomSpec{}.noise_sigma;
    auto* ph = app.add_subcommand("phantom", "generate a synthetic labelled volume");
    ph->add_option("--out-dir", ph_out_dir)->required();
    ph->add_option("--dims", ph_dims)->delimiter(',')->expected(3);
    ph->add_option("--spacing", ph_spacing)->delimiter(',')->expected(3);
    ph->add_option("--seed", ph_seed)->required();
    ph->add_option("--noise", ph_noise)->capture_default_str();
    ph->add_option("--name", ph_name, "case name (default phantom_<seed>)");

    // protocol
    std::string pr_out;
    auto* pr = app.add_subcommand("protocol", "write the two-stage training protocol manifest");
    pr->add_option("--out", pr_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return ok;
        }
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return usage;
    }

    try {
        if (*pp) {
            nifti::write_volume(preprocess_case(nifti::read_volume(pp_in), pp_clip), pp_out);
        } else if (*rs) {
            const auto target = detail::to_spacing(rs_spacing);
            if (rs_labels)
                nifti::write_volume(resample_labels(nifti::read_labels(rs_in), target), rs_out);
            else
                nifti::write_volume(resample_intensity(nifti::read_volume(rs_in), target), rs_out);
        } else if (*au) {
            augment::AugmentSpec spec;
            if (!au_config.empty()) {
                try {
                    spec = augment::spec_from_json(nlohmann::json::parse(text::read_text(au_config)));
                } catch (const nlohmann::json::parse_error& e) {
                    throw Error(Errc::bad_format, au_config + ": " + e.what());
                }
            }
            spec.seed = au_seed;
            augment::validate(spec);
            const auto image = nifti::read_volume(au_image);
            const auto labels = nifti::read_labels(au_labels);
            if (!image.same_grid(labels))
                throw Error(Errc::grid_mismatch, "image and label grids differ");
            const fs::path images_dir = fs::path(au_out_dir) / "images";
            const fs::path labels_dir = fs::path(au_out_dir) / "labels";
            fs::create_directories(images_dir);
            fs::create_directories(labels_dir);
            parallel_for(au_count, jobs, [&](std::size_t i) {
                const auto a = augment::apply_pipeline(spec, image, labels, i);
                char name[32];
                std::snprintf(name, sizeof name, "aug_%03zu.nii.gz", i);
                nifti::write_volume(a.image, images_dir / name);
                nifti::write_volume(a.labels, labels_dir / name);
            });
        } else if (*ev) {
            const auto pred_names = detail::nifti_files(ev_pred);
            const auto gt_names = detail::nifti_files(ev_gt);
            if (pred_names != gt_names) {
                std::vector<std::string> only_pred, only_gt;
                std::set_difference(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                                    std::back_inserter(only_pred));
                std::set_difference(gt_names.begin(), gt_names.end(), pred_names.begin(), pred_names.end(),
                                    std::back_inserter(only_gt));
                throw Error(Errc::inconsistent_cases, "case files differ; only in pred-dir: [" +
                                                          detail::join(only_pred) + "], only in gt-dir: [" +
                                                          detail::join(only_gt) + "]");
            }
            if (pred_names.empty())
                throw Error(Errc::no_records, "no .nii or .nii.gz files in " + ev_pred);
            std::vector<MetricsRecord> records(pred_names.size());
            parallel_for(pred_names.size(), jobs, [&](std::size_t i) {
                const auto pred = nifti::read_labels(fs::path(ev_pred) / pred_names[i]);
                const auto gt = nifti::read_labels(fs::path(ev_gt) / gt_names[i]);
                records[i] = evaluate_case(pred, gt, detail::case_id_of(pred_names[i]), ev_method);
            });
            write_records(records, ev_out);
        } else if (*cmp) {
            const auto records = detail::load_records(cmp_records);
            const auto c = report::compare_methods(records, report::metric_from_name(cmp_metric), cmp_adjust);
            if (cmp_format == "json")
                detail::emit(report::to_json(c).dump(2) + "\n", cmp_out, out);
            else
                detail::emit(report::render({}, {c}, report::Format::text), cmp_out, out);
        } else if (*rp) {
            const auto records = detail::load_records(rp_records);
            std::vector<report::Comparison> comparisons;
            if (rp_stats)
                for (auto m : {report::Metric::dsc, report::Metric::iou, report::Metric::hd95})
                    comparisons.push_back(report::compare_methods(records, m, rp_adjust));
            detail::emit(report::render(report::aggregate(records), comparisons, report::format_from_name(rp_format)),
                         rp_out, out);
        } else if (*ph) {
            if (ph_dims.size() != 3)
                throw Error(Errc::bad_parameter, "dims needs three comma-separated values");
            phantom::PhantomSpec spec;
            spec.dims = {ph_dims[0], ph_dims[1], ph_dims[2]};
            spec.spacing = detail::to_spacing(ph_spacing);
            spec.seed = ph_seed;
            spec.noise_sigma = ph_noise;
            const auto p = phantom::generate(spec);
            const std::string name = ph_name.empty() ? "phantom_" + std::to_string(ph_seed) : ph_name;
            fs::create_directories(fs::path(ph_out_dir) / "images");
            fs::create_directories(fs::path(ph_out_dir) / "labels");
            nifti::write_volume(p.image, fs::path(ph_out_dir) / "images" / (name + ".nii.gz"));
            nifti::write_volume(p.labels, fs::path(ph_out_dir) / "labels" / (name + ".nii.gz"));
        } else if (*pr) {
            text::write_text(pr_out, to_json(emit_training_protocol()).dump(2) + "\n");
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return data;
    } catch (const fs::filesystem_error& e) {
        err << "error: Io: " << e.what() << "\n";
        return data;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return internal;
    }
    return ok;
}

} // namespace voxmetrics::cli
