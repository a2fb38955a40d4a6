#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <voxmetrics/edt.hpp>
#include <voxmetrics/metrics.hpp>
#include <voxmetrics/phantom.hpp>

#include "oracles.hpp"

using namespace voxmetrics;

namespace {

LabelVolume labels_from(Dims d, Spacing s, std::initializer_list<std::array<std::size_t, 3>> voxels, std::uint8_t c = 1)
{
    LabelVolume l(d, s, 0);
    for (const auto& p : voxels)
        l(p[0], p[1], p[2]) = c;
    return l;
}

Mask mask_from(Dims d, Spacing s, std::initializer_list<std::array<std::size_t, 3>> voxels)
{
    return labels_from(d, s, voxels);
}

LabelVolume dilate_class(const LabelVolume& l, std::uint8_t c)
{
    LabelVolume out = l;
    const auto& d = l.dims();
    const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (std::size_t k = 0; k < d.z; ++k)
        for (std::size_t j = 0; j < d.y; ++j)
            for (std::size_t i = 0; i < d.x; ++i) {
                if (l(i, j, k) != c)
                    continue;
                for (const auto& o : off) {
                    const long ni = static_cast<long>(i) + o[0], nj = static_cast<long>(j) + o[1],
                               nk = static_cast<long>(k) + o[2];
                    if (ni < 0 || nj < 0 || nk < 0 || ni >= static_cast<long>(d.x) || nj >= static_cast<long>(d.y) ||
                        nk >= static_cast<long>(d.z))
                        continue;
                    out(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj), static_cast<std::size_t>(nk)) = c;
                }
            }
    return out;
}

constexpr auto csf = TissueClass::csf;

} // namespace

TEST(Confusion, Examples)
{
    const Spacing s{1, 1, 1};
    const auto a = labels_from({4, 1, 1}, s, {{0, 0, 0}, {1, 0, 0}});
    const auto b = labels_from({4, 1, 1}, s, {{1, 0, 0}, {2, 0, 0}});
    const auto n = confusion_counts(a, b, csf);
    EXPECT_EQ(n.tp, 1u);
    EXPECT_EQ(n.fp, 1u);
    EXPECT_EQ(n.fn, 1u);
    EXPECT_EQ(dice(a, b, csf), 0.5);
    EXPECT_DOUBLE_EQ(*iou(a, b, csf), 1.0 / 3.0);

    LabelVolume ten({10, 1, 1}, s, 1);
    const auto same = confusion_counts(ten, ten, csf);
    EXPECT_EQ(same.tp, 10u);
    EXPECT_EQ(same.fp + same.fn, 0u);
    const auto none = confusion_counts(ten, ten, TissueClass::wm);
    EXPECT_EQ(none.tp + none.fp + none.fn, 0u);
    EXPECT_FALSE(dice(ten, ten, TissueClass::wm).has_value());
    EXPECT_FALSE(iou(ten, ten, TissueClass::wm).has_value());
}

TEST(Confusion, GridMismatch)
{
    const LabelVolume a({3, 3, 3}, {1, 1, 1}), b({3, 3, 3}, {1, 1, 2}), c({3, 3, 2}, {1, 1, 1});
    try {
        confusion_counts(a, b, csf);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::grid_mismatch);
    }
    EXPECT_THROW(hd95(a, c, csf), Error);
}

TEST(Dice, IdenticalDisjointAndIdentity)
{
    const Spacing s{1, 1, 1};
    const auto a = labels_from({4, 4, 1}, s, {{0, 0, 0}, {1, 1, 0}});
    const auto b = labels_from({4, 4, 1}, s, {{3, 3, 0}});
    EXPECT_EQ(dice(a, a, csf), 1.0);
    EXPECT_EQ(iou(a, a, csf), 1.0);
    EXPECT_EQ(dice(a, b, csf), 0.0);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = oracle::random_dims(rng, 8);
        const auto p = oracle::random_labels(rng, d, s), g = oracle::random_labels(rng, d, s);
        for (auto c : foreground_classes) {
            const auto ds = dice(p, g, c), js = iou(p, g, c);
            ASSERT_EQ(ds.has_value(), js.has_value());
            if (ds) {
                EXPECT_NEAR(*js, *ds / (2.0 - *ds), 1e-12);
                EXPECT_EQ(dice(g, p, c), ds);
                EXPECT_EQ(iou(g, p, c), js);
            }
        }
    }
}

TEST(Edt, Examples)
{
    Mask full({3, 4, 5}, {0.7, 1.1, 2.0}, 1);
    const auto dt = distance_transform(full);
    for (double v : dt.data())
        EXPECT_EQ(v, 0.0);

    const auto one = mask_from({5, 5, 5}, {1, 1, 1}, {{0, 0, 0}});
    const auto d = distance_transform(one);
    EXPECT_EQ(d(3, 0, 0), 3.0);
    EXPECT_NEAR(d(1, 1, 1), std::sqrt(3.0), 1e-9);

    const auto aniso = mask_from({3, 3, 3}, {1, 1, 2}, {{0, 0, 0}});
    EXPECT_EQ(distance_transform(aniso)(0, 0, 1), 2.0);

    try {
        distance_transform(Mask({2, 2, 2}, {1, 1, 1}, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::empty_mask);
    }
}

TEST(Edt, MatchesBruteForce)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 60; ++trial) {
        const auto m = oracle::random_mask(rng, oracle::random_dims(rng, 10), oracle::random_spacing(rng));
        const auto got = distance_transform(m);
        const auto want = oracle::edt(m);
        for (std::size_t n = 0; n < want.size(); ++n)
            ASSERT_NEAR(got[n], want[n], 1e-9) << "trial " << trial << " voxel " << n;
    }
}

TEST(Surface, Examples)
{
    const auto single = mask_from({3, 3, 3}, {1, 1, 1}, {{1, 1, 1}});
    const auto sv = surface_voxels(single);
    ASSERT_EQ(sv.size(), 1u);
    EXPECT_EQ(sv[0], (Index3{1, 1, 1}));

    Mask cube({6, 6, 6}, {1, 1, 1}, 0);
    for (std::size_t k = 1; k < 5; ++k)
        for (std::size_t j = 1; j < 5; ++j)
            for (std::size_t i = 1; i < 5; ++i)
                cube(i, j, k) = 1;
    EXPECT_EQ(surface_voxels(cube).size(), 56u);

    Mask full({4, 5, 6}, {1, 1, 1}, 1);
    EXPECT_EQ(surface_voxels(full).size(), 4u * 5 * 6 - 2u * 3 * 4);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_mask(rng, oracle::random_dims(rng, 9), {1, 1, 1});
        EXPECT_EQ(surface_voxels(m).size(), oracle::surface(m).size());
    }
}

TEST(Hd95, Examples)
{
    const Spacing s{1, 1, 1};
    const auto a = labels_from({5, 1, 1}, s, {{0, 0, 0}});
    const auto b = labels_from({5, 1, 1}, s, {{3, 0, 0}});
    EXPECT_EQ(hd95(a, a, csf), 0.0);
    EXPECT_EQ(hd95(a, b, csf), 3.0);

    LabelVolume pred({20, 41, 1}, s, 0);
    for (std::size_t i = 0; i < 20; ++i)
        pred(i, 0, 0) = 1;
    auto gt = pred;
    gt(0, 40, 0) = 1;
    EXPECT_EQ(hd95(pred, gt, csf), 0.0);
    EXPECT_EQ(hausdorff_percentile(pred, gt, csf, 100.0), 40.0);
}

TEST(Hd95, EmptyConventions)
{
    const Spacing s{1, 1, 1};
    const LabelVolume empty({4, 4, 4}, s, 0);
    const auto one = labels_from({4, 4, 4}, s, {{1, 2, 3}});
    EXPECT_FALSE(hd95(empty, empty, csf).has_value());
    EXPECT_TRUE(std::isinf(*hd95(empty, one, csf)));
    EXPECT_TRUE(std::isinf(*hd95(one, empty, csf)));
}

TEST(Hd95, MatchesBruteForceAndIsSymmetric)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const auto d = oracle::random_dims(rng, 10);
        const auto s = oracle::random_spacing(rng);
        const auto p = oracle::random_labels(rng, d, s), g = oracle::random_labels(rng, d, s);
        for (auto c : foreground_classes) {
            const auto got = hd95(p, g, c);
            const auto want = oracle::hausdorff(p, g, code(c), 95.0);
            ASSERT_EQ(got.has_value(), want.has_value());
            if (!got)
                continue;
            if (std::isinf(*want))
                EXPECT_TRUE(std::isinf(*got));
            else
                EXPECT_NEAR(*got, *want, 1e-9);
            EXPECT_EQ(hd95(g, p, c), got);
        }
    }
}

TEST(Hd95, ScalesWithSpacing)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = oracle::random_dims(rng, 9);
        const auto s = oracle::random_spacing(rng);
        const auto p = oracle::random_labels(rng, d, s), g = oracle::random_labels(rng, d, s);
        for (double f : {2.0, 0.5, 3.7}) {
            const Spacing t{s.x * f, s.y * f, s.z * f};
            const LabelVolume ps(d, t, scaling_affine(t), std::vector<std::uint8_t>(p.data().begin(), p.data().end()));
            const LabelVolume gs(d, t, scaling_affine(t), std::vector<std::uint8_t>(g.data().begin(), g.data().end()));
            for (auto c : foreground_classes) {
                const auto a = hd95(p, g, c), b = hd95(ps, gs, c);
                ASSERT_EQ(a.has_value(), b.has_value());
                EXPECT_EQ(dice(p, g, c), dice(ps, gs, c));
                if (!a || std::isinf(*a))
                    continue;
                // Powers of two scale exactly; other factors to rounding.
                if (f != 3.7)
                    EXPECT_EQ(*b, *a * f);
                else
                    EXPECT_NEAR(*b, *a * f, 1e-12 * std::max(1.0, *a * f));
            }
        }
    }
}

TEST(EvaluateCase, SelfAndMissingClass)
{
    const auto ph = phantom::generate({});
    const auto r = evaluate_case(ph.labels, ph.labels, "c1", "self");
    EXPECT_EQ(r.case_id, "c1");
    EXPECT_EQ(r.method, "self");
    for (const auto& m : r.per_class) {
        EXPECT_EQ(m.dsc, 1.0);
        EXPECT_EQ(m.iou, 1.0);
        EXPECT_EQ(m.hd95, 0.0);
    }

    auto pred = ph.labels;
    for (auto& v : pred.data())
        if (v == code(TissueClass::brainstem))
            v = 0;
    const auto miss = evaluate_case(pred, ph.labels, "c1", "m");
    const auto& bs = miss.at(TissueClass::brainstem);
    EXPECT_EQ(bs.dsc, 0.0);
    EXPECT_EQ(bs.iou, 0.0);
    EXPECT_TRUE(std::isinf(*bs.hd95));
}

TEST(EvaluateCase, OneVoxelDilation)
{
    phantom::PhantomSpec spec;
    spec.dims = {24, 24, 24};
    spec.spacing = {1.0, 1.0, 1.5};
    const auto ph = phantom::generate(spec);
    const auto code_dgm = code(TissueClass::dgm);
    const auto pred = dilate_class(ph.labels, code_dgm);
    const auto r = evaluate_case(pred, ph.labels, "d", "dilated");
    const auto& m = r.at(TissueClass::dgm);
    EXPECT_LT(*m.dsc, 1.0);
    EXPECT_LE(*m.hd95, spec.spacing.max_component());
    EXPECT_NEAR(*m.hd95, *oracle::hausdorff(pred, ph.labels, code_dgm, 95.0), 1e-9);
}

TEST(Records, ValidateRejectsEmptyIds)
{
    const auto ph = phantom::generate({.dims = {16, 16, 16}});
    auto r = evaluate_case(ph.labels, ph.labels, "x", "y");
    r.case_id.clear();
    EXPECT_THROW(validate(r), Error);
}
