#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <voxmetrics/augment.hpp>
#include <voxmetrics/parallel.hpp>
#include <voxmetrics/phantom.hpp>

#include "oracles.hpp"

using namespace voxmetrics;
using namespace voxmetrics::augment;

namespace {

Volume random_volume(std::mt19937_64& rng, Dims d, Spacing s = {1, 1, 1})
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(d.count());
    for (auto& x : v)
        x = u(rng);
    return Volume(d, s, scaling_affine(s), std::move(v));
}

std::set<int> label_set(const LabelVolume& l) { return {l.data().begin(), l.data().end()}; }

void expect_subset_with_background(const LabelVolume& out, const LabelVolume& in)
{
    auto allowed = label_set(in);
    allowed.insert(0);
    for (int v : label_set(out))
        EXPECT_TRUE(allowed.count(v)) << "label " << v << " appeared";
}

LabelVolume ball(std::size_t n, double radius)
{
    std::vector<std::uint8_t> v(n * n * n);
    const double c = (static_cast<double>(n) - 1.0) / 2.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = i - c, dy = j - c, dz = k - c;
                v[i + n * (j + n * k)] = dx * dx + dy * dy + dz * dz <= radius * radius ? 3 : 0;
            }
    return LabelVolume({n, n, n}, {1, 1, 1}, scaling_affine({1, 1, 1}), std::move(v));
}

std::size_t count_nonzero(const LabelVolume& l)
{
    return static_cast<std::size_t>(std::count_if(l.data().begin(), l.data().end(), [](auto v) { return v != 0; }));
}

AugmentSpec all_off()
{
    AugmentSpec s;
    for (RangeParam* p : {&s.rotation, &s.scaling, &s.noise, &s.blur, &s.brightness, &s.contrast, &s.low_res, &s.gamma})
        p->probability = 0.0;
    s.mirror.probability = 0.0;
    return s;
}

AugmentSpec all_on(std::uint64_t seed)
{
    AugmentSpec s;
    for (RangeParam* p : {&s.rotation, &s.scaling, &s.noise, &s.blur, &s.brightness, &s.contrast, &s.low_res, &s.gamma})
        p->probability = 1.0;
    s.seed = seed;
    return s;
}

} // namespace

TEST(Rotate, ZeroAnglesIdentity)
{
    std::mt19937_64 rng(1);
    const auto vol = random_volume(rng, {7, 6, 5}, {0.5, 1.0, 2.0});
    const auto lab = oracle::random_labels(rng, {7, 6, 5}, {0.5, 1.0, 2.0});
    const auto out = rotate(vol, lab, {0, 0, 0});
    EXPECT_EQ(out.image, vol);
    EXPECT_EQ(out.labels, lab);
}

TEST(Rotate, QuarterTurnIsIndexPermutation)
{
    std::mt19937_64 rng(2);
    for (std::size_t n : {5u, 6u}) {
        const Dims d{n, n, 4};
        const auto vol = random_volume(rng, d);
        const auto lab = oracle::random_labels(rng, d, {1, 1, 1});
        const auto out = rotate(vol, lab, {0, 0, 90});
        for (std::size_t k = 0; k < d.z; ++k)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    ASSERT_EQ(out.image(i, j, k), vol(j, n - 1 - i, k));
                    ASSERT_EQ(out.labels(i, j, k), lab(j, n - 1 - i, k));
                }
    }
}

TEST(Rotate, FourQuarterTurnsReturnHome)
{
    std::mt19937_64 rng(3);
    const auto vol = random_volume(rng, {6, 6, 6});
    const auto lab = oracle::random_labels(rng, {6, 6, 6}, {1, 1, 1});
    Augmented cur{vol, lab};
    for (int t = 0; t < 4; ++t)
        cur = rotate(cur.image, cur.labels, {90, 0, 0});
    EXPECT_EQ(cur.image, vol);
    EXPECT_EQ(cur.labels, lab);
}

TEST(Rotate, LabelClosure)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> a(-180, 180);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = oracle::random_dims(rng, 10);
        const auto s = oracle::random_spacing(rng);
        const auto lab = oracle::random_labels(rng, d, s);
        const auto out = rotate(Volume(d, s), lab, {a(rng), a(rng), a(rng)});
        expect_subset_with_background(out.labels, lab);
        EXPECT_EQ(out.labels.dims(), d);
    }
}

TEST(Rotate, IndicatorCommutesWithLabels)
{
    std::mt19937_64 rng(5);
    const auto lab = oracle::random_labels(rng, {9, 8, 7}, {1, 1, 1.5});
    const std::array<double, 3> ang{17, -23, 41};
    const auto out = rotate(Volume(lab.dims(), lab.spacing()), lab, ang);
    for (std::uint8_t c = 1; c <= 6; ++c) {
        const auto ind = oracle::mask_of(lab, c);
        const auto r = rotate(Volume(lab.dims(), lab.spacing()), ind, ang);
        for (std::size_t n = 0; n < lab.size(); ++n)
            ASSERT_EQ(r.labels[n] != 0, out.labels[n] == c);
    }
}

TEST(Rotate, RejectsNonFiniteAngles)
{
    const Volume v({2, 2, 2}, {1, 1, 1});
    EXPECT_THROW(rotate(v, LabelVolume({2, 2, 2}, {1, 1, 1}), {0, NAN, 0}), Error);
    EXPECT_THROW(rotate(v, LabelVolume({3, 2, 2}, {1, 1, 1}), {0, 0, 0}), Error);
}

TEST(Scale, IdentityAndBallGrowth)
{
    std::mt19937_64 rng(6);
    const auto vol = random_volume(rng, {6, 5, 4});
    const auto lab = oracle::random_labels(rng, {6, 5, 4}, {1, 1, 1});
    const auto id = scale_spatial(vol, lab, 1.0);
    EXPECT_EQ(id.image, vol);
    EXPECT_EQ(id.labels, lab);

    const auto b = ball(48, 8.0);
    const auto grown = scale_spatial(Volume(b.dims(), b.spacing()), b, 2.0);
    const double ratio = static_cast<double>(count_nonzero(grown.labels)) / static_cast<double>(count_nonzero(b));
    EXPECT_NEAR(ratio, 8.0, 8.0 * 0.15);
    expect_subset_with_background(grown.labels, b);
    EXPECT_THROW(scale_spatial(vol, lab, 0.0), Error);
}

TEST(Noise, IdentityStatisticsDeterminism)
{
    std::mt19937_64 rng(7);
    const auto vol = random_volume(rng, {5, 5, 5});
    EXPECT_EQ(add_gaussian_noise(vol, 0.0, 1), vol);

    const Volume zero({100, 100, 100}, {1, 1, 1}, 0.0);
    const auto out = add_gaussian_noise(zero, 0.1, 42);
    const double n = static_cast<double>(out.size());
    const double mean = std::accumulate(out.data().begin(), out.data().end(), 0.0) / n;
    double ss = 0.0;
    for (double v : out.data())
        ss += (v - mean) * (v - mean);
    EXPECT_LT(std::fabs(mean), 4.0 * 0.1 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(ss / (n - 1)), 0.1, 0.001);
    EXPECT_EQ(add_gaussian_noise(zero, 0.1, 42), out);
    EXPECT_NE(add_gaussian_noise(zero, 0.1, 43), out);
}

TEST(Blur, IdentityConstantImpulse)
{
    std::mt19937_64 rng(8);
    const auto vol = random_volume(rng, {5, 6, 7});
    EXPECT_EQ(gaussian_blur(vol, 0.0), vol);

    const Volume c({6, 7, 8}, {1, 1, 1}, 0.3);
    EXPECT_EQ(gaussian_blur(c, 0.8), c);

    Volume imp({21, 21, 21}, {1, 1, 1}, 0.0);
    imp(10, 10, 10) = 1.0;
    const auto out = gaussian_blur(imp, 1.0);
    // Truncated at radius 4, normalised.
    double s = 0.0;
    for (int x = -4; x <= 4; ++x)
        s += std::exp(-0.5 * x * x);
    const double centre1d = 1.0 / s;
    EXPECT_NEAR(out(10, 10, 10), centre1d * centre1d * centre1d, 1e-15);
    EXPECT_NEAR(std::accumulate(out.data().begin(), out.data().end(), 0.0), 1.0, 1e-6);
}

TEST(Blur, CornerImpulseStaysPeakedAndNonNegative)
{
    Volume imp({5, 5, 5}, {1, 1, 1}, 0.0);
    imp(0, 0, 0) = 1.0;
    const auto out = gaussian_blur(imp, 0.7);
    for (double v : out.data())
        EXPECT_GE(v, 0.0);
    EXPECT_GT(out(0, 0, 0), out(1, 0, 0));
}

TEST(Brightness, Examples)
{
    std::mt19937_64 rng(9);
    const auto vol = random_volume(rng, {4, 4, 4});
    EXPECT_EQ(adjust_brightness(vol, 1.0), vol);
    const auto twice = adjust_brightness(vol, 2.0);
    for (std::size_t n = 0; n < vol.size(); ++n)
        EXPECT_EQ(twice[n], 2.0 * vol[n]);
    EXPECT_THROW(adjust_brightness(vol, 0.0), Error);
}

TEST(Contrast, Examples)
{
    std::mt19937_64 rng(10);
    const auto vol = random_volume(rng, {4, 4, 4});
    EXPECT_EQ(adjust_contrast(vol, 1.0), vol);
    const double mean = std::accumulate(vol.data().begin(), vol.data().end(), 0.0) / static_cast<double>(vol.size());
    const auto flat = adjust_contrast(vol, 0.0);
    for (double v : flat.data())
        EXPECT_DOUBLE_EQ(v, mean);
    const auto [lo, hi] = value_range(vol);
    for (double f : {0.3, 1.7, 5.0})
        for (const auto out = adjust_contrast(vol, f); double v : out.data()) {
            EXPECT_GE(v, lo);
            EXPECT_LE(v, hi);
        }
}

TEST(LowRes, Examples)
{
    std::mt19937_64 rng(11);
    const auto vol = random_volume(rng, {8, 8, 8});
    EXPECT_EQ(simulate_low_res(vol, 1.0), vol);
    const Volume c({9, 9, 9}, {1, 1, 1}, 0.4);
    EXPECT_EQ(simulate_low_res(c, 1.7), c);

    Volume board({16, 16, 16}, {1, 1, 1});
    for (std::size_t k = 0; k < 16; ++k)
        for (std::size_t j = 0; j < 16; ++j)
            for (std::size_t i = 0; i < 16; ++i)
                board(i, j, k) = (i + j + k) % 2 ? 1.0 : -1.0;
    const auto out = simulate_low_res(board, 2.0);
    EXPECT_EQ(out.dims(), board.dims());
    double peak = 0.0;
    for (double v : out.data())
        peak = std::max(peak, std::fabs(v));
    EXPECT_LT(peak, 1.0);
    EXPECT_THROW(simulate_low_res(vol, 0.5), Error);
}

TEST(Gamma, Examples)
{
    std::mt19937_64 rng(12);
    const auto vol = random_volume(rng, {4, 4, 4});
    EXPECT_EQ(gamma_transform(vol, 1.0), vol);
    const Volume e({3, 1, 1}, {1, 1, 1}, scaling_affine({1, 1, 1}), {0.0, 0.5, 1.0});
    const auto sq = gamma_transform(e, 2.0);
    EXPECT_EQ(sq[1], 0.25);
    for (double g : {0.3, 0.7, 1.5, 4.0}) {
        const auto o = gamma_transform(e, g);
        EXPECT_EQ(o[0], 0.0);
        EXPECT_EQ(o[2], 1.0);
    }
    const Volume bad({2, 1, 1}, {1, 1, 1}, scaling_affine({1, 1, 1}), {0.5, 1.5});
    try {
        gamma_transform(bad, 2.0);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::not_normalized);
    }
}

TEST(Mirror, ExamplesAndInvolution)
{
    std::mt19937_64 rng(13);
    const auto vol = random_volume(rng, {5, 4, 3});
    const auto lab = oracle::random_labels(rng, {5, 4, 3}, {1, 1, 1});
    const auto id = mirror(vol, lab, {});
    EXPECT_EQ(id.image, vol);
    EXPECT_EQ(id.labels, lab);
    for (int m = 1; m < 8; ++m) {
        const MirrorAxes ax{(m & 1) != 0, (m & 2) != 0, (m & 4) != 0};
        const auto once = mirror(vol, lab, ax);
        const auto twice = mirror(once.image, once.labels, ax);
        EXPECT_EQ(twice.image, vol);
        EXPECT_EQ(twice.labels, lab);
    }

    std::vector<double> v(8);
    std::iota(v.begin(), v.end(), 0.0);
    const Volume cube({2, 2, 2}, {1, 1, 1}, scaling_affine({1, 1, 1}), v);
    const auto flipped = flip(cube, {true, true, true});
    for (std::size_t n = 0; n < 8; ++n)
        EXPECT_EQ(flipped[n], static_cast<double>(7 - n));
}

TEST(Pipeline, AllProbabilitiesZeroIsIdentity)
{
    std::mt19937_64 rng(14);
    const auto vol = random_volume(rng, {6, 6, 6});
    const auto lab = oracle::random_labels(rng, {6, 6, 6}, {1, 1, 1});
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
        auto spec = all_off();
        spec.seed = seed;
        const auto out = apply_pipeline(spec, vol, lab, seed);
        EXPECT_EQ(out.image, vol);
        EXPECT_EQ(out.labels, lab);
    }
}

TEST(Pipeline, DeterministicAndClosed)
{
    phantom::PhantomSpec ps;
    ps.dims = {24, 24, 24};
    const auto ph = phantom::generate(ps);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto spec = all_on(seed);
        const auto a = apply_pipeline(spec, ph.image, ph.labels, 4);
        const auto b = apply_pipeline(spec, ph.image, ph.labels, 4);
        EXPECT_EQ(a.image, b.image);
        EXPECT_EQ(a.labels, b.labels);
        expect_subset_with_background(a.labels, ph.labels);
        EXPECT_EQ(a.labels.dims(), ph.labels.dims());
        for (double v : a.image.data())
            ASSERT_TRUE(std::isfinite(v));
        EXPECT_NE(a.image, apply_pipeline(spec, ph.image, ph.labels, 5).image);
    }
}

TEST(Pipeline, IntensityTransformsLeaveLabelsAlone)
{
    std::mt19937_64 rng(15);
    const auto vol = random_volume(rng, {8, 8, 8});
    const auto lab = oracle::random_labels(rng, {8, 8, 8}, {1, 1, 1});
    auto spec = all_on(7);
    spec.rotation.enabled = false;
    spec.scaling.enabled = false;
    spec.mirror.enabled = false;
    const auto out = apply_pipeline(spec, vol, lab);
    EXPECT_EQ(out.labels, lab);
    EXPECT_NE(out.image, vol);
}

TEST(Pipeline, ParallelCasesMatchSerial)
{
    phantom::PhantomSpec ps;
    ps.dims = {20, 20, 20};
    const auto ph = phantom::generate(ps);
    const auto spec = all_on(11);
    const std::size_t cases = 6;
    std::vector<Augmented> serial(cases), par(cases);
    parallel_for(cases, 1, [&](std::size_t i) { serial[i] = apply_pipeline(spec, ph.image, ph.labels, i); });
    parallel_for(cases, 4, [&](std::size_t i) { par[i] = apply_pipeline(spec, ph.image, ph.labels, i); });
    for (std::size_t i = 0; i < cases; ++i) {
        EXPECT_EQ(serial[i].image, par[i].image);
        EXPECT_EQ(serial[i].labels, par[i].labels);
    }
}

TEST(Pipeline, SpecValidationAndJson)
{
    AugmentSpec bad;
    bad.gamma.lo = 2.0;
    bad.gamma.hi = 1.0;
    EXPECT_THROW(validate(bad), Error);
    bad = {};
    bad.noise.probability = 1.5;
    EXPECT_THROW(validate(bad), Error);

    AugmentSpec s;
    s.seed = 123456789012345ull;
    s.rotation = {true, 0.4, -10, 15};
    s.mirror.axes = {true, false, true};
    EXPECT_EQ(spec_from_json(nlohmann::json::parse(to_json(s).dump())), s);

    const auto partial = spec_from_json(nlohmann::json::parse(R"({"gamma": {"probability": 1.0}})"));
    EXPECT_EQ(partial.gamma.probability, 1.0);
    EXPECT_EQ(partial.gamma.lo, AugmentSpec{}.gamma.lo);
    EXPECT_THROW(spec_from_json(nlohmann::json::parse(R"({"rotaton": {}})")), Error);
}
