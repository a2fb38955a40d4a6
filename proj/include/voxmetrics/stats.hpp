#pragma once

// Rank-based comparison of methods: Kruskal-Wallis H with tie correction and
// Dunn's pairwise post-hoc z-test with a named multiplicity adjustment.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace voxmetrics::stats {

/// Ranks 1..n; tied values share the mean of the ranks they span.
inline std::vector<double> rank_with_ties(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t)
            ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Sum of (t^3 - t) over groups of tied values.
inline double tie_sum(std::span<const double> values)
{
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j + 1 < s.size() && s[j + 1] == s[i])
            ++j;
        const double t = static_cast<double>(j - i + 1);
        sum += t * t * t - t;
        i = j + 1;
    }
    return sum;
}

namespace detail {

inline constexpr double gamma_eps = 1e-16;
inline constexpr int gamma_max_iter = 100000;

// Lower regularized gamma P(a, x) by its power series; converges fast for x < a + 1.
inline double gamma_p_series(double a, double x)
{
    double ap = a, term = 1.0 / a, sum = term;
    for (int n = 0; n < gamma_max_iter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * gamma_eps)
            break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by modified Lentz continued fraction; for x >= a + 1.
inline double gamma_q_fraction(double a, double x)
{
    constexpr double tiny = std::numeric_limits<double>::min() / gamma_eps;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < gamma_max_iter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < gamma_eps)
            break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x)
{
    if (!(a > 0.0) || !(x >= 0.0))
        throw Error(Errc::bad_parameter, "gamma_q needs a > 0 and x >= 0");
    if (x == 0.0)
        return 1.0;
    if (x == std::numeric_limits<double>::infinity())
        return 0.0;
    if (x < a + 1.0)
        return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

/// Chi-square survival function P(X > x) with df degrees of freedom.
inline double chi2_sf(double x, int df)
{
    if (df < 1)
        throw Error(Errc::bad_parameter, "chi-square df must be positive");
    if (!(x >= 0.0))
        throw Error(Errc::bad_parameter, "chi-square statistic must be >= 0");
    return gamma_q(0.5 * df, 0.5 * x);
}

/// Standard normal survival function P(Z > z).
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

struct Group {
    std::string method;
    std::vector<double> values;
};

struct GroupedScores {
    std::string metric_name;
    std::vector<Group> groups;
};

struct KruskalResult {
    double h = 0.0;
    int df = 0;
    double p = 1.0;
    double tie_correction = 1.0;
};

struct DunnPair {
    std::string method_a;
    std::string method_b;
    double z = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
};

struct DunnResult {
    std::vector<DunnPair> pairs;
    std::string adjustment;
};

namespace detail {

struct Pooled {
    std::size_t total = 0;
    std::vector<double> mean_rank;
    std::vector<std::size_t> sizes;
    double ties = 0.0; // sum of t^3 - t
};

inline Pooled pool(const GroupedScores& s)
{
    if (s.groups.size() < 2)
        throw Error(Errc::too_few_groups, "need at least two groups, got " + std::to_string(s.groups.size()));
    std::vector<double> all;
    for (const auto& g : s.groups) {
        if (g.values.empty())
            throw Error(Errc::degenerate_data, "group '" + g.method + "' is empty");
        for (double v : g.values) {
            if (!std::isfinite(v))
                throw Error(Errc::degenerate_data, "group '" + g.method + "' has a non-finite value");
            all.push_back(v);
        }
    }
    if (all.size() < 3)
        throw Error(Errc::degenerate_data, "need at least three observations in total");
    const auto ranks = rank_with_ties(all);
    Pooled p;
    p.total = all.size();
    p.ties = tie_sum(all);
    std::size_t at = 0;
    for (const auto& g : s.groups) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i)
            sum += ranks[at++];
        p.sizes.push_back(g.values.size());
        p.mean_rank.push_back(sum / static_cast<double>(g.values.size()));
    }
    const double n = static_cast<double>(p.total);
    if (p.ties >= n * n * n - n)
        throw Error(Errc::degenerate_data, "all values are identical");
    return p;
}

} // namespace detail

inline KruskalResult kruskal_wallis(const GroupedScores& scores)
{
    const auto pooled = detail::pool(scores);
    const double n = static_cast<double>(pooled.total);
    const double centre = (n + 1.0) / 2.0;
    double ss = 0.0;
    for (std::size_t g = 0; g < pooled.sizes.size(); ++g) {
        const double dev = pooled.mean_rank[g] - centre;
        ss += static_cast<double>(pooled.sizes[g]) * dev * dev;
    }
    KruskalResult r;
    r.tie_correction = 1.0 - pooled.ties / (n * n * n - n);
    r.h = 12.0 * ss / (n * (n + 1.0)) / r.tie_correction;
    r.df = static_cast<int>(pooled.sizes.size()) - 1;
    r.p = chi2_sf(r.h, r.df);
    return r;
}

inline const std::vector<std::string>& known_adjustments()
{
    static const std::vector<std::string> names{"bonferroni", "holm", "none"};
    return names;
}

/// Adjusts raw p-values in place for m = raw.size() comparisons.
inline std::vector<double> adjust_pvalues(std::span<const double> raw, const std::string& method)
{
    const double m = static_cast<double>(raw.size());
    std::vector<double> out(raw.begin(), raw.end());
    if (method == "none")
        return out;
    if (method == "bonferroni") {
        for (auto& p : out)
            p = std::min(1.0, m * p);
        return out;
    }
    if (method == "holm") {
        std::vector<std::size_t> order(raw.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
        double running = 0.0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            running = std::max(running, std::min(1.0, (m - static_cast<double>(r)) * raw[order[r]]));
            out[order[r]] = running;
        }
        return out;
    }
    throw Error(Errc::unknown_adjustment, "unknown p-value adjustment '" + method + "'");
}

/// Variance term of Dunn's statistic: N(N+1)/12 - sum(t^3 - t) / (12(N-1)).
inline double dunn_variance(std::size_t total, double ties)
{
    const double n = static_cast<double>(total);
    return n * (n + 1.0) / 12.0 - ties / (12.0 * (n - 1.0));
}

inline DunnResult dunn_posthoc(const GroupedScores& scores, const std::string& adjustment = "bonferroni")
{
    if (std::find(known_adjustments().begin(), known_adjustments().end(), adjustment) == known_adjustments().end())
        throw Error(Errc::unknown_adjustment, "unknown p-value adjustment '" + adjustment + "'");
    const auto pooled = detail::pool(scores);
    const double var = dunn_variance(pooled.total, pooled.ties);
    DunnResult r;
    r.adjustment = adjustment;
    std::vector<double> raw;
    for (std::size_t a = 0; a < pooled.sizes.size(); ++a)
        for (std::size_t b = a + 1; b < pooled.sizes.size(); ++b) {
            const double se = std::sqrt(var * (1.0 / static_cast<double>(pooled.sizes[a]) +
                                               1.0 / static_cast<double>(pooled.sizes[b])));
            DunnPair p;
            p.method_a = scores.groups[a].method;
            p.method_b = scores.groups[b].method;
            p.z = (pooled.mean_rank[a] - pooled.mean_rank[b]) / se;
            p.p_raw = std::min(1.0, 2.0 * normal_sf(std::fabs(p.z)));
            raw.push_back(p.p_raw);
            r.pairs.push_back(std::move(p));
        }
    const auto adj = adjust_pvalues(raw, adjustment);
    for (std::size_t i = 0; i < adj.size(); ++i)
        r.pairs[i].p_adjusted = adj[i];
    return r;
}

} // namespace voxmetrics::stats
