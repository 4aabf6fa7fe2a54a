#include "mcsim/stats.hpp"

#include <cmath>
#include <limits>

#include "mcsim/errors.hpp"

namespace mcsim {

namespace {

/// Continued fraction for the incomplete beta (modified Lentz evaluation).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw OutOfRangeError("regularized_incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // Use the expansion on the side where it converges fast.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        throw OutOfRangeError("one_way_anova: needs at least two groups");
    std::size_t n_total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw OutOfRangeError("one_way_anova: every group needs at least two values");
        n_total += g.size();
        for (double v : g) grand_sum += v;
    }
    const double grand_mean = grand_sum / static_cast<double>(n_total);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        const double d = mean - grand_mean;
        ss_between += static_cast<double>(g.size()) * d * d;
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }

    AnovaResult r;
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(n_total - groups.size());

    if (ss_within == 0.0) {
        if (ss_between == 0.0)
            throw DegenerateInputError(
                "one_way_anova: all groups constant with equal means (0/0 F ratio)");
        r.f_statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }

    r.f_statistic =
        (ss_between / r.df_between) / (ss_within / r.df_within);
    // Survival function of the F distribution.
    const double d1 = r.df_between, d2 = r.df_within;
    r.p_value =
        regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * r.f_statistic));
    return r;
}

} // namespace mcsim
