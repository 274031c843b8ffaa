#include "wattless/stats.hpp"

#include "wattless/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wattless::stats {

namespace {

/// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) {
            break;
        }
    }
    return h;
}

} // namespace

double mean(const std::vector<double>& x)
{
    if (x.empty()) {
        return 0;
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(const std::vector<double>& x)
{
    if (x.size() < 2) {
        return 0;
    }
    const double m = mean(x);
    double ss = 0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double lower_median(std::vector<double> x)
{
    if (x.empty()) {
        return 0;
    }
    std::sort(x.begin(), x.end());
    return x[(x.size() - 1) / 2];
}

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0) || !(b > 0)) {
        throw Error("incomplete_beta requires a, b > 0");
    }
    if (x <= 0) {
        return 0;
    }
    if (x >= 1) {
        return 1;
    }
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // the fraction converges fast below the mean of the distribution
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df)
{
    if (std::isinf(t)) {
        return 0;
    }
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df)
{
    const double tail = 0.5 * student_t_two_sided(t, df);
    return t >= 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df)
{
    if (!(p > 0 && p < 1)) {
        throw Error("quantile probability must lie in (0, 1)");
    }
    if (p < 0.5) {
        return -student_t_quantile(1.0 - p, df);
    }
    double lo = 0;
    double hi = 1;
    while (student_t_cdf(hi, df) < p) {
        hi *= 2;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

WelchResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() < 2 || y.size() < 2) {
        throw Error("welch_t_test needs at least two values per sample");
    }
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double mx = mean(x);
    const double my = mean(y);
    const double vx = std::pow(sample_sd(x), 2) / nx;
    const double vy = std::pow(sample_sd(y), 2) / ny;
    WelchResult r;
    if (vx + vy == 0) {
        r.df = nx + ny - 2;
        if (mx == my) {
            return r;
        }
        r.t = mx > my ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_two_sided = 0;
        r.degenerate = true;
        return r;
    }
    r.t = (mx - my) / std::sqrt(vx + vy);
    r.df = (vx + vy) * (vx + vy) / (vx * vx / (nx - 1) + vy * vy / (ny - 1));
    r.p_two_sided = student_t_two_sided(r.t, r.df);
    return r;
}

} // namespace wattless::stats
