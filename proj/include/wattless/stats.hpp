#pragma once

#include <cstddef>
#include <vector>

namespace wattless::stats {

double mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sample_sd(const std::vector<double>& x);
/// Element at index (n - 1) / 2 of the sorted values; 0 when empty.
double lower_median(std::vector<double> x);

/// Regularized incomplete beta I_x(a, b) by continued fraction, a, b > 0.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided(double t, double df);
/// Inverse of student_t_cdf for 0 < p < 1.
double student_t_quantile(double p, double df);

struct WelchResult {
    double t = 0;
    double df = 0;
    double p_two_sided = 1;
    /// Both samples have zero variance and different means; p is 0 by convention.
    bool degenerate = false;
};

/// Throws Error when either sample has fewer than two values.
WelchResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y);

} // namespace wattless::stats
