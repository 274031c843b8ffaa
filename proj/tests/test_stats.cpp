#include "wattless/stats.hpp"
#include "wattless/util.hpp"

#include "support/welch_reference.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wattless;
using namespace wattless::stats;
using namespace wattless::testing;


TEST(Stats, MeanSdMedian)
{
    EXPECT_EQ(mean({10, 12, 14}), 12);
    EXPECT_EQ(sample_sd({10, 12, 14}), 2);
    EXPECT_EQ(sample_sd({5}), 0);
    EXPECT_EQ(lower_median({4, 1, 3, 2}), 2);
    EXPECT_EQ(lower_median({3, 1, 2}), 2);
    EXPECT_EQ(lower_median({}), 0);
}

TEST(Stats, IncompleteBetaAgainstBoost)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ab(0.05, 60);
    std::uniform_real_distribution<double> xs(0, 1);
    for (int i = 0; i < 2000; ++i) {
        double a = ab(rng);
        double b = ab(rng);
        double x = xs(rng);
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-10) << a << " " << b << " " << x;
    }
    EXPECT_EQ(incomplete_beta(2, 3, 0), 0);
    EXPECT_EQ(incomplete_beta(2, 3, 1), 1);
    EXPECT_THROW(incomplete_beta(0, 1, 0.5), Error);
}

TEST(Stats, TQuantile)
{
    EXPECT_NEAR(student_t_quantile(0.975, 2), 4.302652729696142, 1e-9);
    for (double df : {1.0, 2.5, 4.0, 9.0, 29.0, 200.0}) {
        boost::math::students_t dist(df);
        for (double p : {0.6, 0.9, 0.975, 0.999}) {
            EXPECT_NEAR(student_t_quantile(p, df), boost::math::quantile(dist, p), 1e-9 * std::max(1.0, boost::math::quantile(dist, p)));
            EXPECT_NEAR(student_t_quantile(1 - p, df), -boost::math::quantile(dist, p), 1e-8);
        }
    }
    EXPECT_THROW(student_t_quantile(1, 3), Error);
}

TEST(Welch, KnownPair)
{
    auto r = welch_t_test({1, 2, 3}, {2, 3, 4});
    EXPECT_NEAR(r.t, -1.224744871391589, 1e-12);
    EXPECT_NEAR(r.df, 4.0, 1e-12);
    EXPECT_NEAR(r.p_two_sided, 0.2878641347266908, 1e-10);
    EXPECT_FALSE(r.degenerate);
}

TEST(Welch, IdenticalSamples)
{
    auto r = welch_t_test({1, 2, 3, 4}, {1, 2, 3, 4});
    EXPECT_EQ(r.t, 0);
    EXPECT_NEAR(r.p_two_sided, 1, 1e-12);
}

TEST(Welch, Degenerate)
{
    auto zero = welch_t_test({0, 0}, {0, 0});
    EXPECT_EQ(zero.t, 0);
    EXPECT_EQ(zero.p_two_sided, 1);
    EXPECT_FALSE(zero.degenerate);
    auto apart = welch_t_test({1, 1}, {2, 2, 2});
    EXPECT_EQ(apart.p_two_sided, 0);
    EXPECT_TRUE(apart.degenerate);
    EXPECT_TRUE(std::isinf(apart.t) && apart.t < 0);
    EXPECT_THROW(welch_t_test({1}, {1, 2}), Error);
}

TEST(Welch, MatchesReferenceOnFiftyPairs)
{
    auto pairs = welch_sample_pairs(50);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [x, y] = pairs[i];
        auto got = welch_t_test(x, y);
        auto ref = reference_welch(x, y);
        EXPECT_NEAR(got.t, static_cast<double>(ref.t), 1e-9) << i;
        EXPECT_NEAR(got.df, static_cast<double>(ref.df), 1e-9) << i;
        EXPECT_NEAR(got.p_two_sided, ref.p, 1e-9) << i;
    }
}

TEST(Welch, SwapAntisymmetry)
{
    std::mt19937 rng(9);
    std::normal_distribution<double> d(0, 3);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(2 + rng() % 20);
        std::vector<double> y(2 + rng() % 20);
        for (auto& v : x) {
            v = d(rng);
        }
        for (auto& v : y) {
            v = d(rng) + 1;
        }
        auto a = welch_t_test(x, y);
        auto b = welch_t_test(y, x);
        EXPECT_DOUBLE_EQ(a.t, -b.t);
        EXPECT_DOUBLE_EQ(a.df, b.df);
        EXPECT_NEAR(a.p_two_sided, b.p_two_sided, 1e-15);
        EXPECT_GE(a.p_two_sided, 0);
        EXPECT_LE(a.p_two_sided, 1);
    }
}
