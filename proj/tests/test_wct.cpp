#include <doctest.h>

#include "oracles.hpp"
#include "styler/errors.hpp"
#include "styler/wct.hpp"
#include "test_support.hpp"

using namespace styler;
using styler::oracle::channel_stats;
using styler::oracle::stats_gap;
using styler::testing::correlated_feature;
using styler::testing::random_tensor;
using styler::testing::relative_error;

namespace {

double identity_gap(const Tensor& f)
{
    const auto s = channel_stats(f);
    double m = 0.0;
    for (std::size_t i = 0; i < s.cov.size(); ++i)
        for (std::size_t j = 0; j < s.cov.size(); ++j) m = std::max(m, std::fabs(s.cov[i][j] - (i == j ? 1.0 : 0.0)));
    return m;
}

}  // namespace

TEST_SUITE("whiten")
{
    TEST_CASE("ZCA fixed point: white input is returned unchanged")
    {
        const Tensor white = styler::oracle::zca_whiten(correlated_feature(6, 12, 12, 3), 1e-12);
        CHECK(identity_gap(white) < 1e-5);
        CHECK(styler::testing::max_abs_diff(whiten(white), white) < 1e-4);
    }

    TEST_CASE("seeded 16x8x8 feature whitens to identity covariance")
    {
        const Tensor f = correlated_feature(16, 8, 8, 21);
        const Tensor w = whiten(f);
        CHECK(w.shape() == f.shape());
        CHECK(identity_gap(w) < 1e-3);
        const auto s = channel_stats(w);
        for (double m : s.mean) CHECK(std::fabs(m) < 1e-5);
    }

    TEST_CASE("agrees with an independent eigensolver")
    {
        const Tensor f = correlated_feature(10, 9, 7, 31);
        CHECK(styler::testing::max_abs_diff(whiten(f), styler::oracle::zca_whiten(f, 1e-5)) < 1e-4);
    }

    TEST_CASE("idempotent on full-rank input")
    {
        const Tensor w = whiten(correlated_feature(8, 10, 10, 41));
        CHECK(styler::testing::max_abs_diff(whiten(w), w) < 1e-3);
    }

    TEST_CASE("constant input yields zeros")
    {
        const Tensor w = whiten(Tensor(5, 4, 4, 3.5f));
        CHECK(w.max_abs() == 0.0f);
    }

    TEST_CASE("a single position is rejected")
    {
        CHECK_THROWS_AS(whiten(Tensor(3, 1, 1)), InvalidInput);
    }
}

TEST_SUITE("color")
{
    TEST_CASE("zero input maps every position to the style mean")
    {
        const Tensor style = correlated_feature(4, 6, 6, 5);
        const auto s = channel_stats(style);
        const Tensor out = color(Tensor(4, 3, 5), style);
        CHECK(out.shape() == Shape{4, 3, 5});
        for (int c = 0; c < 4; ++c)
            for (int p = 0; p < 15; ++p) CHECK(out.channel(c)[p] == doctest::Approx(s.mean[c]).epsilon(1e-6));
    }

    TEST_CASE("white input takes on the style covariance")
    {
        const Tensor white = styler::oracle::zca_whiten(correlated_feature(8, 12, 12, 6), 1e-12);
        const Tensor style = correlated_feature(8, 9, 11, 7);
        CHECK(stats_gap(channel_stats(color(white, style)), channel_stats(style)) < 1e-3);
    }

    TEST_CASE("degenerate style gives a constant mean output")
    {
        Tensor style(3, 4, 4);
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 16; ++p) style.channel(c)[p] = 0.25f * (c + 1);
        const Tensor out = color(random_tensor(3, 5, 5, 8), style);
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 25; ++p) CHECK(out.channel(c)[p] == doctest::Approx(0.25 * (c + 1)).epsilon(1e-6));
    }

    TEST_CASE("channel mismatch is invalid input")
    {
        CHECK_THROWS_AS(color(Tensor(3, 4, 4), Tensor(4, 4, 4)), InvalidInput);
        CHECK_THROWS_AS(wct_transform(Tensor(3, 4, 4), Tensor(4, 4, 4)), InvalidInput);
    }
}

TEST_SUITE("wct_transform")
{
    TEST_CASE("self-identity")
    {
        const Tensor f = correlated_feature(16, 10, 10, 9);
        CHECK(relative_error(wct_transform(f, f), f) < 1e-3);
    }

    TEST_CASE("statistics transfer across spatial sizes")
    {
        const Tensor c = correlated_feature(12, 10, 10, 10);
        const Tensor s = correlated_feature(12, 7, 9, 11);
        const Tensor out = wct_transform(c, s);
        CHECK(out.shape() == c.shape());
        CHECK(stats_gap(channel_stats(out), channel_stats(s)) < 1e-3);
    }

    TEST_CASE("content 512x32x32 with style 512x24x24 keeps the content shape")
    {
        const Tensor c = random_tensor(512, 32, 32, 12);
        const Tensor s = random_tensor(512, 24, 24, 13);
        CHECK(wct_transform(c, s).shape() == Shape{512, 32, 32});
    }

    TEST_CASE("constant content maps to the style mean")
    {
        const Tensor s = correlated_feature(4, 6, 6, 14);
        const auto st = channel_stats(s);
        const Tensor out = wct_transform(Tensor(4, 4, 4, 2.0f), s);
        for (int c = 0; c < 4; ++c)
            for (int p = 0; p < 16; ++p) CHECK(out.channel(c)[p] == doctest::Approx(st.mean[c]).epsilon(1e-6));
    }

    TEST_CASE("pure function of its inputs")
    {
        const Tensor c = correlated_feature(6, 8, 8, 15);
        const Tensor s = correlated_feature(6, 8, 8, 16);
        CHECK(wct_transform(c, s) == wct_transform(c, s));
    }
}
