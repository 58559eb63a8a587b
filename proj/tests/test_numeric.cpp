#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace tickwarp;

TEST(Numeric, IntegratesSmoothFunctions) {
    EXPECT_NEAR(numeric::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-13);
    EXPECT_NEAR(numeric::integrate([](double x) { return 1.0 / x; }, 1.0, 1e4), std::log(1e4), 1e-11);
    EXPECT_EQ(numeric::integrate([](double) { return 1.0; }, 3.0, 3.0), 0.0);
}

TEST(Numeric, FindsBracketedRoot) {
    const double r = numeric::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-15);
    EXPECT_NEAR(r, std::numbers::sqrt2, 1e-14);
    EXPECT_THROW(numeric::find_root([](double x) { return x * x + 1.0; }, 0.0, 2.0, 1e-12), Error);
}

TEST(Numeric, GridsIncludeEndpoints) {
    const auto lg = numeric::log_grid(1.0, 1000.0, 4);
    ASSERT_EQ(lg.size(), 4u);
    EXPECT_EQ(lg.front(), 1.0);
    EXPECT_EQ(lg.back(), 1000.0);
    EXPECT_NEAR(lg[1], 10.0, 1e-12);
    const auto ln = numeric::linear_grid(0.0, 1.0, 5);
    EXPECT_EQ(ln[2], 0.5);
    EXPECT_EQ(ln.back(), 1.0);
}

TEST(Numeric, ExactDecimalRoundTrips) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, i % 40 - 20);
        EXPECT_EQ(numeric::parse_double(numeric::exact_decimal(x)), x);
        EXPECT_EQ(numeric::parse_double(numeric::sig17(x)), x);
    }
    EXPECT_EQ(numeric::exact_decimal(0.1), "0.1");
    EXPECT_EQ(numeric::exact_decimal(25200.0), "25200");
}

TEST(Numeric, ParseDoubleRejectsGarbage) {
    EXPECT_THROW(numeric::parse_double("1.5x"), ParseError);
    EXPECT_THROW(numeric::parse_double(""), ParseError);
    EXPECT_TRUE(std::isnan(numeric::parse_double("nan")));
    try {
        numeric::parse_double("abc", 12);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 12u);
        EXPECT_NE(std::string(e.what()).find("line 12"), std::string::npos);
    }
}

TEST(Numeric, SplitMixIsDeterministicAndMixes) {
    EXPECT_EQ(numeric::splitmix64(42), numeric::splitmix64(42));
    EXPECT_NE(numeric::splitmix64(1), numeric::splitmix64(2));
}

TEST(Numeric, ParallelForVisitsEveryIndexOnce) {
    for (unsigned threads : {1u, 3u, 8u}) {
        numeric::set_thread_count(threads);
        std::vector<std::atomic<int>> hits(1000);
        numeric::parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    numeric::set_thread_count(0);
}

TEST(Numeric, ParallelForRethrowsLowestFailingIndex) {
    numeric::set_thread_count(4);
    try {
        numeric::parallel_for(100, [](std::size_t i) {
            if (i == 17 || i == 80) throw DataError("index " + std::to_string(i));
        });
        FAIL();
    } catch (const DataError& e) {
        EXPECT_STREQ(e.what(), "index 17");
    }
    numeric::set_thread_count(0);
}
