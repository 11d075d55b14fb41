#include <gtest/gtest.h>

#include <random>

#include "dnacnn/metrics.hpp"
#include "oracles.hpp"

using namespace dnacnn;

TEST(Accuracy, ThresholdIsStrict) {
    const std::vector<double> s{0.5, 0.51, 0.2, 0.9};
    EXPECT_DOUBLE_EQ(accuracy(s, std::vector<int>{0, 1, 0, 0}), 0.75);
    EXPECT_DOUBLE_EQ(accuracy(s, std::vector<int>{1, 1, 0, 1}), 0.75);
    EXPECT_THROW(accuracy(std::vector<double>{}, std::vector<int>{}), ValidationError);
    EXPECT_THROW(accuracy(s, std::vector<int>{0, 1}), DimensionError);
}

TEST(Auroc, TextbookExample) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(*auroc(s, y), 0.75);
    EXPECT_NEAR(*auprc(s, y), 0.8333333333333333, 1e-12);
}

TEST(Auprc, SinglePositiveRankedSecond) {
    EXPECT_DOUBLE_EQ(*auprc(std::vector<double>{0.9, 0.8}, std::vector<int>{0, 1}), 0.5);
}

TEST(Auroc, PerfectReversedAndTied) {
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(*auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
    EXPECT_DOUBLE_EQ(*auroc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y), 0.0);
    EXPECT_DOUBLE_EQ(*auroc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y), 0.5);
    EXPECT_DOUBLE_EQ(*auprc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y), 0.5);
}

TEST(Auroc, UndefinedWithOneClass) {
    EXPECT_FALSE(auroc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}).has_value());
    EXPECT_FALSE(auroc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 0}).has_value());
    EXPECT_FALSE(auprc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 0}).has_value());
    EXPECT_DOUBLE_EQ(*auprc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}), 1.0);
}

TEST(Auroc, LabelFlipSymmetry) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(40);
        std::vector<int> y(40), flipped(40);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = static_cast<double>(gen() % 10) / 10.0;
            y[i] = static_cast<int>(gen() % 2);
            flipped[i] = 1 - y[i];
        }
        y[0] = 0;
        y[1] = 1;
        flipped[0] = 1;
        flipped[1] = 0;
        EXPECT_NEAR(*auroc(s, y) + *auroc(s, flipped), 1.0, 1e-12);
    }
}

TEST(Metrics, AgreeWithBruteForceOraclesOnRandomTies) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + gen() % 60;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(gen() % 8) / 8.0;  // coarse grid forces ties
            y[i] = static_cast<int>(gen() % 2);
        }
        y[0] = 1;
        y[1] = 0;
        EXPECT_NEAR(*auroc(s, y), oracle::brute_auroc(s, y), 1e-12);
        EXPECT_NEAR(*auprc(s, y), oracle::exhaustive_ap(s, y), 1e-12);
    }
}
