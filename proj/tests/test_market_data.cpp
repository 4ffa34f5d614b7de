#include "lstmtrade/errors.hpp"
#include "lstmtrade/market_data.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lstmtrade;
using testutil::TempDir;

namespace {

const char* kHeader = "Date,Open,High,Low,Close,Adj Close,Volume\n";

}  // namespace

TEST(Date, ParseAndFormat) {
    auto d = Date::parse("2010-01-04");
    ASSERT_TRUE(d);
    EXPECT_EQ(d->to_string(), "2010-01-04");
    EXPECT_EQ(*d, Date::from_ymd(2010, 1, 4));
    EXPECT_FALSE(Date::parse("2010-1-4"));
    EXPECT_FALSE(Date::parse("2010-02-30"));
    EXPECT_FALSE(Date::parse("01/04/2010"));
    EXPECT_LT(Date::from_ymd(2009, 12, 31), Date::from_ymd(2010, 1, 1));
}

TEST(ParseCsv, ReadsAnchorRow) {
    const std::string text = std::string(kHeader) + "2010-01-04,1116.56,1133.87,1116.56,1132.99,1132.99,3991400000\n";
    const auto s = parse_csv_text(text);
    ASSERT_EQ(s.size(), 1u);
    const auto& b = s.bars[0];
    EXPECT_EQ(b.date, Date::from_ymd(2010, 1, 4));
    EXPECT_DOUBLE_EQ(b.open, 1116.56);
    EXPECT_DOUBLE_EQ(b.high, 1133.87);
    EXPECT_DOUBLE_EQ(b.low, 1116.56);
    EXPECT_DOUBLE_EQ(b.close, 1132.99);
    EXPECT_DOUBLE_EQ(b.adj_close, 1132.99);
    EXPECT_EQ(b.volume, 3991400000);
    EXPECT_FALSE(s.adj_close_from_close);
}

TEST(ParseCsv, EmptyInputHasNoDataRows) {
    try {
        parse_csv_text("");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("no data rows"), std::string::npos);
    }
    EXPECT_THROW(parse_csv_text(kHeader), DataError);
}

TEST(ParseCsv, DuplicateDateIsRejected) {
    const std::string text = std::string(kHeader) + "2010-01-04,1,2,1,1.5,1.5,1\n2010-01-04,1,2,1,1.5,1.5,1\n";
    try {
        parse_csv_text(text);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate date"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(ParseCsv, NonMonotoneDatesAreRejected) {
    const std::string text = std::string(kHeader) + "2010-01-05,1,2,1,1.5,1.5,1\n2010-01-04,1,2,1,1.5,1.5,1\n";
    EXPECT_THROW(parse_csv_text(text), DataError);
}

TEST(ParseCsv, UnparseableRowReportsLine) {
    const std::string text = std::string(kHeader) + "2010-01-04,1,2,1,1.5,1.5,1\n2010-01-05,1,abc,1,1.5,1.5,1\n";
    try {
        parse_csv_text(text, {}, "f.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
    }
}

TEST(ParseCsv, MissingPriceRowsAreRejectedAndCounted) {
    const std::string text = std::string(kHeader) + "2010-01-04,1,2,1,1.5,1.5,1\n2010-01-05,null,2,1,1.5,1.5,1\n" +
                             "2010-01-06,1,2,1,,1.5,1\n2010-01-07,1,2,1,1.5,1.5,1\n";
    const auto s = parse_csv_text(text);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_EQ(s.rejected_lines, (std::vector<std::size_t>{3, 4}));
}

TEST(ParseCsv, InconsistentRangeIsRejected) {
    const std::string text = std::string(kHeader) + "2010-01-04,1,1.2,1.1,1.5,1.5,1\n";
    EXPECT_THROW(parse_csv_text(text), DataError);
}

TEST(ParseCsv, MissingAdjCloseFallsBackToClose) {
    const auto s = parse_csv_text("Date,Open,High,Low,Close,Volume\n2010-01-04,1,2,1,1.5,7\n");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_TRUE(s.adj_close_from_close);
    EXPECT_DOUBLE_EQ(s.bars[0].adj_close, 1.5);
}

TEST(ParseCsv, SchemaMappingIsOverridable) {
    CsvSchema schema;
    schema.date = "day";
    schema.adj_close = "adj";
    const auto s = parse_csv_text("day,Open,High,Low,Close,adj,Volume\n2010-01-04,1,2,1,1.5,1.4,7\n", schema);
    EXPECT_DOUBLE_EQ(s.bars[0].adj_close, 1.4);
}

TEST(ParseCsv, MissingFileIsDataError) {
    EXPECT_THROW(parse_csv("/nonexistent/prices.csv"), Error);
}

TEST(ParseCsv, RoundTripIsIdentity) {
    const auto s = testutil::random_walk(Date::from_ymd(2010, 1, 1), Date::from_ymd(2010, 6, 30), 5);
    const auto again = parse_csv_text(to_csv(s));
    ASSERT_EQ(again.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(again.bars[i].date, s.bars[i].date);
        EXPECT_EQ(again.bars[i].open, s.bars[i].open);
        EXPECT_EQ(again.bars[i].high, s.bars[i].high);
        EXPECT_EQ(again.bars[i].low, s.bars[i].low);
        EXPECT_EQ(again.bars[i].close, s.bars[i].close);
        EXPECT_EQ(again.bars[i].adj_close, s.bars[i].adj_close);
        EXPECT_EQ(again.bars[i].volume, s.bars[i].volume);
    }
    EXPECT_EQ(to_csv(again), to_csv(s));

    TempDir dir;
    write_csv(s, dir / "s.csv");
    EXPECT_EQ(to_csv(parse_csv(dir / "s.csv")), to_csv(s));
}

TEST(BuildFeatures, TwoBarsGiveOneVector) {
    const auto s = parse_csv_text(std::string(kHeader) + "2010-01-04,10,12,9,11,10.5,1\n2010-01-05,11,13,10,12,11.5,1\n");
    const auto f = build_features(s);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_DOUBLE_EQ(f.x[0][5], 10.5);
}

TEST(BuildFeatures, HandBuiltThreeBarOrdering) {
    const auto s = parse_csv_text(std::string(kHeader) +
                                  "2010-01-04,10,12,9,11,10.5,1\n"
                                  "2010-01-05,11,13,10,12,11.5,1\n"
                                  "2010-01-06,12,15,11,14,13.5,1\n");
    const auto f = build_features(s);
    ASSERT_EQ(f.size(), 2u);
    // [adj_t, open_t, low_t, high_t, close_t, adj_{t-1}]
    const FeatureVector a{11.5, 11, 10, 13, 12, 10.5};
    const FeatureVector b{13.5, 12, 11, 15, 14, 11.5};
    EXPECT_EQ(f.x[0], a);
    EXPECT_EQ(f.x[1], b);
    EXPECT_EQ(f.dates[0], Date::from_ymd(2010, 1, 5));
    EXPECT_DOUBLE_EQ(f.y(1), 13.5);
}

TEST(BuildFeatures, LengthArithmetic) {
    std::vector<double> prices(100, 50.0);
    const auto f = build_features(testutil::from_prices(prices));
    EXPECT_EQ(f.size(), 99u);
    for (const auto& row : f.x) {
        for (double v : row) EXPECT_GT(v, 0.0);
    }
}

TEST(BuildFeatures, NeedsTwoBars) {
    EXPECT_THROW(build_features(testutil::from_prices({1.0})), DataError);
}

TEST(MakeWindow, TrainExample) {
    std::vector<double> prices;
    for (int i = 0; i < 40; ++i) prices.push_back(100.0 + i);
    const auto f = build_features(testutil::from_prices(prices));
    const auto w = make_window(f, 30, 22, WindowMode::train);
    EXPECT_EQ(w.first_row, 8u);
    ASSERT_EQ(w.inputs.rows(), 22);
    ASSERT_EQ(w.targets.size(), 22);
    for (int k = 0; k < 22; ++k) {
        EXPECT_EQ(w.inputs(k, 0), f.y(8 + static_cast<std::size_t>(k)));
        EXPECT_EQ(w.targets(k), f.y(9 + static_cast<std::size_t>(k)));
    }
}

TEST(MakeWindow, TrainBoundary) {
    const auto f = build_features(testutil::from_prices(std::vector<double>(20, 10.0)));
    EXPECT_THROW(make_window(f, 4, 5, WindowMode::train), DataError);
    EXPECT_NO_THROW(make_window(f, 5, 5, WindowMode::train));
}

TEST(MakeWindow, PredictExample) {
    const auto f = build_features(testutil::from_prices(std::vector<double>(30, 10.0)));
    const auto w = make_window(f, 11, 11, WindowMode::predict);
    EXPECT_EQ(w.first_row, 1u);
    EXPECT_EQ(w.inputs.rows(), 11);
    EXPECT_EQ(w.targets.size(), 0);
    EXPECT_THROW(make_window(f, 9, 11, WindowMode::predict), DataError);
}

TEST(MakeWindow, PredictIndexArithmeticByEnumeration) {
    std::vector<double> prices;
    for (int i = 0; i < 60; ++i) prices.push_back(10.0 + i);
    const auto f = build_features(testutil::from_prices(prices));
    for (std::size_t T = 1; T <= 20; ++T) {
        for (std::size_t t = 0; t < f.size(); ++t) {
            if (t + 1 < T) {
                EXPECT_THROW(make_window(f, t, T, WindowMode::predict), DataError);
                continue;
            }
            const auto w = make_window(f, t, T, WindowMode::predict);
            // Brute force: the rows are exactly the T most recent rows ending at t.
            std::vector<std::size_t> expected;
            for (std::size_t r = 0; r <= t; ++r) {
                if (t - r < T) expected.push_back(r);
            }
            ASSERT_EQ(expected.size(), T);
            for (std::size_t k = 0; k < T; ++k) {
                EXPECT_EQ(w.inputs(static_cast<Eigen::Index>(k), 0), f.y(expected[k]));
            }
        }
    }
}

TEST(MakeWindow, ShiftByOneAlignmentProperty) {
    const auto s = testutil::random_walk(Date::from_ymd(2010, 1, 1), Date::from_ymd(2011, 1, 1), 11);
    const auto f = build_features(s);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 1 + rng() % 44;
        const std::size_t t = T + rng() % (f.size() - T);
        const auto w = make_window(f, t, T, WindowMode::train);
        for (std::size_t k = 0; k < T; ++k) {
            const auto row = w.first_row + k;
            // Target k is the adjusted close of the day after input row k.
            EXPECT_EQ(w.targets(static_cast<Eigen::Index>(k)), s.bars[row + 2].adj_close);
            EXPECT_EQ(w.inputs(static_cast<Eigen::Index>(k), 0), s.bars[row + 1].adj_close);
        }
    }
}

TEST(PeriodSplit, Validation) {
    PeriodSplit ok{{Date::from_ymd(2005, 1, 1), Date::from_ymd(2007, 12, 31)},
                   {Date::from_ymd(2008, 1, 1), Date::from_ymd(2009, 12, 31)},
                   {Date::from_ymd(2010, 1, 4), Date::from_ymd(2018, 5, 1)}};
    EXPECT_NO_THROW(ok.validate());
    auto overlap = ok;
    overlap.hyper_select.first = Date::from_ymd(2007, 6, 1);
    EXPECT_THROW(overlap.validate(), ConfigError);
    auto reversed = ok;
    reversed.out_of_sample = {Date::from_ymd(2018, 5, 1), Date::from_ymd(2010, 1, 4)};
    EXPECT_THROW(reversed.validate(), ConfigError);
}

TEST(IndexRange, HalfOpenSelection) {
    const auto s = testutil::from_prices(std::vector<double>(10, 1.0), Date::from_ymd(2010, 1, 4));
    const auto dates = dates_of(s);
    auto [b, e] = index_range(dates, {Date::from_ymd(2010, 1, 5), Date::from_ymd(2010, 1, 9)});
    EXPECT_EQ(b, 1u);
    EXPECT_EQ(e, 5u);  // Jan 5, 6, 7, 8
}
