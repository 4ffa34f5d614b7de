#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lstmtrade {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;

    static Date from_ymd(int year, unsigned month, unsigned day);
    static constexpr Date from_serial(std::int32_t days) { return Date(days); }
    /// Accepts exactly `YYYY-MM-DD`.
    static std::optional<Date> parse(std::string_view text);

    std::string to_string() const;
    std::int32_t serial() const { return serial_; }

    friend constexpr auto operator<=>(Date, Date) = default;

private:
    explicit constexpr Date(std::int32_t serial) : serial_(serial) {}
    std::int32_t serial_ = 0;
};

struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double adj_close = 0.0;
    std::int64_t volume = 0;
};

struct PriceSeries {
    std::string name;
    std::vector<Bar> bars;
    /// Set when the source had no adjusted-close column and Close was used instead.
    bool adj_close_from_close = false;
    /// Rows skipped because a price field was empty or "null".
    std::vector<std::size_t> rejected_lines;

    std::size_t size() const { return bars.size(); }
    bool empty() const { return bars.empty(); }
    std::optional<std::size_t> index_of(Date date) const;
};

/// Header names for each column; the defaults match the usual Yahoo export.
struct CsvSchema {
    std::string date = "Date";
    std::string open = "Open";
    std::string high = "High";
    std::string low = "Low";
    std::string close = "Close";
    std::string adj_close = "Adj Close";
    std::string volume = "Volume";
};

PriceSeries parse_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
PriceSeries parse_csv_text(std::string_view text, const CsvSchema& schema = {},
                           std::string source = "<memory>");
std::string to_csv(const PriceSeries& series);
void write_csv(const PriceSeries& series, const std::filesystem::path& path);

inline constexpr std::size_t kFeatureCount = 6;

/// [adj_close_t, open_t, low_t, high_t, close_t, adj_close_{t-1}]
using FeatureVector = std::array<double, kFeatureCount>;

/// Feature row k belongs to bar k + 1 of the source series; y(k) is its adjusted close.
struct FeatureSeries {
    std::vector<Date> dates;
    std::vector<FeatureVector> x;

    std::size_t size() const { return x.size(); }
    double y(std::size_t k) const { return x[k][0]; }
    std::optional<std::size_t> index_of(Date date) const;
};

FeatureSeries build_features(const PriceSeries& series);

enum class WindowMode { train, predict };

struct WindowSample {
    Eigen::MatrixXd inputs;   // T x 6, oldest row first
    Eigen::VectorXd targets;  // length T in train mode, empty in predict mode
    std::size_t first_row = 0;
};

/// Train: rows t-T .. t-1 with targets y(t-T+1) .. y(t). Predict: rows t-T+1 .. t.
WindowSample make_window(const FeatureSeries& features, std::size_t t, std::size_t window,
                         WindowMode mode);

struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const { return first <= d && d <= last; }
};

struct PeriodSplit {
    DateRange policy_build;
    DateRange hyper_select;
    DateRange out_of_sample;

    /// Throws ConfigError unless the ranges are ordered, non-empty and disjoint.
    void validate() const;
};

/// Half-open index range [begin, end) of the sorted dates that fall inside `range`.
std::pair<std::size_t, std::size_t> index_range(const std::vector<Date>& dates,
                                                const DateRange& range);

std::vector<Date> dates_of(const PriceSeries& series);

}  // namespace lstmtrade
