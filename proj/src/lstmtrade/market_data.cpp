#include "lstmtrade/market_data.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>

namespace lstmtrade {

namespace {

bool is_missing(std::string_view field) {
    return field.empty() || field == "null" || field == "NULL" || field == "NaN" || field == "nan" ||
           field == "NA";
}

DataError row_error(const std::string& source, std::size_t line, const std::string& what) {
    return DataError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date");
    }
    return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

std::optional<Date> Date::parse(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4);
    auto m = digits(5, 2);
    auto d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                       std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

std::string Date::to_string() const {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{serial_}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<std::size_t> PriceSeries::index_of(Date date) const {
    auto it = std::lower_bound(bars.begin(), bars.end(), date,
                               [](const Bar& b, Date d) { return b.date < d; });
    if (it == bars.end() || it->date != date) return std::nullopt;
    return static_cast<std::size_t>(it - bars.begin());
}

std::optional<std::size_t> FeatureSeries::index_of(Date date) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), date);
    if (it == dates.end() || *it != date) return std::nullopt;
    return static_cast<std::size_t>(it - dates.begin());
}

PriceSeries parse_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    auto series = parse_csv_text(read_file(path), schema, path.string());
    series.name = path.stem().string();
    return series;
}

PriceSeries parse_csv_text(std::string_view text, const CsvSchema& schema, std::string source) {
    PriceSeries series;
    series.name = source;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& out) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        out = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    bool have_header = false;
    while (next_line(line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        have_header = true;
        break;
    }
    if (!have_header) {
        throw DataError(source + ": no data rows");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.remove_prefix(3);  // UTF-8 BOM
    }

    std::map<std::string, std::size_t, std::less<>> columns;
    {
        auto header = split_csv_line(line);
        for (std::size_t i = 0; i < header.size(); ++i) {
            columns.emplace(std::string(header[i]), i);
        }
    }
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        auto it = columns.find(name);
        if (it == columns.end()) {
            if (required) throw DataError(source + ": missing column '" + name + "'");
            return std::nullopt;
        }
        return it->second;
    };
    const auto c_date = *column(schema.date, true);
    const auto c_open = *column(schema.open, true);
    const auto c_high = *column(schema.high, true);
    const auto c_low = *column(schema.low, true);
    const auto c_close = *column(schema.close, true);
    const auto c_adj = column(schema.adj_close, false);
    const auto c_volume = column(schema.volume, false);
    series.adj_close_from_close = !c_adj.has_value();

    while (next_line(line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != columns.size()) {
            throw row_error(source, line_no,
                            "expected " + std::to_string(columns.size()) + " fields, got " +
                                std::to_string(fields.size()));
        }
        auto date = Date::parse(fields[c_date]);
        if (!date) {
            throw row_error(source, line_no, "unparseable date '" + std::string(fields[c_date]) + "'");
        }
        std::array<std::size_t, 5> price_cols{c_open, c_high, c_low, c_close, c_adj.value_or(c_close)};
        bool missing = std::any_of(price_cols.begin(), price_cols.end(),
                                   [&](std::size_t c) { return is_missing(fields[c]); });
        if (missing) {
            series.rejected_lines.push_back(line_no);
            continue;
        }
        std::array<double, 5> px{};
        for (std::size_t k = 0; k < price_cols.size(); ++k) {
            auto v = parse_double(fields[price_cols[k]]);
            if (!v) {
                throw row_error(source, line_no,
                                "unparseable price '" + std::string(fields[price_cols[k]]) + "'");
            }
            if (*v <= 0.0) {
                throw row_error(source, line_no, "non-positive price");
            }
            px[k] = *v;
        }
        Bar bar{*date, px[0], px[1], px[2], px[3], px[4], 0};
        if (c_volume && !is_missing(fields[*c_volume])) {
            auto vol = parse_int(fields[*c_volume]);
            if (!vol || *vol < 0) {
                throw row_error(source, line_no, "unparseable volume '" + std::string(fields[*c_volume]) + "'");
            }
            bar.volume = *vol;
        }
        if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close)) {
            throw row_error(source, line_no, "low/high range does not contain open and close");
        }
        if (!series.bars.empty()) {
            const Date prev = series.bars.back().date;
            if (bar.date == prev) {
                throw row_error(source, line_no, "duplicate date " + bar.date.to_string());
            }
            if (bar.date < prev) {
                throw row_error(source, line_no, "dates not increasing at " + bar.date.to_string());
            }
        }
        series.bars.push_back(bar);
    }
    if (series.bars.empty()) {
        throw DataError(source + ": no data rows");
    }
    return series;
}

std::string to_csv(const PriceSeries& series) {
    std::string out = "Date,Open,High,Low,Close,Adj Close,Volume\n";
    for (const auto& b : series.bars) {
        out += b.date.to_string();
        for (double v : {b.open, b.high, b.low, b.close, b.adj_close}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += std::to_string(b.volume);
        out += '\n';
    }
    return out;
}

void write_csv(const PriceSeries& series, const std::filesystem::path& path) {
    write_file_atomic(path, to_csv(series));
}

FeatureSeries build_features(const PriceSeries& series) {
    if (series.size() < 2) {
        throw DataError("feature construction needs at least 2 bars");
    }
    FeatureSeries out;
    out.dates.reserve(series.size() - 1);
    out.x.reserve(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) {
        const Bar& b = series.bars[t];
        out.dates.push_back(b.date);
        out.x.push_back({b.adj_close, b.open, b.low, b.high, b.close, series.bars[t - 1].adj_close});
    }
    return out;
}

WindowSample make_window(const FeatureSeries& features, std::size_t t, std::size_t window,
                         WindowMode mode) {
    if (window == 0) {
        throw ConfigError("window length must be positive");
    }
    if (t >= features.size()) {
        throw DataError("window end " + std::to_string(t) + " beyond series of length " +
                        std::to_string(features.size()));
    }
    const bool train = mode == WindowMode::train;
    // Train windows end one row before t; predict windows end at t.
    const std::size_t needed = train ? window : window - 1;
    if (t < needed) {
        throw DataError("insufficient history: window of " + std::to_string(window) + " ending at " +
                        std::to_string(t) + " needs row " +
                        std::to_string(static_cast<long long>(t) - static_cast<long long>(needed)));
    }
    WindowSample sample;
    sample.first_row = t - needed;
    sample.inputs.resize(static_cast<Eigen::Index>(window), static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t k = 0; k < window; ++k) {
        const auto& row = features.x[sample.first_row + k];
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            sample.inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    if (train) {
        sample.targets.resize(static_cast<Eigen::Index>(window));
        for (std::size_t k = 0; k < window; ++k) {
            sample.targets(static_cast<Eigen::Index>(k)) = features.y(sample.first_row + k + 1);
        }
    }
    return sample;
}

void PeriodSplit::validate() const {
    for (const auto* r : {&policy_build, &hyper_select, &out_of_sample}) {
        if (r->last < r->first) {
            throw ConfigError("period range ends before it starts: " + r->first.to_string() + " .. " +
                              r->last.to_string());
        }
    }
    if (!(policy_build.last < hyper_select.first) || !(hyper_select.last < out_of_sample.first)) {
        throw ConfigError("periods must be disjoint and chronological");
    }
}

std::pair<std::size_t, std::size_t> index_range(const std::vector<Date>& dates, const DateRange& range) {
    auto begin = std::lower_bound(dates.begin(), dates.end(), range.first);
    auto end = std::upper_bound(dates.begin(), dates.end(), range.last);
    if (end < begin) end = begin;
    return {static_cast<std::size_t>(begin - dates.begin()), static_cast<std::size_t>(end - dates.begin())};
}

std::vector<Date> dates_of(const PriceSeries& series) {
    std::vector<Date> out;
    out.reserve(series.size());
    for (const auto& b : series.bars) out.push_back(b.date);
    return out;
}

}  // namespace lstmtrade
