#include "lstmtrade/predictor.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <algorithm>

namespace lstmtrade {

namespace {

constexpr std::uint64_t kInitSalt = 0x1f2e3d4c5b6a7988ULL;

std::uint64_t day_salt(Date d) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(d.serial())); }

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

PredictionRecord make_record(Date date, double y_t, std::optional<double> y_hat_next, std::optional<double> y_next) {
    PredictionRecord r;
    r.date = date;
    r.y_t = y_t;
    r.y_hat_next = y_hat_next;
    r.y_next = y_next;
    if (y_hat_next) r.r_hat = *y_hat_next / y_t - 1.0;
    return r;
}

RollingResult rolling_predict(const FeatureSeries& features, const NetworkConfig& config, const DateRange& range,
                              const std::optional<NetworkParams>& params_in, const ProgressFn& progress) {
    config.validate();
    const auto window = static_cast<std::size_t>(config.window);
    auto [begin, end] = index_range(features.dates, range);
    if (begin >= end) {
        throw DataError("no trading days in " + range.first.to_string() + " .. " + range.last.to_string());
    }
    if (begin < window) {
        throw DataError("insufficient history: " + range.first.to_string() + " needs " + std::to_string(window) +
                        " earlier feature rows, have " + std::to_string(begin));
    }

    RollingResult result;
    if (params_in) {
        NetworkParams expected = NetworkParams::zeros(config);
        if (!expected.same_shape(*params_in)) {
            throw ConfigError("initial parameters do not match the network configuration");
        }
        result.params = *params_in;
    } else {
        result.params = init_glorot(config, mix_seed(config.seed, kInitSalt));
    }
    result.records.reserve(end - begin);

    for (std::size_t t = begin; t < end; ++t) {
        const Date date = features.dates[t];
        const double y_t = features.y(t);
        const std::optional<double> y_next =
            t + 1 < features.size() ? std::optional<double>(features.y(t + 1)) : std::nullopt;

        auto train = make_window(features, t, window, WindowMode::train);
        auto pred = make_window(features, t, window, WindowMode::predict);
        double train_scale = 1.0;
        double pred_scale = 1.0;
        if (config.normalize) {
            train_scale = train.inputs(train.inputs.rows() - 1, 0);
            pred_scale = pred.inputs(pred.inputs.rows() - 1, 0);
            train.inputs /= train_scale;
            train.targets /= train_scale;
            pred.inputs /= pred_scale;
        }

        NetworkParams day_params = config.warm_start
                                       ? result.params
                                       : init_glorot(config, mix_seed(config.seed ^ kInitSalt, day_salt(date)));
        std::optional<double> y_hat;
        try {
            train_on_window(day_params, train.inputs, train.targets, config, mix_seed(config.seed, day_salt(date)));
            const auto out = forward(day_params, pred.inputs);
            const double value = out.outputs(out.outputs.size() - 1) * pred_scale;
            if (!std::isfinite(value) || value <= 0.0) {
                throw NumericError("non-positive price prediction");
            }
            y_hat = value;
            result.params = std::move(day_params);
        } catch (const NumericError& e) {
            result.warnings.push_back(date.to_string() + ": " + e.what() + "; day skipped");
        }
        result.records.push_back(make_record(date, y_t, y_hat, y_next));
        if (progress) progress(t - begin + 1, end - begin);
    }
    return result;
}

RollingResult rolling_predict(const PriceSeries& series, const NetworkConfig& config, const DateRange& range,
                              const std::optional<NetworkParams>& params_in, const ProgressFn& progress) {
    return rolling_predict(build_features(series), config, range, params_in, progress);
}

std::vector<PredictionRecord> naive_persistence(const PriceSeries& series, const DateRange& range) {
    auto [begin, end] = index_range(dates_of(series), range);
    std::vector<PredictionRecord> out;
    out.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) {
        const double y = series.bars[t].adj_close;
        std::optional<double> next;
        if (t + 1 < series.size()) next = series.bars[t + 1].adj_close;
        auto rec = make_record(series.bars[t].date, y, y, next);
        rec.r_hat = 0.0;
        out.push_back(rec);
    }
    return out;
}

std::string predictions_to_csv(const std::vector<PredictionRecord>& records, const std::string& preamble) {
    std::string out = preamble;
    out += "date,y_t,y_hat_next,y_next,r_hat\n";
    for (const auto& r : records) {
        out += r.date.to_string();
        out += ',';
        out += format_double(r.y_t);
        out += ',';
        out += opt_field(r.y_hat_next);
        out += ',';
        out += opt_field(r.y_next);
        out += ',';
        out += opt_field(r.r_hat);
        out += '\n';
    }
    return out;
}

std::vector<PredictionRecord> predictions_from_csv(std::string_view text, const std::string& source) {
    std::vector<PredictionRecord> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != "date,y_t,y_hat_next,y_next,r_hat") {
                throw DataError(source + ":" + std::to_string(line_no) + ": unexpected prediction header");
            }
            header_seen = true;
            continue;
        }
        auto f = split_csv_line(line);
        auto fail = [&](const std::string& what) {
            return DataError(source + ":" + std::to_string(line_no) + ": " + what);
        };
        if (f.size() != 5) throw fail("expected 5 fields");
        auto date = Date::parse(f[0]);
        auto y = parse_double(f[1]);
        if (!date || !y) throw fail("bad date or price");
        auto opt = [&](std::string_view s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            auto v = parse_double(s);
            if (!v) throw fail("bad number '" + std::string(s) + "'");
            return v;
        };
        PredictionRecord r;
        r.date = *date;
        r.y_t = *y;
        r.y_hat_next = opt(f[2]);
        r.y_next = opt(f[3]);
        r.r_hat = opt(f[4]);
        if (!out.empty() && !(out.back().date < r.date)) throw fail("dates not increasing");
        out.push_back(r);
    }
    if (!header_seen) throw DataError(source + ": empty prediction file");
    return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    return predictions_from_csv(read_file(path), path.string());
}

std::vector<PredictionRecord> slice(const std::vector<PredictionRecord>& records, const DateRange& range) {
    std::vector<PredictionRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const PredictionRecord& r) { return range.contains(r.date); });
    return out;
}

}  // namespace lstmtrade
