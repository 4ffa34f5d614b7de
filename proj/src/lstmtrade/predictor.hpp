#pragma once

#include "lstmtrade/lstm.hpp"
#include "lstmtrade/market_data.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lstmtrade {

/// One day of a prediction stream. A record without `y_hat_next` is a skipped day.
struct PredictionRecord {
    Date date;
    double y_t = 0.0;
    std::optional<double> y_hat_next;
    std::optional<double> y_next;
    std::optional<double> r_hat;

    bool has_prediction() const { return y_hat_next.has_value(); }
};

PredictionRecord make_record(Date date, double y_t, std::optional<double> y_hat_next,
                             std::optional<double> y_next);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct RollingResult {
    std::vector<PredictionRecord> records;
    NetworkParams params;
    std::vector<std::string> warnings;
};

/// Daily train-then-predict over every feature row whose date lies in `range`.
/// With `config.warm_start` the weights carry from day to day, starting from `params_in`
/// when given; otherwise every day starts from a fresh Glorot draw.
RollingResult rolling_predict(const FeatureSeries& features, const NetworkConfig& config,
                              const DateRange& range,
                              const std::optional<NetworkParams>& params_in = std::nullopt,
                              const ProgressFn& progress = {});

RollingResult rolling_predict(const PriceSeries& series, const NetworkConfig& config,
                              const DateRange& range,
                              const std::optional<NetworkParams>& params_in = std::nullopt,
                              const ProgressFn& progress = {});

/// Predicts that tomorrow's adjusted close equals today's.
std::vector<PredictionRecord> naive_persistence(const PriceSeries& series, const DateRange& range);

std::string predictions_to_csv(const std::vector<PredictionRecord>& records, const std::string& preamble = {});
std::vector<PredictionRecord> predictions_from_csv(std::string_view text, const std::string& source = "<memory>");
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

/// Records restricted to `range`, in order.
std::vector<PredictionRecord> slice(const std::vector<PredictionRecord>& records, const DateRange& range);

}  // namespace lstmtrade
