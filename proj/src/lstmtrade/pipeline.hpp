#pragma once

#include "lstmtrade/arima.hpp"
#include "lstmtrade/predictor.hpp"
#include "lstmtrade/run_config.hpp"
#include "lstmtrade/simulator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lstmtrade {

struct PredictionStream {
    std::vector<PredictionRecord> records;
    std::vector<std::string> warnings;
    std::optional<ArimaModel> arima;  // model chosen on the in-sample data
};

/// Predictions for every trading day of `range`. ARIMA orders come from `in_sample`.
PredictionStream make_predictions(PredictorKind kind, const PriceSeries& series, const DateRange& range,
                                  const NetworkConfig& network, const ArimaSettings& arima,
                                  const DateRange& in_sample, const ProgressFn& progress = {});

struct PhaseInputs {
    const PriceSeries& series;
    const PriceSeries* traded = nullptr;
    PolicyConfig policy;
    double capital = 0.0;
    ExecutionTiming timing = ExecutionTiming::next_close;
    double fee_bps = 0.0;
    bool snapshots = false;
};

/// Per-bin sums from replaying `history` with Q fixed from all of its predicted returns
/// and one unit bought in every non-sell bin.
BinStats replay_stats(const PhaseInputs& in, const std::vector<PredictionRecord>& history);

/// The last `steps` predicted returns dated strictly before `before`.
std::vector<double> bootstrap_returns(const std::vector<PredictionRecord>& records, Date before, std::size_t steps);

/// Adaptive backtest over one period with A_max sized from capital and the first fill price.
BacktestResult run_period(const PhaseInputs& in, const std::vector<PredictionRecord>& period, const BinStats& seed,
                          std::vector<double> bootstrap);

struct InSample {
    BinStats seed;          // from the policy-build replay
    BacktestResult hyper;   // adaptive run over the hyper-select period
};

/// `records` must cover the policy-build and hyper-select periods.
InSample run_in_sample(const PhaseInputs& in, const std::vector<PredictionRecord>& records, const PeriodSplit& split);

/// Policy build, hyper-select, then the out-of-sample run seeded from both.
BacktestResult run_out_of_sample(const PhaseInputs& in, const std::vector<PredictionRecord>& records,
                                 const PeriodSplit& split);

/// The first day an order signalled in `period` can be filled.
Date first_fill_date(const std::vector<PredictionRecord>& period, ExecutionTiming timing);

}  // namespace lstmtrade
