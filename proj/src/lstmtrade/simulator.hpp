#pragma once

#include "lstmtrade/market_data.hpp"
#include "lstmtrade/policy.hpp"
#include "lstmtrade/predictor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lstmtrade {

enum class Side { buy, sell };

/// When a signal computed after the close of day t is filled.
enum class ExecutionTiming {
    next_close,  // at the close of the next trading day
    same_close,  // at the close of day t
};

struct TradeEvent {
    Date date;
    Side side = Side::buy;
    std::int64_t units = 0;
    double price = 0.0;
    int bin = 0;                           // entry bin on BUY, 1 on SELL
    std::optional<double> realized_pnl;    // SELL only
    bool capped = false;                   // BUY reduced to what cash allows
    double fee = 0.0;
};

struct PortfolioState {
    double cash = 0.0;
    std::int64_t units = 0;
    std::optional<int> entry_bin;
    double entry_price = 0.0;
    std::optional<Date> entry_date;

    bool holding() const { return units > 0; }
};

struct EquityPoint {
    Date date;
    double equity = 0.0;
};

using EquityCurve = std::vector<EquityPoint>;

struct StepResult {
    PortfolioState state;
    std::optional<TradeEvent> event;
    int bin = 0;
    bool unaffordable = false;  // a BUY was due but not even one unit fits in cash
};

/// One application of the trading rule: sell everything in bin 1, buy A_i units in a
/// positive-allocation bin when flat, otherwise do nothing.
StepResult step(const PortfolioState& state, const AllocationPolicy& policy, double r_hat, double exec_price,
                Date exec_date, double fee_bps = 0.0);

struct BacktestConfig {
    PolicyConfig policy;
    double initial_cash = 0.0;
    ExecutionTiming timing = ExecutionTiming::next_close;
    double fee_bps = 0.0;

    /// When set, Q and A stay fixed for the whole run (up-down reduction, overrides).
    std::optional<AllocationPolicy> fixed_policy;

    /// Predicted returns that seed the cutoff history.
    std::vector<double> bootstrap_returns;
    /// Per-bin sums carried in from earlier history; empty means all zero.
    std::optional<BinStats> seed_stats;

    bool record_snapshots = false;
};

struct BacktestResult {
    std::vector<TradeEvent> trades;
    EquityCurve equity;
    BinStats stats;      // seed plus this run
    BinStats run_stats;  // this run only
    std::vector<CompletedCycle> cycles;
    AllocationPolicy final_policy;
    double realized_profit = 0.0;  // G
    double fees = 0.0;
    std::size_t capped_buys = 0;
    std::size_t skipped_days = 0;  // days without a usable signal
    std::string snapshots_csv;     // filled when record_snapshots is set
    std::vector<std::string> warnings;
};

/// Signals come from `predictions` (aligned with `series`); fills and marks use
/// `traded` when given, else `series`.
BacktestResult run_backtest(const PriceSeries& series, const std::vector<PredictionRecord>& predictions,
                            const BacktestConfig& config, const PriceSeries* traded = nullptr);

/// Buys floor(capital / first price) units on the first day of `range` and holds.
BacktestResult buy_and_hold(const PriceSeries& series, double capital, const DateRange& range);

/// run_backtest under Q = [0], A = [SELL, A_max] with A_max from capital and the first fill price.
BacktestResult up_down_strategy(const PriceSeries& series, const std::vector<PredictionRecord>& predictions,
                                double capital, ExecutionTiming timing = ExecutionTiming::next_close,
                                const PriceSeries* traded = nullptr, double fee_bps = 0.0);

std::string trades_to_csv(const std::vector<TradeEvent>& trades, const std::string& preamble = {});
std::vector<TradeEvent> trades_from_csv(std::string_view text);
std::string equity_to_csv(const EquityCurve& equity, const std::string& preamble = {});
EquityCurve equity_from_csv(std::string_view text, const std::string& source = "<memory>");

const char* to_string(Side side);
const char* to_string(ExecutionTiming timing);
std::optional<ExecutionTiming> parse_timing(std::string_view text);

}  // namespace lstmtrade
