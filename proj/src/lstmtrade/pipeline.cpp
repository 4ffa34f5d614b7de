#include "lstmtrade/pipeline.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <algorithm>

namespace lstmtrade {

namespace {

std::vector<double> adj_closes_through(const PriceSeries& series, Date last) {
    std::vector<double> y;
    for (const auto& b : series.bars) {
        if (last < b.date) break;
        y.push_back(b.adj_close);
    }
    return y;
}

void require_records(const std::vector<PredictionRecord>& records, const DateRange& range, const char* what) {
    if (records.empty()) {
        throw DataError(std::string("no predictions in the ") + what + " period " + range.first.to_string() +
                        " .. " + range.last.to_string());
    }
}

}  // namespace

PredictionStream make_predictions(PredictorKind kind, const PriceSeries& series, const DateRange& range,
                                  const NetworkConfig& network, const ArimaSettings& arima,
                                  const DateRange& in_sample, const ProgressFn& progress) {
    PredictionStream out;
    switch (kind) {
        case PredictorKind::lstm: {
            auto r = rolling_predict(series, network, range, std::nullopt, progress);
            out.records = std::move(r.records);
            out.warnings = std::move(r.warnings);
            break;
        }
        case PredictorKind::naive:
            out.records = naive_persistence(series, range);
            break;
        case PredictorKind::arima: {
            const auto y = adj_closes_through(series, in_sample.last);
            ArimaOptions opts;
            opts.intercept = arima.intercept;
            ArimaModel model;
            if (arima.order) {
                model = fit_arima(y, *arima.order, opts);
            } else {
                model = select_order(y, arima.max_order, opts).best;
            }
            auto r = rolling_forecast(model, series, range, arima.refit, opts);
            out.records = std::move(r.records);
            out.warnings = std::move(r.warnings);
            out.arima = model;
            break;
        }
    }
    return out;
}

Date first_fill_date(const std::vector<PredictionRecord>& period, ExecutionTiming timing) {
    if (period.empty()) throw DataError("empty period");
    if (timing == ExecutionTiming::next_close && period.size() > 1) return period[1].date;
    return period.front().date;
}

BinStats replay_stats(const PhaseInputs& in, const std::vector<PredictionRecord>& history) {
    std::vector<double> r_hats;
    for (const auto& r : history) {
        if (r.r_hat) r_hats.push_back(*r.r_hat);
    }
    const Cutoffs q = compute_cutoffs(r_hats, in.policy);
    AllocationPolicy fixed;
    fixed.q = q.q;
    fixed.merged = q.merged;
    fixed.a.assign(q.q.size() + 1, Allocation::units(1));
    fixed.a[0] = Allocation::sell();

    BacktestConfig cfg;
    cfg.policy = in.policy;
    // One unit per buy; the cash only has to cover any single purchase.
    cfg.initial_cash = 1e12;
    cfg.timing = in.timing;
    cfg.fixed_policy = fixed;
    return run_backtest(in.series, history, cfg, in.traded).run_stats;
}

std::vector<double> bootstrap_returns(const std::vector<PredictionRecord>& records, Date before, std::size_t steps) {
    std::vector<double> all;
    for (const auto& r : records) {
        if (!(r.date < before)) break;
        if (r.r_hat) all.push_back(*r.r_hat);
    }
    const std::size_t n = std::min(steps, all.size());
    return {all.end() - static_cast<std::ptrdiff_t>(n), all.end()};
}

BacktestResult run_period(const PhaseInputs& in, const std::vector<PredictionRecord>& period, const BinStats& seed,
                          std::vector<double> bootstrap) {
    const PriceSeries& fills = in.traded ? *in.traded : in.series;
    const Date fill = first_fill_date(period, in.timing);
    const auto idx = fills.index_of(fill);
    if (!idx) throw DataError("traded series has no price on " + fill.to_string());
    const AMax a_max = compute_a_max(in.capital, fills.bars[*idx].adj_close);
    if (!a_max.tradeable) {
        throw ConfigError("capital " + format_double(in.capital) + " buys no unit at " +
                          format_double(fills.bars[*idx].adj_close));
    }
    BacktestConfig cfg;
    cfg.policy = in.policy;
    cfg.policy.a_max = a_max.units;
    cfg.initial_cash = in.capital;
    cfg.timing = in.timing;
    cfg.fee_bps = in.fee_bps;
    cfg.bootstrap_returns = std::move(bootstrap);
    cfg.seed_stats = seed;
    cfg.record_snapshots = in.snapshots;
    auto result = run_backtest(in.series, period, cfg, in.traded);
    if (cfg.bootstrap_returns.size() < in.policy.bootstrap_steps) {
        result.warnings.insert(result.warnings.begin(),
                               "bootstrap used " + std::to_string(cfg.bootstrap_returns.size()) + " of " +
                                   std::to_string(in.policy.bootstrap_steps) + " predicted returns");
    }
    return result;
}

InSample run_in_sample(const PhaseInputs& in, const std::vector<PredictionRecord>& records, const PeriodSplit& split) {
    const auto build = slice(records, split.policy_build);
    const auto hyper = slice(records, split.hyper_select);
    require_records(build, split.policy_build, "policy-build");
    require_records(hyper, split.hyper_select, "hyper-select");
    InSample out;
    out.seed = replay_stats(in, build);
    PhaseInputs quiet = in;
    quiet.snapshots = false;
    out.hyper = run_period(quiet, hyper, out.seed,
                           bootstrap_returns(records, split.hyper_select.first, in.policy.bootstrap_steps));
    return out;
}

BacktestResult run_out_of_sample(const PhaseInputs& in, const std::vector<PredictionRecord>& records,
                                 const PeriodSplit& split) {
    const auto in_sample = run_in_sample(in, records, split);
    const auto oos = slice(records, split.out_of_sample);
    require_records(oos, split.out_of_sample, "out-of-sample");
    return run_period(in, oos, in_sample.hyper.stats,
                      bootstrap_returns(records, split.out_of_sample.first, in.policy.bootstrap_steps));
}

}  // namespace lstmtrade
