#include "lstmtrade/simulator.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"

#include <cmath>

namespace lstmtrade {

namespace {

// Decided at signal time so later cutoff updates cannot reclassify it.
struct Pending {
    int bin = 0;
    Allocation allocation = Allocation::units(0);
};

StepResult apply(const PortfolioState& state, int bin, Allocation a, double exec_price, Date exec_date,
                 double fee_bps);

double traded_price(const PriceSeries& traded, Date date) {
    auto idx = traded.index_of(date);
    if (!idx) {
        throw DataError("traded series '" + traded.name + "' has no price on " + date.to_string());
    }
    return traded.bars[*idx].adj_close;
}

class Engine {
public:
    Engine(const BacktestConfig& config, BacktestResult& out) : config_(config), out_(out), history_(config.policy.basis) {
        if (config.initial_cash <= 0.0 || !std::isfinite(config.initial_cash)) {
            throw ConfigError("initial cash must be positive");
        }
        if (config.fee_bps < 0.0) throw ConfigError("fee must be non-negative");
        state_.cash = config.initial_cash;
        if (config.fixed_policy) {
            config.fixed_policy->validate();
            policy_ = *config.fixed_policy;
            out_.stats = BinStats(policy_.bins());
            ready_ = true;
        } else {
            config.policy.validate();
            out_.stats = config.seed_stats ? *config.seed_stats : BinStats(config.policy.bin_count());
            if (out_.stats.bins() != config.policy.bin_count()) {
                throw ConfigError("seed statistics have " + std::to_string(out_.stats.bins()) + " bins, policy has " +
                                  std::to_string(config.policy.bin_count()));
            }
            for (double r : config.bootstrap_returns) history_.append(r);
            policy_.a = optimal_allocations(out_.stats, config.policy);
            refresh_cutoffs();
        }
        out_.run_stats = BinStats(out_.stats.bins());
    }

    Pending decide(double r_hat) const {
        const int bin = classify(r_hat, policy_.q);
        return Pending{bin, policy_.a.at(static_cast<std::size_t>(bin - 1))};
    }

    void execute(const Pending& order, Date date, double price) {
        auto r = apply(state_, order.bin, order.allocation, price, date, config_.fee_bps);
        if (r.unaffordable) {
            out_.warnings.push_back(date.to_string() + ": cash below one unit, buy skipped");
        }
        if (r.event) {
            auto& ev = *r.event;
            if (ev.side == Side::sell) {
                const int bin = *state_.entry_bin;
                const double y_buy = state_.entry_price;
                record_trade_outcome(out_.run_stats, bin, y_buy, ev.price, config_.policy.epsilon);
                const bool flipped = record_trade_outcome(out_.stats, bin, y_buy, ev.price, config_.policy.epsilon);
                out_.cycles.push_back(CompletedCycle{bin, y_buy, ev.price});
                out_.realized_profit += *ev.realized_pnl;
                if (flipped && !config_.fixed_policy) policy_.a = optimal_allocations(out_.stats, config_.policy);
            } else if (ev.capped) {
                ++out_.capped_buys;
            }
            out_.fees += ev.fee;
            out_.trades.push_back(ev);
        }
        state_ = r.state;
    }

    bool ready() const { return ready_; }

    void observe(double r_hat) {
        if (config_.fixed_policy) return;
        history_.append(r_hat);
        refresh_cutoffs();
    }

    void mark(Date date, double price) {
        const double equity = state_.cash + static_cast<double>(state_.units) * price;
        out_.equity.push_back(EquityPoint{date, equity});
    }

    void snapshot_day(Date date) {
        if (!config_.record_snapshots || !ready_) return;
        out_.snapshots_csv += snapshot_csv_rows(date.to_string(), snapshot(policy_, out_.stats));
    }

    void finish() { out_.final_policy = policy_; }

private:
    void refresh_cutoffs() {
        if (history_.size() < config_.policy.min_samples) return;
        auto c = history_.cutoffs(config_.policy);
        policy_.q = std::move(c.q);
        policy_.merged = c.merged;
        ready_ = true;
    }

    const BacktestConfig& config_;
    BacktestResult& out_;
    ReturnHistory history_;
    AllocationPolicy policy_;
    PortfolioState state_;
    bool ready_ = false;
};

StepResult apply(const PortfolioState& state, int bin, Allocation a, double exec_price, Date exec_date,
                 double fee_bps) {
    if (!(exec_price > 0.0) || !std::isfinite(exec_price)) {
        throw DataError("execution price must be positive on " + exec_date.to_string());
    }
    StepResult r;
    r.state = state;
    r.bin = bin;
    const double fee_rate = fee_bps / 1e4;

    if (a.is_sell()) {
        if (!state.holding()) return r;
        TradeEvent ev;
        ev.date = exec_date;
        ev.side = Side::sell;
        ev.units = state.units;
        ev.price = exec_price;
        ev.bin = 1;
        const double gross = static_cast<double>(state.units) * exec_price;
        ev.fee = gross * fee_rate;
        ev.realized_pnl = static_cast<double>(state.units) * (exec_price - state.entry_price);
        r.state.cash += gross - ev.fee;
        r.state.units = 0;
        r.state.entry_bin.reset();
        r.state.entry_price = 0.0;
        r.state.entry_date.reset();
        r.event = ev;
        return r;
    }
    if (state.holding() || a.units() == 0) return r;

    std::int64_t units = a.units();
    bool capped = false;
    const double unit_cost = exec_price * (1.0 + fee_rate);
    if (static_cast<double>(units) * unit_cost > state.cash) {
        const std::int64_t affordable = state.cash > 0.0 ? compute_a_max(state.cash, unit_cost).units : 0;
        if (affordable < units) {
            units = affordable;
            capped = true;
        }
    }
    if (units == 0) {
        r.unaffordable = true;
        return r;
    }
    TradeEvent ev;
    ev.date = exec_date;
    ev.side = Side::buy;
    ev.units = units;
    ev.price = exec_price;
    ev.bin = r.bin;
    ev.capped = capped;
    const double gross = static_cast<double>(units) * exec_price;
    ev.fee = gross * fee_rate;
    // Round-off in the affordability check must never leave cash negative.
    r.state.cash = std::max(0.0, state.cash - gross - ev.fee);
    r.state.units = units;
    r.state.entry_bin = r.bin;
    r.state.entry_price = exec_price;
    r.state.entry_date = exec_date;
    r.event = ev;
    return r;
}

}  // namespace

StepResult step(const PortfolioState& state, const AllocationPolicy& policy, double r_hat, double exec_price,
                Date exec_date, double fee_bps) {
    const int bin = classify(r_hat, policy.q);
    return apply(state, bin, policy.a.at(static_cast<std::size_t>(bin - 1)), exec_price, exec_date, fee_bps);
}

BacktestResult run_backtest(const PriceSeries& series, const std::vector<PredictionRecord>& predictions,
                            const BacktestConfig& config, const PriceSeries* traded) {
    if (predictions.empty()) throw DataError("no predictions in the evaluation range");
    const PriceSeries& fills = traded ? *traded : series;

    // Records must be consecutive trading days of the predicted series.
    std::optional<std::size_t> prev;
    for (const auto& rec : predictions) {
        auto idx = series.index_of(rec.date);
        if (!idx) {
            throw DataError("prediction for " + rec.date.to_string() + " has no bar in '" + series.name + "'");
        }
        if (prev && *idx != *prev + 1) {
            throw DataError("prediction stream skips trading days before " + rec.date.to_string());
        }
        prev = idx;
    }

    BacktestResult out;
    Engine engine(config, out);
    std::optional<Pending> pending;
    for (const auto& rec : predictions) {
        const double price = traded_price(fills, rec.date);
        if (pending) {
            engine.execute(*pending, rec.date, price);
            pending.reset();
        }
        const bool usable = rec.has_prediction() && rec.r_hat && std::isfinite(*rec.r_hat);
        if (!usable) {
            ++out.skipped_days;
        } else if (engine.ready()) {
            if (config.timing == ExecutionTiming::same_close) {
                engine.execute(engine.decide(*rec.r_hat), rec.date, price);
            } else {
                pending = engine.decide(*rec.r_hat);
            }
        }
        engine.mark(rec.date, price);
        if (usable) engine.observe(*rec.r_hat);
        engine.snapshot_day(rec.date);
    }
    if (!engine.ready()) {
        out.warnings.push_back("fewer than " + std::to_string(config.policy.min_samples) +
                               " predicted returns; no cutoffs were ever available");
    }
    engine.finish();
    if (config.record_snapshots) out.snapshots_csv = snapshot_csv_header() + out.snapshots_csv;
    return out;
}

BacktestResult buy_and_hold(const PriceSeries& series, double capital, const DateRange& range) {
    auto [begin, end] = index_range(dates_of(series), range);
    if (begin >= end) throw DataError("buy-and-hold range has no trading days");
    if (!(capital > 0.0)) throw ConfigError("capital must be positive");
    BacktestResult out;
    const auto& first = series.bars[begin];
    const auto units = compute_a_max(capital, first.adj_close).units;
    const double cash = capital - static_cast<double>(units) * first.adj_close;
    if (units > 0) {
        TradeEvent ev;
        ev.date = first.date;
        ev.side = Side::buy;
        ev.units = units;
        ev.price = first.adj_close;
        ev.bin = 2;
        out.trades.push_back(ev);
    }
    for (std::size_t t = begin; t < end; ++t) {
        out.equity.push_back(
            EquityPoint{series.bars[t].date, cash + static_cast<double>(units) * series.bars[t].adj_close});
    }
    return out;
}

BacktestResult up_down_strategy(const PriceSeries& series, const std::vector<PredictionRecord>& predictions,
                                double capital, ExecutionTiming timing, const PriceSeries* traded, double fee_bps) {
    if (predictions.empty()) throw DataError("no predictions in the evaluation range");
    const PriceSeries& fills = traded ? *traded : series;
    // A_max is sized on the first day a fill can happen.
    Date first_fill = predictions.front().date;
    if (timing == ExecutionTiming::next_close && predictions.size() > 1) first_fill = predictions[1].date;
    BacktestConfig config;
    config.initial_cash = capital;
    config.timing = timing;
    config.fee_bps = fee_bps;
    config.fixed_policy = AllocationPolicy::up_down(compute_a_max(capital, traded_price(fills, first_fill)).units);
    return run_backtest(series, predictions, config, traded);
}

std::string trades_to_csv(const std::vector<TradeEvent>& trades, const std::string& preamble) {
    std::string out = preamble;
    out += "date,side,units,price,bin,realized_pnl\n";
    for (const auto& t : trades) {
        out += t.date.to_string() + ',' + to_string(t.side) + ',' + std::to_string(t.units) + ',' +
               format_double(t.price) + ',' + std::to_string(t.bin) + ',' +
               (t.realized_pnl ? format_double(*t.realized_pnl) : std::string()) + '\n';
    }
    return out;
}

std::vector<TradeEvent> trades_from_csv(std::string_view text) {
    std::vector<TradeEvent> out;
    bool header = false;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "date,side,units,price,bin,realized_pnl") throw DataError("unexpected trade log header");
            header = true;
            continue;
        }
        auto f = split_csv_line(line);
        auto fail = [&] { return DataError("trade log line " + std::to_string(line_no) + " is malformed"); };
        if (f.size() != 6) throw fail();
        TradeEvent ev;
        auto date = Date::parse(f[0]);
        auto units = parse_int(f[2]);
        auto price = parse_double(f[3]);
        auto bin = parse_int(f[4]);
        if (!date || !units || !price || !bin || (f[1] != "BUY" && f[1] != "SELL")) throw fail();
        ev.date = *date;
        ev.side = f[1] == "BUY" ? Side::buy : Side::sell;
        ev.units = *units;
        ev.price = *price;
        ev.bin = static_cast<int>(*bin);
        if (!f[5].empty()) {
            auto pnl = parse_double(f[5]);
            if (!pnl) throw fail();
            ev.realized_pnl = pnl;
        }
        out.push_back(ev);
    }
    return out;
}

std::string equity_to_csv(const EquityCurve& equity, const std::string& preamble) {
    std::string out = preamble;
    out += "date,equity\n";
    for (const auto& p : equity) out += p.date.to_string() + ',' + format_double(p.equity) + '\n';
    return out;
}

EquityCurve equity_from_csv(std::string_view text, const std::string& source) {
    EquityCurve out;
    bool header = false;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "date,equity") throw DataError(source + ": unexpected equity curve header");
            header = true;
            continue;
        }
        auto f = split_csv_line(line);
        std::optional<Date> date;
        std::optional<double> v;
        if (f.size() == 2) {
            date = Date::parse(f[0]);
            v = parse_double(f[1]);
        }
        if (!date || !v) throw DataError(source + ":" + std::to_string(line_no) + ": malformed equity row");
        out.push_back(EquityPoint{*date, *v});
    }
    if (!header) throw DataError(source + ": empty equity curve");
    return out;
}

const char* to_string(Side side) { return side == Side::buy ? "BUY" : "SELL"; }

const char* to_string(ExecutionTiming timing) {
    return timing == ExecutionTiming::next_close ? "next_close" : "same_close";
}

std::optional<ExecutionTiming> parse_timing(std::string_view text) {
    if (text == "next_close") return ExecutionTiming::next_close;
    if (text == "same_close") return ExecutionTiming::same_close;
    return std::nullopt;
}

}  // namespace lstmtrade
