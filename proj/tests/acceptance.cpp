// Acceptance run: one PASS/FAIL/INFO line per criterion, exit status 1 if anything failed.
//
//   acceptance DATA_DIR OUT_DIR
//
// DATA_DIR holds the bundled fixtures (index.csv, small.json, grid.json). Set
// LSTMTRADE_REAL_DATA to a daily index CSV covering 2005-01-01..2018-05-01 to run the
// naive reproduction and the end-to-end reports on real data.

#include "lstmtrade/analytics.hpp"
#include "lstmtrade/commands.hpp"
#include "lstmtrade/gridsearch.hpp"
#include "lstmtrade/io.hpp"
#include "lstmtrade/lstm.hpp"
#include "lstmtrade/policy.hpp"
#include "lstmtrade/simulator.hpp"

#include "lstm_oracle.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lstmtrade;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, info };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Verdict::pass : Verdict::fail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_data;
fs::path g_out;

// ---------------------------------------------------------------- 1

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const long double h = 1e-5L;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        NetworkConfig c;
        c.num_layers = 2;
        c.hidden_size = 8;
        c.window = 5;
        c.input_size = 6;
        c.dropout = 0.0;
        auto p = init_glorot(c, seed);
        std::mt19937_64 rng(seed * 101);
        std::normal_distribution<double> n01(0.0, 1.0);
        // Glorot leaves biases at zero; random values exercise every path.
        p.for_each([&](const std::string&, MatrixXd& m) { m = m.unaryExpr([&](double v) { return v + 0.1 * n01(rng); }); });
        MatrixXd x(5, 6);
        VectorXd y(5);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n01(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = n01(rng);

        const auto grad = lstm_oracle::tensors<double>(backward(p, forward(p, x), y));
        auto q = lstm_oracle::tensors<long double>(p);
        for (std::size_t k = 0; k < q.size(); ++k) {
            for (Eigen::Index i = 0; i < q[k].size(); ++i) {
                const long double orig = q[k](i);
                q[k](i) = orig + h;
                const long double up = lstm_oracle::oracle_loss(q, x, y);
                q[k](i) = orig - h;
                const long double down = lstm_oracle::oracle_loss(q, x, y);
                q[k](i) = orig;
                const double fd = static_cast<double>((up - down) / (2 * h));
                const double an = grad[k](i);
                worst = std::max(worst, std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-12}));
                ++checked;
            }
        }
    }
    const double t = seconds_since(t0);
    return verdict(worst < 1e-4 && t < 5.0,
                   fmt("max rel err %.2e over %zu parameters, 5 seeds, %.2f s (limits 1e-4, 5 s)", worst, checked, t));
}

// ---------------------------------------------------------------- 2

Outcome golden_metrics() {
    const auto s = testutil::from_prices({101, 100, 98, 101});
    const auto p1 = error_metrics(testutil::records_for(s, {95.0, 92.0, 105.0, std::nullopt}));
    const auto p2 = error_metrics(testutil::records_for(s, {102.0, 101.0, 97.0, std::nullopt}));
    const std::vector<double> r{-0.99, 1.0, 1.0};
    const double cr = cumulative_return(r);
    const double mean = arithmetic_mean(r);
    const bool a = p1.mae == 5.0 && p2.mae == 3.0 && p1.mda == 1.0 && p2.mda == 0.0;
    const bool b = std::fabs(cr * 100.0 - (-96.0)) < 1e-9 && std::fabs(mean * 100.0 - 100.0 / 3.0) <= 0.5;
    return verdict(a && b, fmt("MAE %g/%g, MDA %g/%g, CR %.4f%%, mean %.4f%%", p1.mae, p2.mae, p1.mda, p2.mda,
                               cr * 100.0, mean * 100.0));
}

// ---------------------------------------------------------------- end-to-end runs (used by 3, 8, 12)

struct EndToEnd {
    bool ok = false;
    bool real = false;
    std::string error;
    std::vector<fs::path> dirs;
    std::vector<PerformanceReport> reports;
    std::string table;
    std::string compare_json;
};

RunConfig end_to_end_config(bool real) {
    if (real) {
        RunConfig run;  // default periods: 2005-2007 / 2008-2009 / 2010-01-04..2018-05-01
        run.series_path = std::getenv("LSTMTRADE_REAL_DATA");
        // Reduced network so the daily rolling run finishes in minutes; architecture is not under test here.
        run.network.num_layers = 1;
        run.network.hidden_size = 8;
        run.network.window = 22;
        run.network.iterations = 50;
        run.network.dropout = 0.0;
        run.seed = 1;
        return run;
    }
    auto run = load_run_config(g_data / "small.json");
    run.series_path = g_data / "index.csv";
    return run;
}

EndToEnd run_end_to_end() {
    EndToEnd e;
    e.real = std::getenv("LSTMTRADE_REAL_DATA") != nullptr;
    try {
        const auto base = end_to_end_config(e.real);
        const fs::path root = g_out / "end_to_end";
        fs::remove_all(root);
        for (auto strategy : {Strategy::proposed, Strategy::buy_and_hold, Strategy::up_down, Strategy::arima,
                              Strategy::naive}) {
            auto run = base;
            run.strategy = strategy;
            if (strategy == Strategy::up_down) run.predictions_path = root / "proposed" / "predictions.csv";
            if (strategy == Strategy::arima) run.arima.max_order = 2;
            run.validate();
            const auto dir = root / to_string(strategy);
            e.reports.push_back(cmd_backtest(run, dir));
            e.dirs.push_back(dir);
        }
        std::vector<fs::path> files;
        for (const auto& d : e.dirs) files.push_back(d / "report.json");
        const auto c = cmd_compare(files);
        e.table = c.table;
        e.compare_json = c.json;
        e.ok = true;
    } catch (const std::exception& ex) {
        e.error = ex.what();
    }
    return e;
}

// ---------------------------------------------------------------- 3

Outcome annualization(const EndToEnd& e) {
    const double ar = annualize(1.364, 2093);
    bool ok = ar >= 0.107 && ar <= 0.110;
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& d : e.dirs) {
        const auto rep = report_from_json(read_file(d / "report.json"));
        const auto& m = rep.returns;
        worst = std::max(worst, std::fabs(std::pow(1.0 + m.ar, static_cast<double>(m.n_returns) / 252.0) - (1.0 + m.cr)));
        ++checked;
    }
    ok = ok && worst <= 1e-10 && checked > 0;
    return verdict(ok, fmt("AR(136.4%%, 2093 d) = %.4f%%; identity worst |diff| %.1e over %zu reports", ar * 100.0,
                           worst, checked));
}

// ---------------------------------------------------------------- 4

struct RandomCase {
    PriceSeries series;
    std::vector<PredictionRecord> records;
};

RandomCase random_case(std::uint64_t seed, std::size_t n, double skip_prob) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> prices;
    double p = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        p *= std::exp(0.01 * n01(rng));
        prices.push_back(p);
    }
    RandomCase c;
    c.series = testutil::from_prices(prices);
    std::vector<std::optional<double>> y_hat;
    for (std::size_t i = 0; i < n; ++i) {
        if (u(rng) < skip_prob) {
            y_hat.push_back(std::nullopt);
        } else {
            y_hat.push_back(prices[i] * (1.0 + 0.01 * n01(rng)));
        }
    }
    c.records = testutil::records_for(c.series, y_hat);
    return c;
}

// Up-down rule written out directly: signal after the close of t, filled at the close of t+1.
std::vector<TradeEvent> reference_up_down(const RandomCase& c, double capital) {
    std::vector<TradeEvent> out;
    const auto& bars = c.series.bars;
    const std::int64_t a_max = compute_a_max(capital, bars[1].adj_close).units;
    double cash = capital;
    std::int64_t held = 0;
    double entry = 0.0;
    std::optional<bool> pending_buy;
    for (std::size_t t = 0; t < bars.size(); ++t) {
        const double price = bars[t].adj_close;
        if (pending_buy) {
            if (!*pending_buy && held > 0) {
                TradeEvent ev{bars[t].date, Side::sell, held, price, 1};
                ev.realized_pnl = static_cast<double>(held) * (price - entry);
                cash += static_cast<double>(held) * price;
                held = 0;
                out.push_back(ev);
            } else if (*pending_buy && held == 0 && a_max > 0) {
                const std::int64_t units = std::min(a_max, compute_a_max(cash, price).units);
                if (units > 0) {
                    cash -= static_cast<double>(units) * price;
                    held = units;
                    entry = price;
                    out.push_back(TradeEvent{bars[t].date, Side::buy, units, price, 2});
                }
            }
            pending_buy.reset();
        }
        const auto& y_hat = c.records[t].y_hat_next;
        if (y_hat) pending_buy = *y_hat >= price;
    }
    return out;
}

Outcome reduction() {
    std::size_t mismatched = 0;
    std::size_t oracle_mismatched = 0;
    std::size_t trades = 0;
    const double capital = 10000.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto c = random_case(10'000 + seed, 250, 0.02);
        const auto ud = up_down_strategy(c.series, c.records, capital);
        BacktestConfig cfg;
        cfg.initial_cash = capital;
        cfg.fixed_policy = AllocationPolicy{{0.0},
                                            {Allocation::sell(),
                                             Allocation::units(compute_a_max(capital, c.series.bars[1].adj_close).units)}};
        const auto proposed = run_backtest(c.series, c.records, cfg);
        const auto log = trades_to_csv(ud.trades);
        if (log != trades_to_csv(proposed.trades)) ++mismatched;
        if (log != trades_to_csv(reference_up_down(c, capital))) ++oracle_mismatched;
        trades += ud.trades.size();
    }
    return verdict(mismatched == 0 && oracle_mismatched == 0,
                   fmt("1000 sequences, %zu trades: %zu differ from up-down, %zu differ from the direct rule",
                       trades, mismatched, oracle_mismatched));
}

// ---------------------------------------------------------------- 5

Outcome optimality() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 10.0);
    PolicyConfig cfg;  // 6 fractions -> n = 8 bins
    cfg.a_max = 25;
    std::size_t violations = 0;
    double min_gap = INFINITY;
    for (int run = 0; run < 100; ++run) {
        std::vector<CompletedCycle> cycles;
        BinStats stats(cfg.bin_count());
        const int k = 20 + static_cast<int>(rng() % 80);
        for (int j = 0; j < k; ++j) {
            const double buy = 500.0 + 1000.0 * std::uniform_real_distribution<double>(0, 1)(rng);
            CompletedCycle c{2 + static_cast<int>(rng() % 7), buy, buy + n(rng)};
            cycles.push_back(c);
            record_trade_outcome(stats, c.entry_bin, c.y_buy, c.y_sell);
        }
        const auto best = optimal_allocations(stats, cfg);
        // G recomputed here from the cycle list rather than through realized_profit.
        auto g_of = [&](const std::vector<std::int64_t>& units) {
            double g = 0.0;
            for (const auto& c : cycles) g += static_cast<double>(units[static_cast<std::size_t>(c.entry_bin - 1)]) * (c.y_sell - c.y_buy);
            return g;
        };
        std::vector<std::int64_t> best_units;
        for (const auto& a : best) best_units.push_back(a.units());
        const double g_best = g_of(best_units);
        if (std::fabs(g_best - realized_profit(cycles, best)) > 1e-9) ++violations;
        for (unsigned mask = 0; mask < 128; ++mask) {
            std::vector<std::int64_t> units{0};
            for (int i = 0; i < 7; ++i) units.push_back(mask >> i & 1 ? cfg.a_max : 0);
            const double g = g_of(units);
            if (g > g_best + 1e-9) ++violations;
            min_gap = std::min(min_gap, g_best - g);
        }
    }
    const double t = seconds_since(t0);
    return verdict(violations == 0 && t < 60.0,
                   fmt("100 runs x 128 vectors, %zu exceed the optimal G, %.2f s (limit 60 s)", violations, t));
}

// ---------------------------------------------------------------- 6

Outcome sample_allocations() {
    const std::vector<double> q{0.0, 0.0012, 0.0038, 0.0065, 0.0097, 0.0118, 0.0144};
    BinStats stats(8);
    stats.delta = {0.0, 126.97, 99.92, 131.35, -66.71, 128.67, -191.68, 222.85};
    PolicyConfig cfg;
    cfg.epsilon = 0.0;
    cfg.a_max = 25;
    const auto a = optimal_allocations(stats, cfg);
    const auto M = Allocation::units(25);
    const auto Z = Allocation::units(0);
    const std::vector<Allocation> expected{Allocation::sell(), M, M, M, Z, M, Z, M};
    const int bin = classify(0.008, q);
    PortfolioState flat;
    flat.cash = 1e6;
    const auto r = step(flat, AllocationPolicy{q, a}, 0.008, 2700.0, Date::from_ymd(2017, 1, 3));
    std::string got;
    for (const auto& x : a) got += (got.empty() ? "" : ",") + x.to_string();
    return verdict(a == expected && bin == 5 && !r.event,
                   fmt("A = [%s], r_hat 0.8%% -> bin %d, %s", got.c_str(), bin, r.event ? "bought" : "no purchase"));
}

// ---------------------------------------------------------------- 7

Outcome naive_reproduction() {
    const char* path = std::getenv("LSTMTRADE_REAL_DATA");
    if (!path) return {Verdict::info, "no real data supplied (LSTMTRADE_REAL_DATA unset); informational"};
    try {
        RunConfig run;
        run.series_path = path;
        run.strategy = Strategy::naive;
        run.validate();
        const auto rep = cmd_backtest(run, g_out / "naive_reproduction");
        if (!rep.errors) return fail("naive run produced no error metrics");
        const bool ok = rep.errors->mape >= 0.58 && rep.errors->mape <= 0.70 && rep.errors->mse >= 790.0 &&
                        rep.errors->mse <= 900.0;
        // Vintage-sensitive: out-of-range values are reported, not failed.
        return {ok ? Verdict::pass : Verdict::info,
                fmt("MAPE %.3f%% (0.58..0.70), MSE %.1f (790..900)%s", rep.errors->mape, rep.errors->mse,
                    ok ? "" : "; outside range, data vintage differs")};
    } catch (const std::exception& ex) {
        return {Verdict::info, std::string("could not run on supplied data: ") + ex.what()};
    }
}

// ---------------------------------------------------------------- 8

double replay(const std::vector<TradeEvent>& trades, bool& consistent) {
    double g = 0.0;
    std::optional<TradeEvent> open;
    for (const auto& t : trades) {
        if (t.side == Side::buy) {
            if (open) consistent = false;
            open = t;
        } else {
            if (!open || open->units != t.units) {
                consistent = false;
                continue;
            }
            g += static_cast<double>(t.units) * (t.price - open->price);
            open.reset();
        }
    }
    return g;
}

BacktestConfig adaptive_config(double cash, std::int64_t a_max) {
    BacktestConfig cfg;
    cfg.initial_cash = cash;
    cfg.policy.a_max = a_max;
    cfg.policy.min_samples = 10;
    BinStats seed(cfg.policy.bin_count());
    for (std::size_t i = 1; i < seed.bins(); ++i) {
        seed.delta[i] = 1.0;
        seed.count[i] = 1;
    }
    cfg.seed_stats = seed;
    return cfg;
}

Outcome accounting(const EndToEnd& e) {
    double worst_replay = 0.0;
    double worst_const = 0.0;
    bool consistent = true;
    std::size_t runs = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto c = random_case(50'000 + seed, 300, 0.03);
        for (auto timing : {ExecutionTiming::next_close, ExecutionTiming::same_close}) {
            auto cfg = adaptive_config(1e6, 20);
            cfg.timing = timing;
            const auto r = run_backtest(c.series, c.records, cfg);
            worst_replay = std::max(worst_replay, std::fabs(r.realized_profit - replay(r.trades, consistent)));
            ++runs;

            BacktestConfig fixed;
            fixed.initial_cash = 1e6;
            fixed.timing = timing;
            fixed.fixed_policy = AllocationPolicy{{0.0, 0.004, 0.008},
                                                  {Allocation::sell(), Allocation::units(3), Allocation::units(0),
                                                   Allocation::units(7)}};
            const auto f = run_backtest(c.series, c.records, fixed);
            double g = 0.0;
            for (std::size_t i = 1; i < f.run_stats.bins(); ++i) {
                g += static_cast<double>(fixed.fixed_policy->a[i].units()) * f.run_stats.delta[i];
            }
            worst_const = std::max(worst_const, std::fabs(f.realized_profit - g));
            worst_replay = std::max(worst_replay, std::fabs(f.realized_profit - replay(f.trades, consistent)));
            runs += 1;
        }
    }
    // Backtests written by the end-to-end stage, checked from their files.
    for (const auto& d : e.dirs) {
        const auto rep = report_from_json(read_file(d / "report.json"));
        if (!rep.realized_profit) continue;
        const auto trades = trades_from_csv(read_file(d / "trades.csv"));
        worst_replay = std::max(worst_replay, std::fabs(*rep.realized_profit - replay(trades, consistent)));
        ++runs;
    }
    return verdict(consistent && worst_replay <= 1e-9 && worst_const <= 1e-9,
                   fmt("%zu backtests: replay |diff| %.1e, constant-allocation |G - sum A*delta| %.1e", runs,
                       worst_replay, worst_const));
}

// ---------------------------------------------------------------- 9

Outcome calibration() {
    const int reps = 10000;
    std::mt19937_64 rng(909);
    std::normal_distribution<double> n01(0.0, 1.0);
    int pt_rejects = 0;
    int dm_rejects = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> a(250), b(250);
        for (auto& x : a) x = n01(rng);
        for (auto& x : b) x = n01(rng);
        // Independent directions: no predictive skill.
        const auto pt = pesaran_timmermann(a, b);
        if (pt.p_value && *pt.p_value < 0.05) ++pt_rejects;
        // Equally accurate forecasts: errors from the same distribution.
        const auto dm = diebold_mariano(a, b);
        if (dm.p_value && *dm.p_value < 0.05) ++dm_rejects;
    }
    const double pt_rate = 100.0 * pt_rejects / reps;
    const double dm_rate = 100.0 * dm_rejects / reps;
    const auto in = [](double r) { return r >= 3.5 && r <= 6.5; };
    return verdict(in(pt_rate) && in(dm_rate),
                   fmt("10^4 null reps, n = 250: PT %.2f%%, DM %.2f%% rejected at 5%% (band 3.5..6.5)", pt_rate,
                       dm_rate));
}

// ---------------------------------------------------------------- 10

Outcome training() {
    NetworkConfig c;  // 3 layers, H = 64, T = 22, dropout 0.5, 1600 iterations
    const int T = c.window;
    MatrixXd x(T, c.input_size);
    VectorXd y(T);
    const auto wave = [](double t) { return 0.5 * std::sin(0.3 * t); };
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < c.input_size; ++j) x(t, j) = wave(t + 0.1 * j);
        y(t) = wave(t + 1.0);
    }
    auto p = init_glorot(c, 7);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = train_on_window(p, x, y, c, 7);
    const double secs = seconds_since(t0);
    const double reduction = 1.0 - r.final_loss / r.initial_loss;
    return verdict(reduction >= 0.9 && secs < 60.0 && r.iterations == 1600,
                   fmt("L3 H64 T22 dropout %.1f, %d iterations: loss %.3e -> %.3e (%.1f%% lower), %.1f s", c.dropout,
                       r.iterations, r.initial_loss, r.final_loss, 100.0 * reduction, secs));
}

// ---------------------------------------------------------------- 11

Outcome determinism() {
    try {
        auto run = load_run_config(g_data / "small.json");
        run.series_path = g_data / "index.csv";
        const fs::path root = g_out / "determinism";
        fs::remove_all(root);
        cmd_backtest(run, root / "a");
        cmd_backtest(run, root / "b");
        std::vector<std::string> differ;
        for (const char* f : {"trades.csv", "equity.csv", "report.json", "report.txt", "predictions.csv", "policy.csv"}) {
            if (read_file(root / "a" / f) != read_file(root / "b" / f)) differ.push_back(f);
        }
        cmd_plot({root / "a" / "equity.csv"}, root / "a.svg");
        cmd_plot({root / "b" / "equity.csv"}, root / "b.svg");
        if (read_file(root / "a.svg") != read_file(root / "b.svg")) differ.push_back("plot");

        const auto spec = parse_grid_spec(read_file(g_data / "grid.json"));
        const auto series = parse_csv(run.series_path);
        GridContext ctx{series, nullptr, run};
        run_grid(spec, ctx, root / "grid1", 1, false);
        run_grid(spec, ctx, root / "grid8", 8, false);
        for (const char* f : {"results.csv", "best.json"}) {
            if (read_file(root / "grid1" / f) != read_file(root / "grid8" / f)) differ.push_back(std::string("grid ") + f);
        }
        std::string list;
        for (const auto& d : differ) list += " " + d;
        return verdict(differ.empty(), differ.empty() ? "backtest outputs, SVG and 1- vs 8-worker grid are byte-identical"
                                                      : "differs:" + list);
    } catch (const std::exception& ex) {
        return fail(ex.what());
    }
}

// ---------------------------------------------------------------- 12

Outcome reports(const EndToEnd& e, bool others_passed) {
    if (!e.ok) return fail("end-to-end run failed: " + e.error);
    bool shaped = true;
    for (const char* metric : {"CR", "AR", "AV", "SR", "DD"}) {
        if (e.table.find(metric) == std::string::npos) shaped = false;
    }
    shaped = shaped && e.reports.size() == 5 && e.compare_json.find("diebold_mariano") != std::string::npos;
    std::string source = e.real ? "real data" : "bundled synthetic series (set LSTMTRADE_REAL_DATA for real data)";
    return verdict(shaped && others_passed,
                   fmt("5 strategies + comparison table on %s%s", source.c_str(),
                       others_passed ? "" : "; criteria 1-11 not all passing"));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance DATA_DIR OUT_DIR\n";
        return 2;
    }
    g_data = fs::absolute(argv[1]);
    g_out = fs::absolute(argv[2]);
    fs::create_directories(g_out);

    const auto e2e = run_end_to_end();
    std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, gradients},
        {2, golden_metrics},
        {3, [&] { return annualization(e2e); }},
        {4, reduction},
        {5, optimality},
        {6, sample_allocations},
        {7, naive_reproduction},
        {8, [&] { return accounting(e2e); }},
        {9, calibration},
        {10, training},
        {11, determinism},
    };
    bool all_ok = true;
    auto print = [&](int id, const Outcome& o) {
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "INFO";
        if (o.verdict == Verdict::fail) all_ok = false;
        std::cout << tag << "  criterion " << id << ": " << o.detail << std::endl;
    };
    for (auto& [id, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& ex) {
            o = fail(std::string("exception: ") + ex.what());
        }
        print(id, o);
    }
    print(12, reports(e2e, all_ok));
    return all_ok ? 0 : 1;
}
