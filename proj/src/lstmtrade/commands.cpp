#include "lstmtrade/commands.hpp"

#include "lstmtrade/errors.hpp"
#include "lstmtrade/io.hpp"
#include "lstmtrade/pipeline.hpp"
#include "lstmtrade/plot.hpp"

#include <json.hpp>

#include <cstdio>
#include <map>

namespace lstmtrade {

using nlohmann::json;

namespace {

std::string fixed(const std::optional<double>& v, const char* fmt) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

std::string report_label(const RunConfig& cfg) {
    if (cfg.strategy == Strategy::buy_and_hold) return "buy_and_hold";
    const char* strategy = cfg.strategy == Strategy::up_down ? "up_down" : "proposed";
    return std::string(strategy) + "/" + to_string(cfg.effective_predictor());
}

void require_coverage(const std::vector<PredictionRecord>& records, const PriceSeries& series, const DateRange& range,
                      const std::string& what) {
    auto [begin, end] = index_range(dates_of(series), range);
    if (begin >= end) throw DataError("no trading days in " + range.first.to_string() + " .. " + range.last.to_string());
    const auto got = slice(records, range);
    if (got.size() != end - begin || got.front().date != series.bars[begin].date) {
        throw DataError(what + " does not cover every trading day of " + range.first.to_string() + " .. " +
                        range.last.to_string());
    }
}

}  // namespace

std::string series_summary_json(const PriceSeries& s) {
    json j;
    j["name"] = s.name;
    j["rows"] = s.size();
    j["first"] = s.empty() ? json(nullptr) : json(s.bars.front().date.to_string());
    j["last"] = s.empty() ? json(nullptr) : json(s.bars.back().date.to_string());
    j["adj_close_from_close"] = s.adj_close_from_close;
    j["rejected_lines"] = s.rejected_lines;
    return j.dump(2) + "\n";
}

IngestSummary cmd_ingest(const std::filesystem::path& input, const std::filesystem::path& output) {
    const PriceSeries s = parse_csv(input);
    if (!output.empty()) write_file_atomic(output, to_csv(s));
    return {series_summary_json(s)};
}

PerformanceReport cmd_backtest(const RunConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log) {
    cfg.validate();
    auto say = [&](const std::string& msg) {
        if (log) log(msg);
    };
    const PriceSeries series = parse_csv(cfg.series_path);
    std::optional<PriceSeries> traded;
    if (cfg.traded_path) traded = parse_csv(*cfg.traded_path);
    const PriceSeries* traded_ptr = traded ? &*traded : nullptr;
    const PriceSeries& fills = traded ? *traded : series;
    const std::string pre = cfg.preamble();
    const auto& split = cfg.split;

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

    PerformanceReport rep;
    rep.label = report_label(cfg);
    rep.strategy = to_string(cfg.strategy);
    rep.fingerprint = cfg.fingerprint();
    rep.execution = to_string(cfg.execution);
    rep.extra["seed"] = std::to_string(cfg.seed);
    rep.extra["capital"] = format_double(cfg.capital);
    rep.extra["traded_series"] = fills.name;
    BacktestResult res;

    if (cfg.strategy == Strategy::buy_and_hold) {
        res = buy_and_hold(fills, cfg.capital, split.out_of_sample);
    } else {
        const PredictorKind kind = cfg.effective_predictor();
        rep.extra["predictor"] = to_string(kind);
        const DateRange all{split.policy_build.first, split.out_of_sample.last};
        std::vector<PredictionRecord> records;
        if (cfg.predictions_path) {
            records = load_predictions(*cfg.predictions_path);
            say("loaded " + std::to_string(records.size()) + " predictions from " + cfg.predictions_path->string());
        } else {
            const DateRange in_sample{split.policy_build.first, split.hyper_select.last};
            ProgressFn progress = [&](std::size_t done, std::size_t total) {
                if (done % 50 == 0 || done == total) {
                    say("predicted " + std::to_string(done) + "/" + std::to_string(total) + " days");
                }
            };
            auto stream = make_predictions(kind, series, all, cfg.network, cfg.arima, in_sample, progress);
            for (const auto& w : stream.warnings) say("warning: " + w);
            rep.extra["prediction_warnings"] = std::to_string(stream.warnings.size());
            if (stream.arima) {
                rep.extra["arima_order"] = stream.arima->order.to_string();
                rep.extra["arima_refit"] = to_string(cfg.arima.refit);
            }
            records = std::move(stream.records);
        }
        write_file_atomic(out_dir / "predictions.csv", predictions_to_csv(records, pre));
        rep.extra["predictions"] = "predictions.csv";

        require_coverage(records, series, split.out_of_sample, "prediction stream");
        const auto oos = slice(records, split.out_of_sample);
        if (cfg.strategy == Strategy::up_down) {
            res = up_down_strategy(series, oos, cfg.capital, cfg.execution, traded_ptr, cfg.fee_bps);
        } else if (cfg.policy_override) {
            BacktestConfig bc;
            bc.policy = cfg.policy;
            bc.initial_cash = cfg.capital;
            bc.timing = cfg.execution;
            bc.fee_bps = cfg.fee_bps;
            bc.fixed_policy = cfg.policy_override;
            bc.record_snapshots = true;
            res = run_backtest(series, oos, bc, traded_ptr);
            rep.extra["policy"] = "override";
        } else {
            require_coverage(records, series, split.policy_build, "prediction stream");
            require_coverage(records, series, split.hyper_select, "prediction stream");
            PhaseInputs in{series, traded_ptr, cfg.policy, cfg.capital, cfg.execution, cfg.fee_bps, true};
            res = run_out_of_sample(in, records, split);
        }
        if (!res.snapshots_csv.empty()) {
            write_file_atomic(out_dir / "policy.csv", pre + res.snapshots_csv);
        }
        const auto scored = std::count_if(oos.begin(), oos.end(),
                                          [](const PredictionRecord& r) { return r.y_hat_next && r.y_next; });
        if (scored >= 2) rep.errors = error_metrics(oos);
        rep.pt = pesaran_timmermann(oos);
        rep.realized_profit = res.realized_profit;
    }

    for (const auto& w : res.warnings) say("warning: " + w);
    if (res.equity.size() < 2) throw DataError("out-of-sample period needs at least 2 trading days");
    rep.returns = return_metrics(res.equity, 252.0, cfg.risk_free);
    rep.first_date = res.equity.front().date.to_string();
    rep.last_date = res.equity.back().date.to_string();
    rep.trades = res.trades.size();
    rep.extra["capped_buys"] = std::to_string(res.capped_buys);
    rep.extra["skipped_days"] = std::to_string(res.skipped_days);
    rep.extra["fees"] = format_double(res.fees);
    rep.extra["final_equity"] = format_double(res.equity.back().equity);

    write_file_atomic(out_dir / "trades.csv", trades_to_csv(res.trades, pre));
    write_file_atomic(out_dir / "equity.csv", equity_to_csv(res.equity, pre));
    write_file_atomic(out_dir / "report.json", report_to_json(rep));
    write_file_atomic(out_dir / "report.txt", "# config=" + rep.fingerprint + " seed=" + std::to_string(cfg.seed) +
                                                   "\n" + comparison_table({rep}));
    return rep;
}

GridRun cmd_gridsearch(const RunConfig& cfg, const GridSpec& spec, const std::filesystem::path& out_dir, int workers,
                       bool resume, const LogFn& log) {
    cfg.validate();
    spec.validate();
    const PriceSeries series = parse_csv(cfg.series_path);
    std::optional<PriceSeries> traded;
    if (cfg.traded_path) traded = parse_csv(*cfg.traded_path);
    GridContext ctx{series, traded ? &*traded : nullptr, cfg};
    GridProgressFn progress = [&](const GridResult& r, std::size_t done, std::size_t total) {
        if (!log) return;
        std::string msg = "[" + std::to_string(done) + "/" + std::to_string(total) + "] " +
                          r.config.architecture_key() + " ";
        msg += r.ok ? "CR " + fixed(r.cr ? std::optional<double>(*r.cr * 100.0) : std::nullopt, "%.2f") + "%"
                    : "failed: " + r.failure;
        log(msg);
    };
    auto run = run_grid(spec, ctx, out_dir, workers, resume, progress);
    if (log && run.reused > 0) log("reused " + std::to_string(run.reused) + " results from the manifest");
    return run;
}

std::string comparison_table(const std::vector<PerformanceReport>& reports) {
    std::vector<std::string> labels;
    std::map<std::string, int> seen;
    for (const auto& r : reports) {
        const int n = ++seen[r.label];
        labels.push_back(n == 1 ? r.label : r.label + "#" + std::to_string(n));
    }
    using Getter = std::function<std::string(const PerformanceReport&)>;
    auto err = [](double ErrorMetrics::*field, const char* fmt, double scale = 1.0) -> Getter {
        return [=](const PerformanceReport& r) {
            return r.errors ? fixed((*r.errors).*field * scale, fmt) : std::string("-");
        };
    };
    const std::vector<std::pair<std::string, Getter>> rows{
        {"period", [](const PerformanceReport& r) { return r.first_date + ".." + r.last_date; }},
        {"execution", [](const PerformanceReport& r) { return r.execution; }},
        {"CR %", [](const PerformanceReport& r) { return fixed(100.0 * r.returns.cr, "%.2f"); }},
        {"AR %", [](const PerformanceReport& r) { return fixed(100.0 * r.returns.ar, "%.2f"); }},
        {"AV %", [](const PerformanceReport& r) { return fixed(100.0 * r.returns.av, "%.2f"); }},
        {"SR", [](const PerformanceReport& r) { return fixed(r.returns.sr, "%.3f"); }},
        {"DD %", [](const PerformanceReport& r) { return fixed(100.0 * r.returns.dd, "%.2f"); }},
        {"trades", [](const PerformanceReport& r) { return std::to_string(r.trades); }},
        {"G", [](const PerformanceReport& r) { return fixed(r.realized_profit, "%.2f"); }},
        {"MDA", err(&ErrorMetrics::mda, "%.4f")},
        {"MAPE %", err(&ErrorMetrics::mape, "%.4f")},
        {"MAE", err(&ErrorMetrics::mae, "%.4f")},
        {"MSE", err(&ErrorMetrics::mse, "%.3f")},
        {"R2_paper",
         [](const PerformanceReport& r) { return r.errors ? fixed(r.errors->r2_paper, "%.4f") : std::string("-"); }},
        {"PT", [](const PerformanceReport& r) { return r.pt ? fixed(r.pt->statistic, "%.3f") : std::string("-"); }},
        {"PT p", [](const PerformanceReport& r) { return r.pt ? fixed(r.pt->p_value, "%.4f") : std::string("-"); }},
    };

    std::vector<std::vector<std::string>> grid;
    grid.push_back({"metric"});
    for (const auto& l : labels) grid.back().push_back(l);
    for (const auto& [name, get] : rows) {
        std::vector<std::string> line{name};
        for (const auto& r : reports) line.push_back(get(r));
        grid.push_back(std::move(line));
    }
    std::vector<std::size_t> width(grid.front().size(), 0);
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::string out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::string text;
        for (std::size_t c = 0; c < grid[i].size(); ++c) {
            const auto& s = grid[i][c];
            const std::string pad(width[c] - s.size(), ' ');
            text += c == 0 ? s + pad : "  " + pad + s;
        }
        out += text + '\n';
        if (i == 0) out += std::string(text.size(), '-') + '\n';
    }
    return out;
}

Comparison cmd_compare(const std::vector<std::filesystem::path>& paths) {
    if (paths.size() < 2) throw ConfigError("compare needs at least two reports");
    std::vector<PerformanceReport> reports;
    for (const auto& p : paths) reports.push_back(report_from_json(read_file(p)));
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].first_date != reports[0].first_date || reports[i].last_date != reports[0].last_date) {
            throw DataError("reports cover different periods: " + reports[0].first_date + ".." +
                            reports[0].last_date + " vs " + reports[i].first_date + ".." + reports[i].last_date);
        }
    }
    const auto first = Date::parse(reports[0].first_date);
    const auto last = Date::parse(reports[0].last_date);
    if (!first || !last) throw DataError("report period is missing or malformed: " + paths[0].string());
    const DateRange range{*first, *last};

    std::vector<std::optional<std::vector<PredictionRecord>>> streams(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        auto it = reports[i].extra.find("predictions");
        if (it == reports[i].extra.end()) continue;
        const auto file = paths[i].parent_path() / it->second;
        if (!std::filesystem::exists(file)) continue;
        streams[i] = slice(load_predictions(file), range);
    }

    json dm = json::array();
    std::string dm_text;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (std::size_t j = i + 1; j < reports.size(); ++j) {
            if (!streams[i] || !streams[j]) continue;
            const auto t = diebold_mariano(*streams[i], *streams[j]);
            json e = {{"a", reports[i].label},
                      {"b", reports[j].label},
                      {"statistic", t.statistic ? json(*t.statistic) : json(nullptr)},
                      {"p_value", t.p_value ? json(*t.p_value) : json(nullptr)},
                      {"n", t.n}};
            if (!t.note.empty()) e["note"] = t.note;
            dm.push_back(e);
            dm_text += "DM " + reports[i].label + " vs " + reports[j].label + ": ";
            dm_text += t.statistic ? "statistic " + fixed(t.statistic, "%.3f") + ", p " + fixed(t.p_value, "%.4f")
                                   : t.note;
            dm_text += " (n=" + std::to_string(t.n) + ")\n";
        }
    }
    json j;
    j["reports"] = json::array();
    for (const auto& r : reports) j["reports"].push_back(json::parse(report_to_json(r)));
    j["diebold_mariano"] = dm;
    Comparison c;
    c.table = comparison_table(reports);
    if (!dm_text.empty()) c.table += "\n" + dm_text;
    c.json = j.dump(2) + "\n";
    return c;
}

std::string plot_svg(const std::vector<std::filesystem::path>& files) {
    if (files.empty()) throw ConfigError("plot needs at least one equity file");
    std::map<std::string, int> stems;
    for (const auto& f : files) ++stems[f.stem().string()];
    std::vector<PlotSeries> series;
    for (const auto& f : files) {
        std::string label = f.stem().string();
        if (stems[label] > 1 && f.has_parent_path()) label = f.parent_path().filename().string() + "/" + label;
        series.push_back({label, equity_from_csv(read_file(f), f.string())});
    }
    return render_equity_svg(series);
}

void cmd_plot(const std::vector<std::filesystem::path>& files, const std::filesystem::path& out) {
    write_file_atomic(out, plot_svg(files));
}

}  // namespace lstmtrade
