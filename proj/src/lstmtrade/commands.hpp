#pragma once

#include "lstmtrade/analytics.hpp"
#include "lstmtrade/gridsearch.hpp"
#include "lstmtrade/run_config.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace lstmtrade {

using LogFn = std::function<void(const std::string&)>;

struct IngestSummary {
    std::string json;  // rows, date span, rejected lines, price-source flag
};

/// Validates a raw OHLC CSV and, when `output` is non-empty, writes the normalized copy.
IngestSummary cmd_ingest(const std::filesystem::path& input, const std::filesystem::path& output);
std::string series_summary_json(const PriceSeries& series);

/// Runs the configured strategy over the out-of-sample period. Writes trades.csv, equity.csv,
/// report.json, report.txt, and when applicable predictions.csv and policy.csv.
PerformanceReport cmd_backtest(const RunConfig& config, const std::filesystem::path& out_dir,
                               const LogFn& log = {});

GridRun cmd_gridsearch(const RunConfig& config, const GridSpec& spec, const std::filesystem::path& out_dir,
                       int workers, bool resume, const LogFn& log = {});

struct Comparison {
    std::string table;
    std::string json;
};

/// Reports must share one evaluation period. DM runs for every pair that carries prediction streams.
Comparison cmd_compare(const std::vector<std::filesystem::path>& reports);

/// Metrics as rows, one column per report.
std::string comparison_table(const std::vector<PerformanceReport>& reports);

void cmd_plot(const std::vector<std::filesystem::path>& equity_files, const std::filesystem::path& out);
std::string plot_svg(const std::vector<std::filesystem::path>& equity_files);

}  // namespace lstmtrade
