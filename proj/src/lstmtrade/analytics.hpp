#pragma once

#include "lstmtrade/predictor.hpp"
#include "lstmtrade/simulator.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lstmtrade {

struct ErrorMetrics {
    double mda = 0.0;   // fraction in [0, 1]
    double mape = 0.0;  // percent
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> r2_paper;  // Pearson correlation of realized vs predicted
    std::size_t n = 0;
};

/// Uses every record that has both a prediction and a realized next price.
ErrorMetrics error_metrics(const std::vector<PredictionRecord>& records);

/// All values are fractions (0.25 == 25%).
struct ReturnMetrics {
    double cr = 0.0;
    double ar = 0.0;
    double av = 0.0;
    std::optional<double> sr;
    double dd = 0.0;
    std::size_t n_returns = 0;
};

std::vector<double> daily_returns(std::span<const double> values);
double cumulative_return(std::span<const double> returns);
double arithmetic_mean(std::span<const double> values);
double annualize(double cr, std::size_t n_returns, double periods_per_year = 252.0);
/// Streaming running-maximum drawdown, <= 0.
double max_drawdown(std::span<const double> values);

ReturnMetrics return_metrics(std::span<const double> values, double periods_per_year = 252.0,
                             double risk_free = 0.0);
ReturnMetrics return_metrics(const EquityCurve& equity, double periods_per_year = 252.0, double risk_free = 0.0);

struct TestResult {
    std::optional<double> statistic;
    std::optional<double> p_value;
    std::string note;  // why the statistic is absent
    std::size_t n = 0;
};

double normal_cdf(double x);

/// Inputs are predicted and realized changes; "up" means strictly positive.
TestResult pesaran_timmermann(std::span<const double> predicted_change, std::span<const double> actual_change);
TestResult pesaran_timmermann(const std::vector<PredictionRecord>& records);

enum class LossKind { squared, absolute };

/// d_t = L(e_a) - L(e_b); p = Phi(DM), small when forecast a is more accurate.
TestResult diebold_mariano(std::span<const double> errors_a, std::span<const double> errors_b,
                           LossKind loss = LossKind::squared);
/// Aligns the two streams by date over records where both predict and the outcome is known.
TestResult diebold_mariano(const std::vector<PredictionRecord>& a, const std::vector<PredictionRecord>& b,
                           LossKind loss = LossKind::squared);

struct PerformanceReport {
    std::string label;
    std::string strategy;
    std::string first_date;
    std::string last_date;
    std::string fingerprint;
    std::string execution;
    std::optional<ErrorMetrics> errors;
    ReturnMetrics returns;
    std::size_t trades = 0;
    std::optional<TestResult> pt;
    std::optional<TestResult> dm;
    std::optional<double> realized_profit;
    std::map<std::string, std::string> extra;
};

/// Percent-valued fields carry the `_pct` suffix.
std::string report_to_json(const PerformanceReport& report);
PerformanceReport report_from_json(std::string_view text);

/// Aligned table with one row per report: CR, AR, AV, SR, DD and the error metrics.
std::string report_table(const std::vector<PerformanceReport>& reports);

}  // namespace lstmtrade
