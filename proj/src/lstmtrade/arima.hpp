#pragma once

#include "lstmtrade/market_data.hpp"
#include "lstmtrade/predictor.hpp"

#include <span>
#include <string>
#include <vector>

namespace lstmtrade {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    std::string to_string() const;
    friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

enum class InterceptMode {
    automatic,  // estimate a mean for d <= 1, none for d >= 2
    always,
    never,
};

struct ArimaOptions {
    InterceptMode intercept = InterceptMode::automatic;
    int max_function_evals = 2000;
    double significance_z = 1.959963984540054;  // two-sided 5%
    /// Leading level observations left out of the likelihood. 0 means p + d; order search sets
    /// it to 2 * max_order so every candidate is scored on the same observations.
    int condition_on = 0;
};

/// Mean-form ARMA on the d-times differenced series w:
///   w_t - mu = sum phi_i (w_{t-i} - mu) + e_t + sum theta_j e_{t-j}
struct ArimaModel {
    ArimaOrder order;
    std::vector<double> phi;
    std::vector<double> theta;
    bool has_intercept = false;
    double mu = 0.0;
    double sigma2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n_eff = 0;
    int k = 0;  // estimated parameters including the variance

    /// Standard errors and z for phi..., theta..., mu (when estimated).
    std::vector<double> std_errors;
    std::vector<double> z;

    bool converged = true;
    bool stationary = true;
    bool invertible = true;
    bool significant = true;  // every AR/MA coefficient passes the 5% test
    std::vector<std::string> flags;

    /// Intercept in constant form, c = mu (1 - sum phi).
    double constant() const;
    std::vector<double> coefficients() const;
};

std::vector<double> difference(std::span<const double> x, int d);
/// Inverse of difference(): `head` holds the first d values of the undifferenced series.
std::vector<double> integrate(std::span<const double> w, std::span<const double> head, int d);

/// Conditional sum of squares: residuals start at index p with earlier shocks set to zero.
ArimaModel fit_arima(std::span<const double> y, ArimaOrder order, const ArimaOptions& options = {},
                     const std::vector<double>& start = {});

/// Residuals e_t of `model` on the differenced series of `y`, t = 0..n-d-1 (zeros before p).
std::vector<double> arima_residuals(const ArimaModel& model, std::span<const double> y);

/// One-step forecast of the next level after the last element of `y`.
double forecast_next(const ArimaModel& model, std::span<const double> y);

/// Augmented Dickey-Fuller t statistic: regression of dy_t on a constant, y_{t-1} and `lags`
/// lagged differences; returns the t ratio of the y_{t-1} coefficient.
double adf_statistic(std::span<const double> y, int lags);

/// 5% critical value of the constant-only ADF test (MacKinnon response surface).
double adf_critical_5pct(std::size_t n);

/// Smallest d in [0, max_d] whose d-th difference rejects a unit root at 5%; max_d if none does.
int min_differencing(std::span<const double> y, int max_d);

struct OrderSearch {
    ArimaModel best;
    std::vector<ArimaModel> candidates;  // every fitted candidate, grid order
    int min_d = 0;                       // candidates below this differencing order are not fitted
    bool fallback = false;               // no eligible candidate had all coefficients significant
};

/// Grid over p, q in [0, max_order] and d in [min_differencing(y), max_order], ranked by AIC with a
/// BIC tiebreak among converged, stationary, invertible fits whose coefficients are all significant.
OrderSearch select_order(std::span<const double> y, int max_order = 3, const ArimaOptions& options = {},
                         int workers = 1);

enum class RefitMode {
    growing,  // re-estimate every day on all data up to t
    fixed,    // keep the in-sample coefficients
};

struct ArimaRolling {
    std::vector<PredictionRecord> records;
    ArimaModel last_model;
    std::vector<std::string> warnings;
};

/// One-step forecasts of adjusted close for every trading day of `range`.
ArimaRolling rolling_forecast(const ArimaModel& spec, const PriceSeries& series, const DateRange& range,
                              RefitMode mode = RefitMode::growing, const ArimaOptions& options = {});

const char* to_string(RefitMode mode);

}  // namespace lstmtrade
