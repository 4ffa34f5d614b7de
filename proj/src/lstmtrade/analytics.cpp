#include "lstmtrade/analytics.hpp"

#include "lstmtrade/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace lstmtrade {

using nlohmann::json;

namespace {

constexpr std::size_t kMinTestPairs = 30;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json test_json(const TestResult& t) {
    json j;
    j["statistic"] = opt_json(t.statistic);
    j["p_value"] = opt_json(t.p_value);
    j["n"] = t.n;
    if (!t.note.empty()) j["note"] = t.note;
    return j;
}

TestResult test_from(const json& j) {
    TestResult t;
    t.statistic = opt_from(j, "statistic");
    t.p_value = opt_from(j, "p_value");
    t.n = j.value("n", std::size_t{0});
    t.note = j.value("note", std::string());
    return t;
}

std::string cell(const std::optional<double>& v, const char* fmt) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

}  // namespace

ErrorMetrics error_metrics(const std::vector<PredictionRecord>& records) {
    std::vector<double> y;
    std::vector<double> yhat;
    std::vector<double> yprev;
    for (const auto& r : records) {
        if (r.y_hat_next && r.y_next) {
            y.push_back(*r.y_next);
            yhat.push_back(*r.y_hat_next);
            yprev.push_back(r.y_t);
        }
    }
    if (y.size() < 2) {
        throw DataError("error metrics need at least 2 records with predictions and realized prices");
    }
    const auto n = static_cast<double>(y.size());
    ErrorMetrics m;
    m.n = y.size();
    double hits = 0.0;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double e = y[t] - yhat[t];
        if ((yhat[t] - yprev[t]) * (y[t] - yprev[t]) > 0.0) hits += 1.0;
        abs_sum += std::fabs(e);
        sq_sum += e * e;
        pct_sum += std::fabs(e) / y[t];
    }
    m.mda = hits / n;
    m.mae = abs_sum / n;
    m.mse = sq_sum / n;
    m.mape = 100.0 * pct_sum / n;

    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double pbar = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        sxy += (y[t] - ybar) * (yhat[t] - pbar);
        sxx += (y[t] - ybar) * (y[t] - ybar);
        syy += (yhat[t] - pbar) * (yhat[t] - pbar);
    }
    if (sxx > 0.0 && syy > 0.0) m.r2_paper = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    return m;
}

std::vector<double> daily_returns(std::span<const double> values) {
    std::vector<double> r;
    if (values.size() < 2) return r;
    r.reserve(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i) r.push_back(values[i] / values[i - 1] - 1.0);
    return r;
}

double cumulative_return(std::span<const double> returns) {
    double g = 1.0;
    for (double r : returns) g *= 1.0 + r;
    return g - 1.0;
}

double arithmetic_mean(std::span<const double> values) {
    if (values.empty()) throw DataError("mean of an empty sequence");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double annualize(double cr, std::size_t n_returns, double periods_per_year) {
    if (n_returns == 0) throw DataError("cannot annualize over zero returns");
    return std::pow(1.0 + cr, periods_per_year / static_cast<double>(n_returns)) - 1.0;
}

double max_drawdown(std::span<const double> values) {
    double peak = -std::numeric_limits<double>::infinity();
    double dd = 0.0;
    for (double v : values) {
        peak = std::max(peak, v);
        dd = std::min(dd, v / peak - 1.0);
    }
    return dd;
}

ReturnMetrics return_metrics(std::span<const double> values, double periods_per_year, double risk_free) {
    if (values.size() < 2) throw DataError("return metrics need at least 2 equity values");
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DataError("equity values must be positive");
    }
    ReturnMetrics m;
    // CR from endpoints equals the product of gross returns and avoids accumulated round-off.
    m.cr = values.back() / values.front() - 1.0;
    const auto r = daily_returns(values);
    m.n_returns = r.size();
    m.ar = annualize(m.cr, m.n_returns, periods_per_year);
    if (r.size() >= 2) {
        const double mean = arithmetic_mean(r);
        double ss = 0.0;
        for (double x : r) ss += (x - mean) * (x - mean);
        m.av = std::sqrt(ss / static_cast<double>(r.size() - 1)) * std::sqrt(periods_per_year);
    }
    if (m.av > 0.0) m.sr = (m.ar - risk_free) / m.av;
    m.dd = max_drawdown(values);
    return m;
}

ReturnMetrics return_metrics(const EquityCurve& equity, double periods_per_year, double risk_free) {
    std::vector<double> v;
    v.reserve(equity.size());
    for (const auto& p : equity) v.push_back(p.equity);
    return return_metrics(v, periods_per_year, risk_free);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TestResult pesaran_timmermann(std::span<const double> predicted_change, std::span<const double> actual_change) {
    if (predicted_change.size() != actual_change.size()) {
        throw DataError("direction series differ in length");
    }
    TestResult t;
    t.n = actual_change.size();
    if (t.n < kMinTestPairs) {
        t.note = "fewer than 30 direction pairs";
        return t;
    }
    const auto n = static_cast<double>(t.n);
    double hits = 0.0;
    double up_pred = 0.0;
    double up_real = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) {
        const bool px = predicted_change[i] > 0.0;
        const bool py = actual_change[i] > 0.0;
        up_pred += px;
        up_real += py;
        hits += px == py;
    }
    const double p = hits / n;
    const double px = up_pred / n;
    const double py = up_real / n;
    if (px == 0.0 || px == 1.0 || py == 0.0 || py == 1.0) {
        t.note = "degenerate direction marginals";
        return t;
    }
    const double p_star = py * px + (1.0 - py) * (1.0 - px);
    const double v_p = p_star * (1.0 - p_star) / n;
    const double v_star = (2.0 * py - 1.0) * (2.0 * py - 1.0) * px * (1.0 - px) / n +
                          (2.0 * px - 1.0) * (2.0 * px - 1.0) * py * (1.0 - py) / n +
                          4.0 * py * px * (1.0 - py) * (1.0 - px) / (n * n);
    const double var = v_p - v_star;
    if (!(var > 0.0)) {
        t.note = "non-positive variance";
        return t;
    }
    t.statistic = (p - p_star) / std::sqrt(var);
    t.p_value = 1.0 - normal_cdf(*t.statistic);
    return t;
}

TestResult pesaran_timmermann(const std::vector<PredictionRecord>& records) {
    std::vector<double> pred;
    std::vector<double> real;
    for (const auto& r : records) {
        if (r.y_hat_next && r.y_next) {
            pred.push_back(*r.y_hat_next - r.y_t);
            real.push_back(*r.y_next - r.y_t);
        }
    }
    return pesaran_timmermann(pred, real);
}

TestResult diebold_mariano(std::span<const double> errors_a, std::span<const double> errors_b, LossKind loss) {
    if (errors_a.size() != errors_b.size()) throw DataError("forecast error series differ in length");
    TestResult t;
    t.n = errors_a.size();
    if (t.n < kMinTestPairs) {
        t.note = "fewer than 30 forecast pairs";
        return t;
    }
    auto l = [loss](double e) { return loss == LossKind::squared ? e * e : std::fabs(e); };
    std::vector<double> d(t.n);
    for (std::size_t i = 0; i < t.n; ++i) d[i] = l(errors_a[i]) - l(errors_b[i]);
    const double mean = arithmetic_mean(d);
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(t.n);
    if (!(var > 0.0)) {
        t.note = "indistinguishable forecasts";
        return t;
    }
    t.statistic = mean / std::sqrt(var / static_cast<double>(t.n));
    t.p_value = normal_cdf(*t.statistic);
    return t;
}

TestResult diebold_mariano(const std::vector<PredictionRecord>& a, const std::vector<PredictionRecord>& b,
                           LossKind loss) {
    std::map<std::int32_t, const PredictionRecord*> by_date;
    for (const auto& r : b) by_date[r.date.serial()] = &r;
    std::vector<double> ea;
    std::vector<double> eb;
    for (const auto& r : a) {
        auto it = by_date.find(r.date.serial());
        if (it == by_date.end()) continue;
        const auto& o = *it->second;
        if (!r.y_hat_next || !o.y_hat_next || !r.y_next || !o.y_next) continue;
        if (*r.y_next != *o.y_next) {
            throw DataError("forecast streams disagree on the realized price for " + r.date.to_string());
        }
        ea.push_back(*r.y_next - *r.y_hat_next);
        eb.push_back(*o.y_next - *o.y_hat_next);
    }
    return diebold_mariano(ea, eb, loss);
}

std::string report_to_json(const PerformanceReport& r) {
    json j;
    j["label"] = r.label;
    j["strategy"] = r.strategy;
    j["period"] = {{"first", r.first_date}, {"last", r.last_date}};
    j["fingerprint"] = r.fingerprint;
    j["execution"] = r.execution;
    if (r.errors) {
        const auto& e = *r.errors;
        j["errors"] = {{"MDA", e.mda},  {"MAPE_pct", e.mape},          {"MAE", e.mae},
                       {"MSE", e.mse}, {"R2_paper", opt_json(e.r2_paper)}, {"n", e.n}};
    } else {
        j["errors"] = nullptr;
    }
    const auto& m = r.returns;
    j["returns"] = {{"CR_pct", 100.0 * m.cr},     {"AR_pct", 100.0 * m.ar}, {"AV_pct", 100.0 * m.av},
                    {"SR", opt_json(m.sr)},       {"DD_pct", 100.0 * m.dd}, {"n_returns", m.n_returns}};
    j["trades"] = r.trades;
    j["realized_profit"] = opt_json(r.realized_profit);
    j["PT"] = r.pt ? test_json(*r.pt) : json(nullptr);
    j["DM"] = r.dm ? test_json(*r.dm) : json(nullptr);
    j["extra"] = r.extra;
    return j.dump(2) + "\n";
}

PerformanceReport report_from_json(std::string_view text) {
    PerformanceReport r;
    try {
        const auto j = json::parse(text);
        r.label = j.at("label").get<std::string>();
        r.strategy = j.value("strategy", std::string());
        if (j.contains("period")) {
            r.first_date = j["period"].value("first", std::string());
            r.last_date = j["period"].value("last", std::string());
        }
        r.fingerprint = j.value("fingerprint", std::string());
        r.execution = j.value("execution", std::string());
        if (j.contains("errors") && !j["errors"].is_null()) {
            const auto& e = j["errors"];
            ErrorMetrics m;
            m.mda = e.at("MDA").get<double>();
            m.mape = e.at("MAPE_pct").get<double>();
            m.mae = e.at("MAE").get<double>();
            m.mse = e.at("MSE").get<double>();
            m.r2_paper = opt_from(e, "R2_paper");
            m.n = e.value("n", std::size_t{0});
            r.errors = m;
        }
        const auto& m = j.at("returns");
        r.returns.cr = m.at("CR_pct").get<double>() / 100.0;
        r.returns.ar = m.at("AR_pct").get<double>() / 100.0;
        r.returns.av = m.at("AV_pct").get<double>() / 100.0;
        r.returns.sr = opt_from(m, "SR");
        r.returns.dd = m.at("DD_pct").get<double>() / 100.0;
        r.returns.n_returns = m.at("n_returns").get<std::size_t>();
        r.trades = j.value("trades", std::size_t{0});
        r.realized_profit = opt_from(j, "realized_profit");
        if (j.contains("PT") && !j["PT"].is_null()) r.pt = test_from(j["PT"]);
        if (j.contains("DM") && !j["DM"].is_null()) r.dm = test_from(j["DM"]);
        if (j.contains("extra")) r.extra = j["extra"].get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    return r;
}

std::string report_table(const std::vector<PerformanceReport>& reports) {
    const std::vector<std::string> head{"label", "CR%",   "AR%",  "AV%", "SR",  "DD%", "trades",
                                        "MDA",   "MAPE%", "MAE",  "MSE", "R2",  "PT",  "PT p",
                                        "DM",    "DM p"};
    std::vector<std::vector<std::string>> rows{head};
    for (const auto& r : reports) {
        const auto& m = r.returns;
        std::optional<double> mda, mape, mae, mse, r2;
        if (r.errors) {
            mda = r.errors->mda;
            mape = r.errors->mape;
            mae = r.errors->mae;
            mse = r.errors->mse;
            r2 = r.errors->r2_paper;
        }
        auto stat = [](const std::optional<TestResult>& t) { return t ? t->statistic : std::nullopt; };
        auto pval = [](const std::optional<TestResult>& t) { return t ? t->p_value : std::nullopt; };
        rows.push_back({r.label, cell(100.0 * m.cr, "%.1f"), cell(100.0 * m.ar, "%.1f"), cell(100.0 * m.av, "%.1f"),
                        cell(m.sr, "%.2f"), cell(100.0 * m.dd, "%.1f"), std::to_string(r.trades),
                        cell(mda, "%.3f"), cell(mape, "%.2f"), cell(mae, "%.2f"), cell(mse, "%.1f"),
                        cell(r2, "%.4f"), cell(stat(r.pt), "%.2f"), cell(pval(r.pt), "%.3f"),
                        cell(stat(r.dm), "%.2f"), cell(pval(r.dm), "%.3f")});
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string line;
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const auto& s = rows[i][c];
            const std::string pad(width[c] - s.size(), ' ');
            if (c == 0) {
                line += s + pad;
            } else {
                line += "  " + pad + s;
            }
        }
        out += line + '\n';
        if (i == 0) out += std::string(line.size(), '-') + '\n';
    }
    return out;
}

}  // namespace lstmtrade
