#include "lstmtrade/arima.hpp"

#include "lstmtrade/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

namespace lstmtrade {

namespace {

bool uses_intercept(InterceptMode mode, int d) {
    switch (mode) {
        case InterceptMode::always: return true;
        case InterceptMode::never: return false;
        case InterceptMode::automatic: break;
    }
    return d <= 1;
}

// Parameter vector layout: phi (p), theta (q), then mu when estimated.
struct Css {
    const std::vector<double>& w;
    int p;
    int q;
    bool with_mu;
    std::size_t first;  // first residual in the objective, >= p

    int size() const { return p + q + (with_mu ? 1 : 0); }
    std::size_t n_eff() const { return w.size() - first; }

    double mu(const Eigen::VectorXd& x) const { return with_mu ? x(p + q) : 0.0; }

    // e has w.size() entries; e[t] = 0 for t < p.
    void residuals(const Eigen::VectorXd& x, std::vector<double>& e) const {
        const double m = mu(x);
        e.assign(w.size(), 0.0);
        for (std::size_t t = static_cast<std::size_t>(p); t < w.size(); ++t) {
            double v = w[t] - m;
            for (int i = 1; i <= p; ++i) v -= x(i - 1) * (w[t - i] - m);
            for (int j = 1; j <= q && static_cast<std::size_t>(j) <= t; ++j) v -= x(p + j - 1) * e[t - j];
            e[t] = v;
        }
    }

    // d e_t / d x, by the same recursion differentiated.
    void jacobian(const Eigen::VectorXd& x, const std::vector<double>& e, Eigen::MatrixXd& jac) const {
        const double m = mu(x);
        const int k = size();
        const auto pz = static_cast<std::size_t>(p);
        Eigen::MatrixXd de = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.size()), k);
        double phi_sum = 0.0;
        for (int i = 0; i < p; ++i) phi_sum += x(i);
        for (std::size_t t = pz; t < w.size(); ++t) {
            const auto row = static_cast<Eigen::Index>(t);
            for (int i = 1; i <= p; ++i) de(row, i - 1) = -(w[t - i] - m);
            for (int j = 1; j <= q && static_cast<std::size_t>(j) <= t; ++j) de(row, p + j - 1) = -e[t - j];
            if (with_mu) de(row, p + q) = -1.0 + phi_sum;
            for (int j = 1; j <= q && static_cast<std::size_t>(j) <= t; ++j) {
                de.row(row) -= x(p + j - 1) * de.row(row - j);
            }
        }
        jac = de.bottomRows(static_cast<Eigen::Index>(n_eff()));
    }
};

struct CssFunctor : Eigen::DenseFunctor<double> {
    CssFunctor(const Css& css) : DenseFunctor(css.size(), static_cast<int>(css.n_eff())), css(css) {}

    int operator()(const InputType& x, ValueType& fvec) const {
        css.residuals(x, scratch);
        fill(fvec);
        return 0;
    }

    int df(const InputType& x, JacobianType& fjac) const {
        css.residuals(x, scratch);
        css.jacobian(x, scratch, fjac);
        if (!fjac.allFinite()) fjac.setZero();
        return 0;
    }

    void fill(ValueType& fvec) const {
        const auto off = css.first;
        fvec.resize(static_cast<Eigen::Index>(css.n_eff()));
        for (Eigen::Index i = 0; i < fvec.size(); ++i) {
            const double v = scratch[off + static_cast<std::size_t>(i)];
            // Explosive MA recursions; a huge finite value makes LM reject the step.
            fvec(i) = std::isfinite(v) ? v : 1e150;
        }
    }

    const Css& css;
    mutable std::vector<double> scratch;
};

// Moduli of the roots of 1 - c_1 z - ... - c_k z^k, inverted: all < 1 means outside the unit circle.
bool roots_outside_unit_circle(const std::vector<double>& c) {
    const auto k = static_cast<Eigen::Index>(c.size());
    if (k == 0) return true;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) companion(0, i) = c[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd ev = companion.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) >= 1.0) return false;
    }
    return true;
}

Eigen::VectorXd initial_guess(const Css& css) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(css.size());
    const auto& w = css.w;
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    if (css.p > 0) {
        // OLS of w_t on its lags gives the exact CSS solution for a pure AR model.
        const auto rows = static_cast<Eigen::Index>(css.n_eff());
        const Eigen::Index cols = css.p + (css.with_mu ? 1 : 0);
        Eigen::MatrixXd X(rows, cols);
        Eigen::VectorXd Y(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto t = static_cast<std::size_t>(r) + css.first;
            Y(r) = w[t];
            for (int i = 1; i <= css.p; ++i) X(r, i - 1) = w[t - i];
            if (css.with_mu) X(r, css.p) = 1.0;
        }
        const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
        double phi_sum = 0.0;
        for (int i = 0; i < css.p; ++i) {
            x(i) = beta(i);
            phi_sum += beta(i);
        }
        if (css.with_mu) {
            x(css.p + css.q) = std::fabs(1.0 - phi_sum) > 1e-6 ? beta(css.p) / (1.0 - phi_sum) : mean;
        }
    } else if (css.with_mu) {
        x(css.q) = mean;
    }
    if (!x.allFinite()) {
        x.setZero();
        if (css.with_mu) x(css.p + css.q) = mean;
    }
    return x;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::string ArimaOrder::to_string() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
}

double ArimaModel::constant() const {
    return mu * (1.0 - std::accumulate(phi.begin(), phi.end(), 0.0));
}

std::vector<double> ArimaModel::coefficients() const {
    std::vector<double> c = phi;
    c.insert(c.end(), theta.begin(), theta.end());
    if (has_intercept) c.push_back(mu);
    return c;
}

std::vector<double> difference(std::span<const double> x, int d) {
    if (d < 0) throw ConfigError("differencing order must be non-negative");
    std::vector<double> out(x.begin(), x.end());
    for (int k = 0; k < d; ++k) {
        if (out.size() < 2) throw DataError("series too short to difference");
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

std::vector<double> integrate(std::span<const double> w, std::span<const double> head, int d) {
    if (head.size() != static_cast<std::size_t>(d)) throw ConfigError("integrate needs exactly d initial values");
    // heads[k] is the first element of the k-times differenced series.
    std::vector<double> heads;
    std::vector<double> level(head.begin(), head.end());
    for (int k = 0; k < d; ++k) {
        heads.push_back(level.front());
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
        level.pop_back();
    }
    std::vector<double> s(w.begin(), w.end());
    for (int k = d - 1; k >= 0; --k) {
        std::vector<double> up(s.size() + 1);
        up[0] = heads[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < s.size(); ++i) up[i + 1] = up[i] + s[i];
        s = std::move(up);
    }
    return s;
}

ArimaModel fit_arima(std::span<const double> y, ArimaOrder order, const ArimaOptions& options,
                     const std::vector<double>& start) {
    if (order.p < 0 || order.d < 0 || order.q < 0) throw ConfigError("ARIMA orders must be non-negative");
    const auto need = static_cast<std::size_t>(3 * (order.p + order.d + order.q) + 20);
    if (y.size() < need) {
        throw DataError("ARIMA" + order.to_string() + " needs at least " + std::to_string(need) +
                        " observations, have " + std::to_string(y.size()));
    }
    const std::vector<double> w = difference(y, order.d);
    const bool with_mu = uses_intercept(options.intercept, order.d);
    const auto skip = static_cast<std::size_t>(std::max(0, options.condition_on - order.d));
    const Css css{w, order.p, order.q, with_mu, std::max(static_cast<std::size_t>(order.p), skip)};
    if (css.first + 10 > w.size()) throw DataError("ARIMA" + order.to_string() + " has too few observations after conditioning");

    ArimaModel m;
    m.order = order;
    m.has_intercept = with_mu;
    m.n_eff = css.n_eff();
    m.k = css.size() + 1;

    auto solve = [&](Eigen::VectorXd x0, bool& converged) {
        converged = true;
        if (css.size() > 0) {
            CssFunctor f(css);
            Eigen::LevenbergMarquardt<CssFunctor> lm(f);
            lm.setMaxfev(options.max_function_evals);
            const auto status = lm.minimize(x0);
            converged = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                        status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
        }
        return x0;
    };
    auto usable = [&](const Eigen::VectorXd& x) {
        if (!x.allFinite()) return false;
        std::vector<double> neg_theta;
        for (int j = 0; j < order.q; ++j) neg_theta.push_back(-x(order.p + j));
        return roots_outside_unit_circle(neg_theta);
    };

    bool converged = true;
    Eigen::VectorXd x;
    if (!start.empty()) {
        if (static_cast<int>(start.size()) != css.size()) throw ConfigError("start vector has the wrong length");
        x = solve(Eigen::Map<const Eigen::VectorXd>(start.data(), css.size()), converged);
    }
    // A warm start can sit in the non-invertible region, where CSS residuals grow without bound.
    if (start.empty() || !usable(x)) {
        bool cold_converged = true;
        Eigen::VectorXd cold = solve(initial_guess(css), cold_converged);
        if (start.empty() || usable(cold) || !x.allFinite()) {
            x = cold;
            converged = cold_converged;
        }
    }
    m.converged = converged;
    if (!m.converged) m.flags.push_back("optimizer did not converge");
    if (!x.allFinite()) throw NumericError("ARIMA" + order.to_string() + " estimates are not finite");

    std::vector<double> e;
    css.residuals(x, e);
    double ss = 0.0;
    for (std::size_t t = css.first; t < e.size(); ++t) ss += e[t] * e[t];
    const auto n = static_cast<double>(m.n_eff);
    m.sigma2 = ss / n;
    if (!std::isfinite(m.sigma2) || !(m.sigma2 > 0.0)) {
        throw NumericError("ARIMA" + order.to_string() + " residual variance is degenerate");
    }
    m.log_likelihood = -0.5 * n * (std::log(2.0 * std::numbers::pi * m.sigma2) + 1.0);
    m.aic = 2.0 * m.k - 2.0 * m.log_likelihood;
    m.bic = m.k * std::log(n) - 2.0 * m.log_likelihood;

    for (int i = 0; i < order.p; ++i) m.phi.push_back(x(i));
    for (int j = 0; j < order.q; ++j) m.theta.push_back(x(order.p + j));
    if (with_mu) m.mu = x(order.p + order.q);

    if (css.size() > 0) {
        Eigen::MatrixXd jac;
        css.jacobian(x, e, jac);
        const Eigen::MatrixXd info = jac.transpose() * jac;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
        if (lu.isInvertible()) {
            const Eigen::MatrixXd cov = m.sigma2 * lu.inverse();
            for (int i = 0; i < css.size(); ++i) {
                const double se = std::sqrt(std::max(0.0, cov(i, i)));
                m.std_errors.push_back(se);
                m.z.push_back(se > 0.0 ? x(i) / se : 0.0);
            }
        } else {
            m.flags.push_back("singular information matrix");
            m.std_errors.assign(static_cast<std::size_t>(css.size()), std::numeric_limits<double>::quiet_NaN());
            m.z.assign(static_cast<std::size_t>(css.size()), 0.0);
        }
        for (int i = 0; i < order.p + order.q; ++i) {
            if (!(std::fabs(m.z[static_cast<std::size_t>(i)]) > options.significance_z)) m.significant = false;
        }
    }

    m.stationary = roots_outside_unit_circle(m.phi);
    std::vector<double> neg_theta;
    for (double t : m.theta) neg_theta.push_back(-t);
    m.invertible = roots_outside_unit_circle(neg_theta);
    if (!m.stationary) m.flags.push_back("AR part not stationary");
    if (!m.invertible) m.flags.push_back("MA part not invertible");
    return m;
}

std::vector<double> arima_residuals(const ArimaModel& model, std::span<const double> y) {
    const std::vector<double> w = difference(y, model.order.d);
    const Css css{w, model.order.p, model.order.q, model.has_intercept, static_cast<std::size_t>(model.order.p)};
    if (w.size() < static_cast<std::size_t>(model.order.p)) throw DataError("series shorter than the AR order");
    const auto c = model.coefficients();
    std::vector<double> e;
    css.residuals(Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())), e);
    return e;
}

double forecast_next(const ArimaModel& model, std::span<const double> y) {
    const int d = model.order.d;
    const std::vector<double> w = difference(y, d);
    const std::vector<double> e = arima_residuals(model, y);
    const auto n = w.size();
    double next = model.mu;
    for (int i = 1; i <= model.order.p; ++i) {
        if (static_cast<std::size_t>(i) <= n) next += model.phi[static_cast<std::size_t>(i - 1)] * (w[n - i] - model.mu);
    }
    for (int j = 1; j <= model.order.q; ++j) {
        if (static_cast<std::size_t>(j) <= n) next += model.theta[static_cast<std::size_t>(j - 1)] * e[n - j];
    }
    // Undo the differencing: y_N = w_N - sum_{j=1..d} C(d,j) (-1)^j y_{N-j}.
    const auto N = y.size();
    double level = next;
    for (int j = 1; j <= d; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        level -= binomial(d, j) * sign * y[N - static_cast<std::size_t>(j)];
    }
    if (!std::isfinite(level)) throw NumericError("non-finite ARIMA forecast");
    return level;
}

double adf_statistic(std::span<const double> y, int lags) {
    if (lags < 0) throw ConfigError("ADF lag count must be non-negative");
    const auto k = static_cast<std::size_t>(lags);
    if (y.size() < k + 10) throw DataError("series too short for a unit-root test");
    const std::vector<double> dy = difference(y, 1);
    // Rows t = k..dy.size()-1: dy_t = a + g y_t + sum b_i dy_{t-i}; dy_t = y_{t+1} - y_t.
    const auto rows = static_cast<Eigen::Index>(dy.size() - k);
    const auto cols = static_cast<Eigen::Index>(2 + k);
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd Y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + k;
        Y(r) = dy[t];
        X(r, 0) = 1.0;
        X(r, 1) = y[t];
        for (std::size_t i = 1; i <= k; ++i) X(r, static_cast<Eigen::Index>(1 + i)) = dy[t - i];
    }
    const Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) return -std::numeric_limits<double>::infinity();  // e.g. a constant series
    const Eigen::VectorXd beta = lu.solve(X.transpose() * Y);
    const Eigen::VectorXd resid = Y - X * beta;
    const double s2 = resid.squaredNorm() / static_cast<double>(rows - cols);
    const double se = std::sqrt(s2 * lu.inverse()(1, 1));
    if (!(se > 0.0)) return -std::numeric_limits<double>::infinity();
    return beta(1) / se;
}

double adf_critical_5pct(std::size_t n) {
    const double t = static_cast<double>(n);
    return -2.8621 - 2.738 / t - 8.36 / (t * t);
}

int min_differencing(std::span<const double> y, int max_d) {
    for (int d = 0; d < max_d; ++d) {
        const std::vector<double> w = difference(y, d);
        const int lags = static_cast<int>(std::cbrt(static_cast<double>(w.size() - 1)));
        if (w.size() < static_cast<std::size_t>(lags) + 10) return d;
        if (adf_statistic(w, lags) < adf_critical_5pct(w.size())) return d;
    }
    return std::max(0, max_d);
}

OrderSearch select_order(std::span<const double> y, int max_order, const ArimaOptions& options, int workers) {
    if (max_order < 0) throw ConfigError("max_order must be non-negative");
    OrderSearch out;
    // AIC cannot tell a unit root from a near-unit AR root, so the differencing floor comes from a test.
    out.min_d = min_differencing(y, max_order);
    std::vector<ArimaOrder> grid;
    for (int p = 0; p <= max_order; ++p) {
        for (int d = out.min_d; d <= max_order; ++d) {
            for (int q = 0; q <= max_order; ++q) grid.push_back({p, d, q});
        }
    }
    // Candidates with different d would otherwise be scored on different observations.
    ArimaOptions common = options;
    common.condition_on = std::max(options.condition_on, 2 * max_order);
    std::vector<std::optional<ArimaModel>> fits(grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                fits[i] = fit_arima(y, grid[i], common);
            } catch (const Error&) {
                // Candidate cannot be estimated on this data; it simply drops out.
            }
        }
    };
    const int n_threads = std::max(1, workers);
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (auto& f : fits) {
        if (f) out.candidates.push_back(std::move(*f));
    }
    if (out.candidates.empty()) throw NumericError("no ARIMA candidate could be estimated");
    auto better = [](const ArimaModel& a, const ArimaModel& b) {
        if (a.aic != b.aic) return a.aic < b.aic;
        if (a.bic != b.bic) return a.bic < b.bic;
        return std::tie(a.order.p, a.order.d, a.order.q) < std::tie(b.order.p, b.order.d, b.order.q);
    };
    const ArimaModel* best = nullptr;
    for (const auto& c : out.candidates) {
        if (!c.significant || !c.converged || !c.stationary || !c.invertible) continue;
        if (!best || better(c, *best)) best = &c;
    }
    if (!best) {
        out.fallback = true;
        for (const auto& c : out.candidates) {
            if (!best || better(c, *best)) best = &c;
        }
    }
    out.best = *best;
    if (out.fallback) out.best.flags.push_back("no candidate had all coefficients significant at 5%");
    return out;
}

ArimaRolling rolling_forecast(const ArimaModel& spec, const PriceSeries& series, const DateRange& range,
                              RefitMode mode, const ArimaOptions& options) {
    std::vector<double> y;
    y.reserve(series.size());
    for (const auto& b : series.bars) y.push_back(b.adj_close);
    auto [begin, end] = index_range(dates_of(series), range);
    if (begin >= end) throw DataError("no trading days in the forecast range");

    ArimaRolling out;
    out.last_model = spec;
    for (std::size_t t = begin; t < end; ++t) {
        const std::span<const double> hist(y.data(), t + 1);
        if (mode == RefitMode::growing) {
            try {
                auto refit = fit_arima(hist, spec.order, options, out.last_model.coefficients());
                if (!refit.invertible && out.last_model.invertible) {
                    out.warnings.push_back(series.bars[t].date.to_string() + ": ARIMA" + spec.order.to_string() +
                                           " refit is not invertible; previous coefficients kept");
                } else {
                    out.last_model = std::move(refit);
                }
            } catch (const Error& e) {
                out.warnings.push_back(series.bars[t].date.to_string() + ": " + e.what() +
                                       "; previous coefficients kept");
            }
        }
        std::optional<double> y_hat;
        try {
            y_hat = forecast_next(out.last_model, hist);
        } catch (const Error& e) {
            out.warnings.push_back(series.bars[t].date.to_string() + ": " + e.what() + "; day skipped");
        }
        std::optional<double> y_next;
        if (t + 1 < y.size()) y_next = y[t + 1];
        out.records.push_back(make_record(series.bars[t].date, y[t], y_hat, y_next));
    }
    return out;
}

const char* to_string(RefitMode mode) { return mode == RefitMode::growing ? "growing" : "fixed"; }

}  // namespace lstmtrade
